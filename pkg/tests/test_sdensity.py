import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from polaron.params import PhysicalConfig, derive_scales, prepare, reference_config
from polaron.sdensity import (DensityForm, bath_spec, j_density_cubic, j_density_cutoff,
                              j_density_full, j_spin_full, j_spin_gapped, spin_band_integral)

REF_SI = derive_scales(reference_config())
REF = prepare(reference_config())[2]
# Omega = 0 with g > g12 so that both branch cutoffs are finite and distinct
NO_GAP_SI = derive_scales(PhysicalConfig(Omega=0.0, g1=3.0e-37, g2=3.0e-37, g12=2.15e-37))


def swapped_density_scales(scales):
    """Density-form inputs with the spin cutoff swapped in."""
    ratio = math.sqrt(scales.Lambda_plus / scales.Lambda_minus)
    return dataclasses.replace(scales, Lambda_minus=scales.Lambda_plus,
                               tau_tilde_minus=scales.tau_tilde_minus * ratio)


def test_full_density_vanishes_at_zero():
    assert j_density_full(0.0, REF_SI) == 0.0


def test_full_density_reduces_to_cubic_at_low_frequency():
    w = REF_SI.Lambda_minus / 100
    assert abs(j_density_full(w, REF_SI) / j_density_cubic(w, REF_SI) - 1) < 1e-3


def test_full_density_at_the_cutoff():
    # F = 2, G = sqrt(2) - 1, J = tau~ G^{3/2} / sqrt(F)
    got = j_density_full(REF_SI.Lambda_minus, REF_SI)
    assert math.isclose(got, REF_SI.tau_tilde_minus * (math.sqrt(2) - 1) ** 1.5 / math.sqrt(2),
                        rel_tol=1e-14)


def test_cubic_scaling_is_exact():
    w = np.array([0.3, 1.7, 12.0])
    np.testing.assert_array_equal(j_density_cubic(2 * w, REF), 8 * j_density_cubic(w, REF))
    assert j_density_cubic(0.0, REF) == 0.0


def test_cutoff_form_has_finite_support():
    lam = REF.Lambda_minus
    assert j_density_cutoff(1.01 * lam, REF) == 0.0
    assert j_density_cutoff(0.5 * lam, REF) == j_density_cubic(0.5 * lam, REF)


def test_spin_full_equals_density_form_without_gap():
    s = NO_GAP_SI
    assert s.E_gap == 0.0
    w = np.linspace(0.0, 20.0 * s.Lambda_minus, 100)
    np.testing.assert_allclose(j_spin_full(w, s), j_density_full(w, swapped_density_scales(s)),
                               rtol=1e-9, atol=0.0)


def test_spin_full_vanishes_at_and_below_gap():
    assert j_spin_full(REF_SI.E_gap, REF_SI) == 0.0
    vals, below = j_spin_full(np.array([0.0, 0.5, 0.99]) * REF_SI.E_gap, REF_SI, return_flag=True)
    assert np.all(vals == 0.0) and np.all(below)


def test_spin_full_near_gap_square_root():
    s = REF_SI
    eps = s.E_gap / 100
    approx = s.m_I * s.tau_plus_near_gap * math.sqrt(eps)
    assert abs(j_spin_full(s.E_gap + eps, s) / approx - 1) < 0.02


def test_spin_full_near_gap_correction_is_linear():
    # with g > g12 the first correction is larger but still O(eps / E_gap)
    s = derive_scales(PhysicalConfig(g1=2.5e-37, g2=2.5e-37, g12=2.15e-37))
    devs = []
    for frac in (1e-2, 1e-3, 1e-4):
        eps = frac * s.E_gap
        devs.append(j_spin_full(s.E_gap + eps, s) / (s.m_I * s.tau_plus_near_gap * math.sqrt(eps)) - 1)
    assert abs(devs[2]) < 1e-3
    assert 9 < devs[0] / devs[1] < 11 and 9 < devs[1] / devs[2] < 11


def test_spin_full_finite_at_equal_couplings():
    assert REF_SI.Lambda_plus == 0.0
    w = np.linspace(REF_SI.E_gap, 10 * REF_SI.E_gap, 50)
    assert np.all(np.isfinite(j_spin_full(w, REF_SI)))


def test_spin_full_rejects_imaginary_branch():
    s = dataclasses.replace(REF_SI, Lambda_plus=-1.0)
    with pytest.raises(ValueError):
        j_spin_full(1.0, s)


def test_gapped_density_steps_and_unit_value():
    E, lam = REF.E_gap, REF.Lambda
    assert j_spin_gapped(0.5 * E, REF) == 0.0
    assert j_spin_gapped(E + lam + 1e-9, REF) == 0.0
    assert math.isclose(j_spin_gapped(E + 1.0, REF), 1.0, rel_tol=1e-15)


@settings(max_examples=60, deadline=None)
@given(eps=st.floats(1e-4, 2.4))
def test_gapped_square_root_scaling(eps):
    E = REF.E_gap
    assert math.isclose(j_spin_gapped(E + 4 * eps, REF), 2 * j_spin_gapped(E + eps, REF), rel_tol=1e-12)


def test_gapped_band_integral():
    E, lam = REF.E_gap, REF.Lambda
    val, _ = integrate.quad(lambda w: j_spin_gapped(w, REF), E, E + lam, epsabs=0, epsrel=1e-13,
                            limit=200)
    assert abs(val / spin_band_integral(REF) - 1) < 1e-10


@settings(max_examples=60, deadline=None)
@given(w=st.floats(0.0, 1e3))
def test_all_densities_non_negative(w):
    for fn in (j_density_full, j_density_cubic, j_density_cutoff, j_spin_full, j_spin_gapped):
        assert fn(w, REF) >= 0.0


def test_bath_spec_supports_and_dispatch():
    spin = bath_spec("spin", REF)
    assert spin.support == (REF.E_gap, REF.E_gap + REF.Lambda)
    assert spin(REF.E_gap + 1.0) == j_spin_gapped(REF.E_gap + 1.0, REF)
    dens = bath_spec("density", REF, DensityForm.FULL)
    assert dens.support == (0.0, math.inf)
    assert dens(0.3) == j_density_full(0.3, REF)
    assert bath_spec("density", REF).support == (0.0, REF.Lambda_minus)
