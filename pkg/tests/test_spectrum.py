import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.constants import hbar

from polaron.params import PhysicalConfig, derive_scales, prepare, reference_config
from polaron.spectrum import (BranchLabel, GeneralSpectrumInput, GroundState, InsideGapError,
                              UnstableSpectrumError, bogoliubov_amplitudes, dispersion_general,
                              dispersion_symmetric, ground_state, inverse_dispersion,
                              inverse_dispersion_dimensionless, symmetric_general_input)

REF = derive_scales(reference_config())


def _healing(scales):
    return math.sqrt(scales.m_B * scales.n * (scales.g + scales.g12)) / hbar


def test_branch_label_parsing():
    assert BranchLabel.parse("Density") is BranchLabel.DENSITY
    assert BranchLabel.parse("+") is BranchLabel.SPIN
    with pytest.raises(ValueError):
        BranchLabel.parse("up")


def test_zero_momentum_values():
    assert dispersion_symmetric(0.0, "density", REF) == 0.0
    assert math.isclose(dispersion_symmetric(0.0, "spin", REF), REF.E_gap, rel_tol=1e-14)


def test_density_branch_is_linear_with_sound_speed():
    k = np.linspace(1e-4, 1e-2, 20) * _healing(REF)
    ratio = dispersion_symmetric(k, "density", REF) / (REF.c_d * k)
    assert np.all(np.abs(ratio - 1) < 0.01)


@pytest.mark.parametrize("cfg", [reference_config(),
                                 PhysicalConfig(g1=3e-37, g2=3e-37, g12=2e-37, Omega=80.0),
                                 PhysicalConfig(Omega=0.0)])
def test_general_form_reduces_to_symmetric_branches(cfg):
    s = derive_scales(cfg)
    k = np.linspace(0.0, 5.0, 200) * _healing(s)
    upper, lower = dispersion_general(k, symmetric_general_input(k, s))
    e_m = dispersion_symmetric(k, "density", s)
    e_p = dispersion_symmetric(k, "spin", s)
    np.testing.assert_allclose(upper, np.maximum(e_m, e_p), rtol=1e-10, atol=1e-10 * s.Lambda_minus)
    np.testing.assert_allclose(lower, np.minimum(e_m, e_p), rtol=1e-10, atol=1e-10 * s.Lambda_minus)


def test_general_form_zero_momentum():
    s = derive_scales(PhysicalConfig(Omega=0.0))
    upper, lower = dispersion_general(0.0, symmetric_general_input(0.0, s))
    assert lower == 0.0
    s = derive_scales(reference_config())
    upper, lower = dispersion_general(0.0, symmetric_general_input(0.0, s))
    assert math.isclose(upper, s.E_gap, rel_tol=1e-12)


def test_branches_cross_when_interspecies_term_dominates():
    # 4 Omega < 2 g12 n / hbar: the spin branch drops below the density branch at large k
    s = REF
    assert 4 * s.Omega < 2 * s.g12 * s.n / hbar
    k = 50 * _healing(s)
    assert dispersion_symmetric(k, "spin", s) < dispersion_symmetric(k, "density", s)


def test_unstable_inputs_raise():
    inp = GeneralSpectrumInput(1.0, 1.0, -1.0, -1.0, 0.0, 1.0, 1.0, math.pi / 4)
    with pytest.raises(UnstableSpectrumError):
        dispersion_general(1.0, inp)


def test_inverse_at_band_edges():
    assert inverse_dispersion(0.0, "density", REF) == 0.0
    assert inverse_dispersion(REF.E_gap, "spin", REF) == 0.0


def test_inverse_rejects_gap_and_negative_frequencies():
    with pytest.raises(InsideGapError):
        inverse_dispersion(0.5 * REF.E_gap, "spin", REF)
    with pytest.raises(ValueError):
        inverse_dispersion(-1.0, "density", REF)


@settings(max_examples=80, deadline=None)
@given(frac=st.floats(0.0, 1.0), branch=st.sampled_from(["density", "spin"]))
def test_inverse_roundtrip(frac, branch):
    lo = REF.E_gap if branch == "spin" else 0.0
    omega = lo + frac * (10 * 1000 * math.pi - lo)
    back = dispersion_symmetric(inverse_dispersion(omega, branch, REF), branch, REF)
    assert abs(back - omega) <= 1e-9 * max(omega, 1.0)


def test_dimensionless_inverse_matches_si():
    dim = prepare(reference_config())[2]
    om = np.linspace(dim.E_gap, 10.0, 30)
    for branch in ("density", "spin"):
        k_dim = inverse_dispersion_dimensionless(om, branch, dim)
        k_si = inverse_dispersion(om * dim.omega_unit, branch, REF)
        np.testing.assert_allclose(k_dim, k_si * dim.length_unit, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("branch", ["density", "spin"])
def test_amplitude_product_is_one_half(branch):
    k = np.logspace(-3, 2, 40) * _healing(REF)
    f, ft = bogoliubov_amplitudes(k, branch, REF)
    np.testing.assert_allclose(f * ft, 0.5, rtol=1e-14)


@pytest.mark.parametrize("branch", ["density", "spin"])
def test_amplitudes_become_equal_at_large_momentum(branch):
    # 1 - f/f~ decays like (interaction scale)/e_k: 1e-3 needs e_k above 1000 times it
    s = REF
    scale = max(s.n * s.g, hbar * s.Omega)
    for factor, bound in ((100, 1.01e-2), (1000, 1.01e-3)):
        k = math.sqrt(2 * s.m_B * factor * scale) / hbar
        f, ft = bogoliubov_amplitudes(k, branch, s)
        assert abs(f / ft - 1) < bound


def test_amplitude_ratio_follows_leading_asymptotics():
    s = REF
    e = 1e4 * s.Lambda_minus
    k = math.sqrt(2 * s.m_B * e / hbar)
    f, ft = bogoliubov_amplitudes(k, "density", s)
    assert math.isclose(1 - f / ft, s.Lambda_minus / e, rel_tol=1e-3)


def test_amplitudes_reject_condensate_mode():
    with pytest.raises(ValueError):
        bogoliubov_amplitudes(0.0, "density", REF)


def test_ground_state_balanced_for_equal_couplings():
    gs = ground_state(reference_config())
    assert gs.phase is GroundState.GS1 and gs.supported
    assert gs.n1 == gs.n2 and gs.tan_theta == 1.0 and gs.A == 0.0


def test_ground_state_strong_rabi_stays_balanced():
    cfg = PhysicalConfig(g1=2.2e-37, g2=2.2e-37, g12=2.15e-37, Omega=1e3)
    assert 2 * hbar * cfg.Omega > (cfg.g1 - cfg.g12) * cfg.n
    assert ground_state(cfg).phase is GroundState.GS1


def test_ground_state_polarizes_when_interaction_dominates():
    cfg = PhysicalConfig(g1=5e-37, g2=5e-37, g12=1e-37, Omega=10.0)
    gs = ground_state(cfg)
    assert gs.phase is GroundState.GS2 and not gs.supported
    assert math.isclose(gs.n1 + gs.n2, cfg.n, rel_tol=1e-14)
    assert gs.n1 > gs.n2


def test_ground_state_without_rabi():
    gs = ground_state(PhysicalConfig(Omega=0.0))
    assert gs.phase is GroundState.GS1 and gs.A is None
