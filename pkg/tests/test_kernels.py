import math

import numpy as np
import pytest
from scipy import integrate

from polaron.kernels import (GreenMode, build_kernels, density_zeta, gamma0, gamma_density,
                             gamma_density_printed, gamma_spin, green_functions,
                             noise_density_lowT, noise_general, noise_kernel, noise_spin_band,
                             noise_spin_hypergeometric, noise_spin_lowT, noise_spin_printed,
                             spin_slope, spin_slope_moment, thermal_occupation)
from polaron.specfun import hyp2f1


def _quad_cos(f, a, b, t):
    if t == 0:
        return integrate.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=500)[0]
    return integrate.quad(f, a, b, weight="cos", wvar=t, epsabs=1e-14, epsrel=1e-12, limit=2000)[0]


# --- density branch ------------------------------------------------------------------

def test_density_damping_zero_time_value(density_dim_single):
    d = density_dim_single
    assert math.isclose(gamma_density(0.0, d), d.tau_minus * d.Lambda_minus ** 3 / 3, rel_tol=1e-14)
    assert math.isclose(gamma_density(1e-9, d), d.tau_minus * d.Lambda_minus ** 3 / 3, rel_tol=1e-12)


def test_density_damping_zero_coupling(density_dim):
    assert gamma_density(0.3, density_dim.replace(tau_minus=0.0)) == 0.0


@pytest.mark.parametrize("factor", [1e-3, 0.09, 0.11, 1.0, 10.0, 300.0])
def test_density_damping_vs_quadrature(density_dim_single, factor):
    d = density_dim_single
    t = factor / d.Lambda_minus
    ref = _quad_cos(lambda w: d.tau_minus * w * w, 0.0, d.Lambda_minus, t)
    assert abs(gamma_density(t, d) - ref) <= 1e-8 * d.tau_minus * d.Lambda_minus ** 3


def test_density_damping_carries_channel_weight(density_dim, density_dim_single):
    t = np.linspace(0, 1, 7)
    np.testing.assert_allclose(gamma_density(t, density_dim), 2 * gamma_density(t, density_dim_single))


def test_printed_density_damping_misses_zero_time_limit(density_dim_single):
    d = density_dim_single
    t = 1e-3 / d.Lambda_minus
    assert abs(gamma_density_printed(t, d) / gamma_density(t, d) - 1) > 0.5


@pytest.mark.parametrize("factor", [0.0, 0.2, 0.6, 3.0, 50.0])
def test_density_noise_vs_quadrature(density_dim, factor):
    d = density_dim
    t = factor / d.Lambda_minus
    ref = _quad_cos(lambda w: d.tau_minus * w ** 3, 0.0, d.Lambda_minus, t)
    assert abs(noise_density_lowT(t, d) - ref) <= 1e-10 * d.tau_minus * d.Lambda_minus ** 4


def test_density_noise_zero_time(density_dim):
    d = density_dim
    assert math.isclose(noise_density_lowT(0.0, d), d.tau_minus * d.Lambda_minus ** 4 / 4, rel_tol=1e-14)


# --- spin branch ---------------------------------------------------------------------

@pytest.mark.parametrize("t", [0.0, 0.05, 1.0, 7.3, 40.0])
def test_spin_damping_vs_quadrature(ref_dim, t):
    d = ref_dim
    f = lambda w: d.damping_channels * d.tau_plus * math.sqrt(max(w - d.E_gap, 0.0)) / w  # noqa: E731
    ref = _quad_cos(f, d.E_gap, d.E_gap + d.Lambda, t)
    assert abs(gamma_spin(t, d) - ref) <= 1e-9 * abs(gamma_spin(0.0, d))


def test_spin_damping_zero_time_closed_form(ref_dim_single):
    d = ref_dim_single
    E, L, tau = d.E_gap, d.Lambda, d.tau_plus
    closed = tau * (-math.pi * math.sqrt(E) + 2 * math.sqrt(L + E) * hyp2f1(-0.5, -0.5, 0.5, E / (L + E)).value.real)
    assert abs(gamma_spin(0.0, d) / closed - 1) < 1e-6


def test_spin_damping_zero_coupling(ref_dim):
    assert gamma_spin(2.0, ref_dim.replace(tau_plus=0.0)) == 0.0


@pytest.mark.parametrize("t", [0.0, 1e-4, 0.3, 2.0, 25.0])
def test_spin_noise_forms_vs_quadrature(ref_dim, t):
    d = ref_dim
    ref = _quad_cos(lambda w: d.tau_plus * math.sqrt(max(w - d.E_gap, 0.0)), d.E_gap, d.E_gap + d.Lambda, t)
    scale = d.tau_plus * d.Lambda ** 1.5
    assert abs(noise_spin_band(t, d) - ref) < 1e-11 * scale
    assert abs(noise_spin_lowT(t, d, form="hypergeometric") - ref) < 1e-8 * scale


def test_spin_noise_zero_time_band_value(ref_dim):
    d = ref_dim
    assert math.isclose(noise_spin_band(0.0, d), 2 / 3 * d.tau_plus * d.Lambda ** 1.5, rel_tol=1e-14)
    # the printed form carries (Lambda - E)^{3/2} instead
    assert math.isclose(noise_spin_printed(0.0, d), 2 / 3 * d.tau_plus * (d.Lambda - d.E_gap) ** 1.5,
                        rel_tol=1e-12)


def test_spin_noise_hypergeometric_flags_cancellation(ref_dim):
    vals, ok = noise_spin_hypergeometric(np.array([0.1, 500.0]), ref_dim)
    assert ok[0] and not ok[1]
    fallback = noise_spin_lowT(np.array([0.1, 500.0]), ref_dim, form="hypergeometric")
    assert abs(fallback[1] - noise_spin_band(500.0, ref_dim)) < 1e-14


def test_spin_noise_unknown_form(ref_dim):
    with pytest.raises(ValueError):
        noise_spin_lowT(1.0, ref_dim, form="tabulated")


def test_spin_noise_zero_coupling(ref_dim):
    assert noise_spin_band(3.0, ref_dim.replace(tau_plus=0.0)) == 0.0


def test_spin_noise_lower_edge_decay(ref_dim):
    # after removing the hard upper band edge (a sin/t term), the square-root
    # threshold leaves an envelope decaying as t^{-3/2}
    d = ref_dim
    upper = d.E_gap + d.Lambda
    peaks, times = [], []
    period = 2 * math.pi / d.E_gap
    for start in np.logspace(1.5, 3.5, 7):
        t = np.linspace(start, start + period, 600)
        nu = noise_general(t, 0.0, "spin", d, tol=1e-7)
        edge = d.tau_plus * math.sqrt(d.Lambda) * np.sin(upper * t) / t
        peaks.append(np.max(np.abs(nu - edge)))
        times.append(start)
    slope = np.polyfit(np.log(times), np.log(peaks), 1)[0]
    assert abs(slope + 1.5) < 0.1


# --- temperature -----------------------------------------------------------------

def test_thermal_occupation_limits():
    assert np.all(thermal_occupation([0.1, 5.0], 0.0) == 0.0)
    assert math.isclose(thermal_occupation(1.0, 1.0), 1 / math.tanh(0.5) - 1, rel_tol=1e-14)


@pytest.mark.parametrize("branch", ["density", "spin"])
def test_noise_at_vanishing_temperature(ref_dim, density_dim, branch):
    d = density_dim if branch == "density" else ref_dim
    t = np.linspace(0, 20, 11)
    low = noise_kernel(t, d, branch, 0.0)
    tiny = noise_kernel(t, d, branch, 1e-6)
    np.testing.assert_allclose(tiny, low, rtol=0, atol=1e-8 * np.max(np.abs(low)))


@pytest.mark.parametrize("branch,T", [("spin", 0.05), ("spin", 0.5), ("spin", 5.0),
                                      ("density", 0.5), ("density", 20.0)])
def test_thermal_noise_vs_quadrature(ref_dim, density_dim, branch, T):
    d = density_dim if branch == "density" else ref_dim
    t = np.array([0.0, 0.1, 1.0, 4.0, 15.0])
    got = noise_kernel(t, d, branch, T)
    ref = noise_general(t, T, branch, d)
    assert np.max(np.abs(got - ref)) < 1e-5 * np.max(np.abs(ref))


def test_density_noise_linear_in_high_temperature(density_dim):
    d = density_dim
    T = 1e3 * d.Lambda_minus
    t = np.array([0.0, 0.01, 0.05])
    ratio = noise_general(t, 2 * T, "density", d) / noise_general(t, T, "density", d)
    np.testing.assert_allclose(ratio, 2.0, rtol=1e-6)


def test_noise_general_rejects_negative_temperature(ref_dim):
    with pytest.raises(ValueError):
        noise_general(1.0, -1.0, "spin", ref_dim)


# --- zero-time damping ----------------------------------------------------------------

def test_gamma0_density_closed_vs_quadrature(density_dim_single):
    g = gamma0("density", density_dim_single)
    d = density_dim_single
    assert math.isclose(g.closed_form, d.tau_minus * d.Lambda_minus ** 3 / 3, rel_tol=1e-15)
    assert g.deviation < 1e-10


@pytest.mark.parametrize("E", [0.2, 0.1, 0.4, 1.0])
def test_gamma0_spin_closed_vs_quadrature(ref_dim, E):
    g = gamma0("spin", ref_dim.replace(E_gap=E))
    assert g.deviation < 1e-6
    assert g.value == g.quadrature


def test_gamma0_zero_coupling(ref_dim):
    assert gamma0("spin", ref_dim.replace(tau_plus=0.0)).value == 0.0


# --- Green functions ----------------------------------------------------------------

def test_free_particle_limits(ref_dim, density_dim):
    spin = green_functions("spin", ref_dim.replace(tau_plus=0.0))
    assert spin.g2_slope == 1.0
    dens = green_functions("density", density_dim.replace(tau_minus=0.0))
    assert density_zeta(density_dim.replace(tau_minus=0.0)) == 1.0
    t = np.array([0.5, 3.0, 20.0])
    np.testing.assert_allclose(spin.g2(t), t, rtol=1e-6)
    np.testing.assert_allclose(dens.g2(t), t, rtol=1e-6)


def test_spin_slope_closed_form_vs_moment(ref_dim):
    d = ref_dim
    moment = 1.0 / (1.0 + d.damping_channels * d.tau_plus * spin_slope_moment(d))
    assert abs(spin_slope(d) / moment - 1) < 1e-10


def test_spin_green_function_slope(ref_dim):
    g = green_functions("spin", ref_dim, GreenMode.NUMERIC)
    t = np.linspace(10, 100, 91)
    slope = np.polyfit(t, g.g2(t), 1)[0]
    assert abs(slope / g.g2_slope - 1) < 0.05


def test_green_functions_start_correctly(ref_dim):
    g = green_functions("spin", ref_dim)
    assert g.g2(0.0) == 0.0 and g.g1(0.0) == 1.0
    assert abs(g.g2(1e-3) - 1e-3) < 1e-6


def test_density_green_function_tends_to_linear_law(density_dim):
    g = green_functions("density", density_dim)
    t = np.array([10.0, 50.0])
    np.testing.assert_allclose(g.g2(t), t / density_zeta(density_dim), rtol=1e-3)


def test_build_kernels_requires_gap(ref_dim):
    with pytest.raises(ValueError):
        build_kernels("spin", ref_dim.replace(E_gap=0.0))


def test_build_kernels_bundle(ref_dim):
    k = build_kernels("spin", ref_dim, T=0.0)
    assert k.omega_max == ref_dim.E_gap + ref_dim.Lambda
    assert k.gamma0.value == gamma0("spin", ref_dim).value
    assert math.isclose(k.nu(0.0), noise_spin_band(0.0, ref_dim))
