import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from polaron.specfun import (CancellationError, HypergeometricConvergenceError, hyp1f2,
                             hyp1f2_array, hyp2f1, hyp2f1_array, hyp2f1_kernel_family,
                             pochhammer)

mpmath.mp.dps = 30


def test_pochhammer_values():
    assert pochhammer(7.3, 0) == 1.0
    assert pochhammer(3, 4) == 360.0
    assert pochhammer(-0.5, 2) == -0.25


def test_pochhammer_rejects_bad_n():
    with pytest.raises(ValueError):
        pochhammer(1.0, -1)
    with pytest.raises(ValueError):
        pochhammer(1.0, 1.5)


def test_pochhammer_overflow_reports_magnitude():
    with pytest.raises(OverflowError, match="overflows"):
        pochhammer(10.0, 400)


def test_hyp2f1_at_origin():
    assert hyp2f1(1, 1.5, 2.5, 0).value == 1.0


def test_hyp2f1_log_identity():
    res = hyp2f1(1, 1, 2, 0.5)
    assert abs(res.value.real - 2 * math.log(2)) < 1e-13
    assert res.converged


def test_hyp2f1_negative_argument_against_euler_integral():
    a, b, c, z = 1.0, 1.5, 2.5, -10.0
    integral, _ = integrate.quad(lambda t: t ** (b - 1) * (1 - t) ** (c - b - 1) * (1 - z * t) ** (-a),
                                 0, 1, epsabs=0, epsrel=1e-13)
    expected = integral * special.gamma(c) / (special.gamma(b) * special.gamma(c - b))
    assert abs(hyp2f1(a, b, c, z).value.real / expected - 1) < 1e-10


@pytest.mark.parametrize("a,b,c", [(1, 1.5, 2.5), (-0.5, -0.5, 0.5), (2, 2.5, 3.5), (0.3, 1.7, 2.2)])
@pytest.mark.parametrize("z", [-1e3, -50, -3, -0.99, -0.4, 0.2, 0.7, 0.95, 0.5 + 0.5j, -2 + 3j, 2 + 1e-3j])
def test_hyp2f1_against_mpmath(a, b, c, z):
    if a == b and abs(z) > 200:
        pytest.skip("degenerate a = b far from the origin is covered by the raise test")
    expected = complex(mpmath.hyp2f1(a, b, c, z))
    got = hyp2f1(a, b, c, z).value
    assert abs(got - expected) <= 1e-10 * max(abs(expected), 1.0)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(-200.0, 0.9), y=st.floats(-5.0, 5.0))
def test_hyp2f1_property_matches_mpmath(x, y):
    z = complex(x, y)
    if abs(z - 1) < 0.05:
        return
    expected = complex(mpmath.hyp2f1(1, 1.5, 2.5, z))
    got = hyp2f1(1, 1.5, 2.5, z).value
    assert abs(got - expected) <= 1e-9 * max(abs(expected), 1.0)


def test_hyp2f1_array_shapes_and_flags():
    z = np.linspace(-20, 0.9, 50)
    value, terms, err, ok = hyp2f1_array(1, 1.5, 2.5, z)
    assert value.shape == terms.shape == err.shape == ok.shape == z.shape
    assert ok.all()
    ref = np.array([float(mpmath.hyp2f1(1, 1.5, 2.5, v)) for v in z])
    np.testing.assert_allclose(value.real, ref, rtol=1e-11)


def test_hyp2f1_rejects_nonpositive_integer_c():
    with pytest.raises(ValueError):
        hyp2f1(1, 1, -2, 0.3)


def test_hyp2f1_degenerate_far_argument_raises_instead_of_guessing():
    # b - a integer removes the 1/z route; the remaining series converge too slowly
    with pytest.raises(HypergeometricConvergenceError):
        hyp2f1(-0.5, -0.5, 0.5, -1e3)


def test_hyp2f1_elementary_identity():
    for x in (0.3, 1.0, 10.0, 150.0):
        expected = math.sqrt(1 + x) - math.sqrt(x) * math.asinh(math.sqrt(x))
        assert abs(hyp2f1(-0.5, -0.5, 0.5, -x).value.real - expected) < 1e-10 * max(1, abs(expected))


def test_hyp2f1_term_cap_raises():
    with pytest.raises(HypergeometricConvergenceError):
        hyp2f1(1, 1.5, 2.5, 0.99, max_terms=5)


def test_kernel_family_matches_general_route():
    w = np.concatenate([-np.logspace(-4, 4, 40), np.linspace(-0.49, 0.49, 11)]) + 0j
    w = np.append(w, [-3 + 2j, 0.2 - 0.7j, -100 - 50j])
    ref = np.array([complex(mpmath.hyp2f1(1, 1.5, 2.5, v)) for v in w])
    np.testing.assert_allclose(hyp2f1_kernel_family(w), ref, rtol=1e-12)


def test_hyp1f2_at_origin():
    assert hyp1f2(0.75, 0.5, 1.75, 0.0).value == 1.0


@pytest.mark.parametrize("args", [(0.75, 0.5, 1.75, -1.0), (1.25, 1.5, 2.25, -25.0),
                                  (0.75, 0.5, 1.75, -30.0), (1.25, 1.5, 2.25, 3.0)])
def test_hyp1f2_against_high_precision_series(args):
    a, b, c, x = args
    with mpmath.workdps(60):
        expected = float(mpmath.nsum(lambda n: mpmath.rf(a, n) / (mpmath.rf(b, n) * mpmath.rf(c, n))
                                     * mpmath.mpf(x) ** n / mpmath.factorial(n), [0, 200]))
    assert abs(hyp1f2(*args).value.real - expected) <= 1e-10 * max(abs(expected), 1.0)


def test_hyp1f2_noise_reconstruction_by_quadrature():
    # int_0^1 eps^{3/2} cos(L t eps) d eps  ->  1F2(5/4; 1/2, 9/4; -(L t)^2/4) * 2/5
    lt = 10.0
    integral, _ = integrate.quad(lambda e: e ** 1.5 * math.cos(lt * e), 0, 1, epsabs=0, epsrel=1e-13,
                                 limit=200)
    got = 0.4 * hyp1f2(1.25, 0.5, 2.25, -lt * lt / 4).value.real
    assert abs(got - integral) < 1e-10


def test_hyp1f2_array_vectorized():
    x = -np.linspace(0, 30, 20)
    value, _, err, ok = hyp1f2_array(1.25, 1.5, 2.25, x)
    ref = np.array([float(mpmath.hyp1f2(1.25, 1.5, 2.25, v)) for v in x])
    np.testing.assert_allclose(value.real, ref, rtol=1e-9, atol=1e-10)
    # near zeros of the oscillating function only the absolute error is small;
    # the estimate stays honest there
    assert np.all(np.abs(value.real - ref) <= np.maximum(err, 1e-15))


@pytest.mark.parametrize("x", [-100.0, -1e5])
def test_hyp1f2_cancellation_raises(x):
    with pytest.raises(CancellationError) as info:
        hyp1f2(0.75, 0.5, 1.75, x)
    assert info.value.partial.est_error > 0
