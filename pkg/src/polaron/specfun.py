"""Pochhammer symbol and the hypergeometric functions 2F1 and 1F2.

Only real parameters are supported.  The Gauss function is evaluated from
its power series after mapping the argument to the smallest available
series variable among ``z``, ``z/(z-1)`` (Pfaff), ``1/z`` and ``1-z``.
The 1F2 series is entire and is summed directly with compensated
summation; catastrophic cancellation is reported instead of hidden.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma, rgamma, roots_jacobi

from . import _accel


@dataclass(frozen=True)
class HypResult:
    """Value of a hypergeometric series together with its bookkeeping.

    Attributes
    ----------
    value : complex
    terms_used : int
        Largest number of series terms summed (over all pieces of a
        transformation formula).
    converged : bool
    est_error : float
        Absolute error estimate.
    """

    value: complex
    terms_used: int
    converged: bool
    est_error: float


class HypergeometricConvergenceError(ArithmeticError):
    """Series did not reach the requested tolerance within the term cap."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


class CancellationError(ArithmeticError):
    """Alternating series lost too many digits to cancellation."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


def pochhammer(x, n):
    """Rising factorial ``(x)_n = x (x+1) ... (x+n-1)``.

    Raises
    ------
    ValueError
        If ``n`` is negative or not an integer.
    OverflowError
        If the product leaves the double range.
    """
    if int(n) != n or n < 0:
        raise ValueError(f"pochhammer needs a non-negative integer n, got {n!r}")
    out = 1.0
    for k in range(int(n)):
        out *= x + k
        if not math.isfinite(out):
            try:
                mag = (math.lgamma(x + n) - math.lgamma(x)) / math.log(10.0)
                report = f"about 1e{mag:.0f}"
            except ValueError:
                report = "beyond double range"
            raise OverflowError(f"pochhammer({x}, {n}) overflows: magnitude {report}")
    return out


def _is_nonpos_int(v):
    return v <= 0 and float(v).is_integer()


def _is_int(v):
    return float(v).is_integer()


def _euler_ok(a, b, c):
    return (c > b > 0) or (c > a > 0)


def _pick_route(a, b, c, z):
    """Choose, per point, the series variable with the smallest modulus.

    Routes: 0 direct, 1 Pfaff ``z/(z-1)``, 2 ``1/z`` (needs b-a
    non-integer), 3 ``1-z`` and 4 ``1-1/z`` (need c-a-b non-integer),
    5 Euler integral by Gauss-Jacobi quadrature, used near ``exp(+-i pi/3)``
    where every series variable has modulus close to one.
    """
    inf = np.full(z.shape, np.inf)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        cand = [np.abs(z), np.abs(z / (z - 1.0))]
        cand.append(np.abs(1.0 / z) if not _is_int(b - a) else inf)
        if _is_int(c - a - b):
            cand += [inf, inf]
        else:
            cand += [np.abs(1.0 - z), np.abs(1.0 - 1.0 / z)]
    cand = np.vstack(cand)
    cand = np.where(np.isfinite(cand), cand, np.inf)
    route = np.argmin(cand, axis=0)
    best = np.min(cand, axis=0)
    if _euler_ok(a, b, c):
        route = np.where(best > 0.8, 5, route)
    # the direct series is preferred whenever it is already fast
    route = np.where(np.abs(z) <= 0.5, 0, route)
    return route


def _euler_integral(a, b, c, z, n):
    if not c > b > 0:
        a, b = b, a
    x, wts = roots_jacobi(n, c - b - 1.0, b - 1.0)
    t = 0.5 * (1.0 + x)
    wts = wts * 2.0 ** (1.0 - c)
    pref = gamma(c) * rgamma(b) * rgamma(c - b)
    vals = (1.0 - np.multiply.outer(z, t)) ** (-a) @ wts
    return pref * vals


def hyp2f1_array(a, b, c, z, tol=1e-12, max_terms=20000):
    """Vectorized Gauss hypergeometric function.

    Parameters
    ----------
    a, b, c : float
    z : array_like of complex
        Points off the branch cut ``[1, inf)``.

    Returns
    -------
    value, terms_used, est_error, converged : ndarray
    """
    if _is_nonpos_int(c):
        raise ValueError("c must not be a non-positive integer")
    z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    value = np.empty(z.shape, dtype=complex)
    terms = np.zeros(z.shape, dtype=np.int64)
    err = np.zeros(z.shape)
    route = _pick_route(a, b, c, z)
    inner_tol = 0.01 * tol
    series = _accel.series_2f1

    sel = route == 0
    if sel.any():
        v, n, e, _ = series(a, b, c, z[sel], inner_tol, max_terms)
        value[sel], terms[sel], err[sel] = v, n, e

    sel = route == 1
    if sel.any():
        zz = z[sel]
        v, n, e, _ = series(a, c - b, c, zz / (zz - 1.0), inner_tol, max_terms)
        pref = (1.0 - zz) ** (-a)
        value[sel] = pref * v
        terms[sel] = n
        err[sel] = np.abs(pref) * e

    sel = route == 2
    if sel.any():
        zz = z[sel]
        w = 1.0 / zz
        v1, n1, e1, _ = series(a, a - c + 1.0, a - b + 1.0, w, inner_tol, max_terms)
        v2, n2, e2, _ = series(b, b - c + 1.0, b - a + 1.0, w, inner_tol, max_terms)
        c1 = gamma(c) * gamma(b - a) * rgamma(b) * rgamma(c - a)
        c2 = gamma(c) * gamma(a - b) * rgamma(a) * rgamma(c - b)
        # principal branch of (-z)^(-a): valid for |arg(-z)| < pi
        p1 = c1 * (-zz) ** (-a)
        p2 = c2 * (-zz) ** (-b)
        value[sel] = p1 * v1 + p2 * v2
        terms[sel] = np.maximum(n1, n2)
        err[sel] = np.abs(p1) * e1 + np.abs(p2) * e2

    sel = route == 3
    if sel.any():
        zz = z[sel]
        w = 1.0 - zz
        v1, n1, e1, _ = series(a, b, a + b - c + 1.0, w, inner_tol, max_terms)
        v2, n2, e2, _ = series(c - a, c - b, c - a - b + 1.0, w, inner_tol, max_terms)
        c1 = gamma(c) * gamma(c - a - b) * rgamma(c - a) * rgamma(c - b)
        c2 = gamma(c) * gamma(a + b - c) * rgamma(a) * rgamma(b)
        p2 = c2 * w ** (c - a - b)
        value[sel] = c1 * v1 + p2 * v2
        terms[sel] = np.maximum(n1, n2)
        err[sel] = np.abs(c1) * e1 + np.abs(p2) * e2

    sel = route == 4
    if sel.any():
        zz = z[sel]
        w = 1.0 - 1.0 / zz
        v1, n1, e1, _ = series(a, a - c + 1.0, a + b - c + 1.0, w, inner_tol, max_terms)
        v2, n2, e2, _ = series(c - a, 1.0 - a, c - a - b + 1.0, w, inner_tol, max_terms)
        c1 = gamma(c) * gamma(c - a - b) * rgamma(c - a) * rgamma(c - b)
        c2 = gamma(c) * gamma(a + b - c) * rgamma(a) * rgamma(b)
        p1 = c1 * zz ** (-a)
        p2 = c2 * (1.0 - zz) ** (c - a - b) * zz ** (a - c)
        value[sel] = p1 * v1 + p2 * v2
        terms[sel] = np.maximum(n1, n2)
        err[sel] = np.abs(p1) * e1 + np.abs(p2) * e2

    sel = route == 5
    if sel.any():
        zz = z[sel]
        hi = _euler_integral(a, b, c, zz, 96)
        lo = _euler_integral(a, b, c, zz, 64)
        value[sel] = hi
        terms[sel] = 96
        err[sel] = np.abs(hi - lo) + 1e-15 * np.abs(hi)

    converged = err <= tol * np.maximum(np.abs(value), 1e-300)
    return value, terms, err, converged


def hyp2f1(a, b, c, z, tol=1e-12, max_terms=20000):
    """Gauss hypergeometric function 2F1(a, b; c; z) at a single point.

    Returns
    -------
    HypResult

    Raises
    ------
    HypergeometricConvergenceError
        If the tolerance is not met within ``max_terms`` terms.
    """
    v, n, e, ok = hyp2f1_array(a, b, c, [z], tol=tol, max_terms=max_terms)
    res = HypResult(complex(v[0]), int(n[0]), bool(ok[0]), float(e[0]))
    if not res.converged:
        raise HypergeometricConvergenceError(
            f"2F1({a}, {b}; {c}; {z}) did not converge: est. error {res.est_error:.3g}",
            res,
        )
    return res


def hyp1f2_array(a, b, c, x, tol=1e-10, max_terms=2000):
    """Vectorized 1F2(a; b, c; x) for real x.

    Returns
    -------
    value, terms_used, est_error, converged : ndarray
    """
    if _is_nonpos_int(b) or _is_nonpos_int(c):
        raise ValueError("b and c must not be non-positive integers")
    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    return _accel.series_1f2(a, b, c, x, tol, max_terms)


def hyp1f2(a, b, c, x, tol=1e-10, max_terms=2000):
    """Generalized hypergeometric function 1F2(a; b, c; x) at a single point.

    Raises
    ------
    CancellationError
        If rounding in the alternating sum exceeds the tolerance; callers
        should fall back to quadrature.
    """
    v, n, e, ok = hyp1f2_array(a, b, c, [x], tol=tol, max_terms=max_terms)
    res = HypResult(complex(v[0]), int(n[0]), bool(ok[0]), float(e[0]))
    if not res.converged:
        raise CancellationError(
            f"1F2({a}; {b}, {c}; {x}) lost precision (est. error {res.est_error:.3g}); "
            "use quadrature instead",
            res,
        )
    return res


def hyp2f1_kernel_family(w):
    """Fast 2F1(1, 3/2; 5/2; w) on arrays, the function inside the
    spin-branch Laplace transform and self energy.

    For ``|w| >= 1/2`` the elementary reduction
    ``3 (1 - arctan(u)/u) / u**2`` with ``u**2 = -w`` is used (``arctan(u)/u``
    is even in ``u`` so the square-root branch is irrelevant, and the
    principal arctan cut maps exactly onto ``w`` in ``[1, inf)``).  Smaller
    arguments use the direct series, where the reduction would cancel.
    """
    w = np.asarray(w, dtype=complex)
    shape = w.shape
    w = w.ravel()
    out = np.empty(w.shape, dtype=complex)
    small = np.abs(w) < 0.5
    if small.any():
        out[small] = _accel.series_2f1(1.0, 1.5, 2.5, w[small], 1e-15, 400)[0]
    big = ~small
    if big.any():
        u2 = -w[big]
        u = np.sqrt(u2)
        out[big] = 3.0 * (1.0 - np.arctan(u) / u) / u2
    return out.reshape(shape)
