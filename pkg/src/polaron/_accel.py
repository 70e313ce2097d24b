"""Hot inner loops, compiled with numba when available.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version computing the same quantity.  The numba path is used unless the
environment variable ``POLARON_NUMBA`` is set to ``0`` (or numba cannot be
imported).  Both implementations stay importable through ``NUMPY_KERNELS``
and ``NUMBA_KERNELS`` so tests and the benchmark can compare them.
"""

import os

import numpy as np

_EPS = np.finfo(float).eps


def _numba_requested():
    flag = os.environ.get("POLARON_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


try:
    if not _numba_requested():
        raise ImportError("numba disabled by POLARON_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _series_2f1_np(a, b, c, z, tol, max_terms):
    z = np.asarray(z, dtype=complex)
    total = np.ones_like(z)
    term = np.ones_like(z)
    abs_sum = np.ones(z.shape)
    err = np.full(z.shape, np.inf)
    nterms = np.ones(z.shape, dtype=np.int64)
    active = np.ones(z.shape, dtype=bool)
    az = np.abs(z)
    for n in range(max_terms):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        coef = (a + n) * (b + n) / ((c + n) * (n + 1.0))
        nxt = term[idx] * coef * z[idx]
        term[idx] = nxt
        total[idx] += nxt
        mag = np.abs(nxt)
        abs_sum[idx] += mag
        nterms[idx] = n + 2
        rho = np.abs((a + n + 1) * (b + n + 1) / ((c + n + 1) * (n + 2.0))) * az[idx]
        rho = np.maximum(rho, az[idx])
        tail = np.where(rho < 1.0, mag * rho / np.maximum(1.0 - rho, 1e-300), np.inf)
        est = np.maximum(mag, tail) + _EPS * abs_sum[idx]
        est = np.where(mag == 0.0, _EPS * abs_sum[idx], est)
        err[idx] = est
        scale = np.abs(total[idx])
        done = (est <= tol * scale) | (mag == 0.0)
        # stalled at rounding level: more terms cannot help
        done |= (mag <= _EPS * abs_sum[idx]) & (tail <= _EPS * abs_sum[idx])
        active[idx[done]] = False
    ok = err <= tol * np.maximum(np.abs(total), 1e-300)
    return total, nterms, err, ok


def _series_1f2_np(a, b, c, x, tol, max_terms):
    x = np.asarray(x, dtype=float)
    total = np.ones_like(x)
    comp = np.zeros_like(x)
    term = np.ones_like(x)
    abs_sum = np.ones_like(x)
    err = np.full(x.shape, np.inf)
    nterms = np.ones(x.shape, dtype=np.int64)
    active = np.ones(x.shape, dtype=bool)
    ax = np.abs(x)
    for n in range(max_terms):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        coef = (a + n) / ((b + n) * (c + n) * (n + 1.0))
        nxt = term[idx] * coef * x[idx]
        term[idx] = nxt
        # Neumaier compensated update
        s = total[idx]
        t = s + nxt
        big = np.abs(s) >= np.abs(nxt)
        comp[idx] += np.where(big, (s - t) + nxt, (nxt - t) + s)
        total[idx] = t
        mag = np.abs(nxt)
        abs_sum[idx] += mag
        nterms[idx] = n + 2
        rho = np.abs((a + n + 1) / ((b + n + 1) * (c + n + 1) * (n + 2.0))) * ax[idx]
        tail = np.where(rho < 1.0, mag * rho / np.maximum(1.0 - rho, 1e-300), np.inf)
        rounding = 2.0 * _EPS * abs_sum[idx]
        err[idx] = tail + rounding
        val = np.abs(total[idx] + comp[idx])
        done = (tail <= 0.1 * tol * val) | (tail <= rounding) | (mag == 0.0)
        done &= rho < 1.0
        active[idx[done]] = False
    total = total + comp
    ok = err <= tol * np.maximum(np.abs(total), 1e-300)
    return total, nterms, err, ok


def _cosine_sum_np(omega, weight, t):
    """out[i] = sum_j weight[j] * cos(omega[j] * t[i])."""
    out = np.empty(t.shape)
    chunk = max(1, int(4_000_000 // max(omega.size, 1)))
    for lo in range(0, t.size, chunk):
        tt = t[lo:lo + chunk]
        out[lo:lo + chunk] = np.cos(np.multiply.outer(tt, omega)) @ weight
    return out


def _panel_sums_np(w00, w01, w10, w11, g):
    """History sums of the panel-pair recursion used by the MSD integral.

    s0[n] = sum_{k=1}^{n} w00[k] g[n-k] + w01[k] g[n-k+1], s1 likewise with
    w10, w11, for n = 0 .. len(g) - 2.
    """
    npan = g.size - 1
    s0 = np.zeros(npan)
    s1 = np.zeros(npan)
    for n in range(1, npan):
        ga = g[n - 1::-1]          # g[n-k], k = 1..n
        gb = g[n:0:-1]             # g[n-k+1]
        s0[n] = w00[1:n + 1] @ ga + w01[1:n + 1] @ gb
        s1[n] = w10[1:n + 1] @ ga + w11[1:n + 1] @ gb
    return s0, s1


def _filon_cos_np(nodes, values, t):
    """Piecewise-linear product rule for int f(w) cos(w t) dw.

    f is linear between ``nodes``; the result is exact for that
    interpolant at every t.
    """
    h = np.diff(nodes)
    slope = np.diff(values) / h
    mid = 0.5 * (nodes[1:] + nodes[:-1])
    trap = 0.5 * np.sum((values[1:] + values[:-1]) * h)
    out = np.empty(t.shape)
    chunk = max(1, int(2_000_000 // max(nodes.size, 1)))
    for lo in range(0, t.size, chunk):
        tt = t[lo:lo + chunk]
        safe = np.where(tt > 1e-12, tt, 1.0)
        edge = (values[-1] * np.sin(nodes[-1] * safe) - values[0] * np.sin(nodes[0] * safe)) / safe
        inner = (np.sin(np.multiply.outer(safe, mid)) * np.sin(0.5 * np.multiply.outer(safe, h))) @ slope
        res = edge - 2.0 * inner / safe ** 2
        out[lo:lo + chunk] = np.where(tt > 1e-12, res, trap)
    return out


NUMPY_KERNELS = {
    "filon_cos": _filon_cos_np,
    "series_2f1": _series_2f1_np,
    "series_1f2": _series_1f2_np,
    "cosine_sum": _cosine_sum_np,
    "panel_sums": _panel_sums_np,
}


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _series_2f1_nb(a, b, c, z, tol, max_terms):
        m = z.size
        vals = np.empty(m, dtype=np.complex128)
        nterms = np.empty(m, dtype=np.int64)
        errs = np.empty(m)
        ok = np.empty(m, dtype=np.bool_)
        eps = 2.220446049250313e-16
        for i in range(m):
            zi = z[i]
            az = abs(zi)
            total = 1.0 + 0.0j
            term = 1.0 + 0.0j
            abs_sum = 1.0
            est = np.inf
            used = 1
            for n in range(max_terms):
                term = term * ((a + n) * (b + n) / ((c + n) * (n + 1.0))) * zi
                total += term
                mag = abs(term)
                abs_sum += mag
                used = n + 2
                if mag == 0.0:
                    est = eps * abs_sum
                    break
                rho = abs((a + n + 1) * (b + n + 1) / ((c + n + 1) * (n + 2.0))) * az
                if rho < az:
                    rho = az
                if rho < 1.0:
                    tail = mag * rho / (1.0 - rho)
                else:
                    tail = np.inf
                est = max(mag, tail) + eps * abs_sum
                if est <= tol * abs(total):
                    break
                if mag <= eps * abs_sum and tail <= eps * abs_sum:
                    break
            vals[i] = total
            nterms[i] = used
            errs[i] = est
            ok[i] = est <= tol * max(abs(total), 1e-300)
        return vals, nterms, errs, ok

    @njit(cache=True)
    def _series_1f2_nb(a, b, c, x, tol, max_terms):
        m = x.size
        vals = np.empty(m)
        nterms = np.empty(m, dtype=np.int64)
        errs = np.empty(m)
        ok = np.empty(m, dtype=np.bool_)
        eps = 2.220446049250313e-16
        for i in range(m):
            xi = x[i]
            ax = abs(xi)
            total = 1.0
            comp = 0.0
            term = 1.0
            abs_sum = 1.0
            est = np.inf
            used = 1
            for n in range(max_terms):
                term = term * ((a + n) / ((b + n) * (c + n) * (n + 1.0))) * xi
                t = total + term
                if abs(total) >= abs(term):
                    comp += (total - t) + term
                else:
                    comp += (term - t) + total
                total = t
                mag = abs(term)
                abs_sum += mag
                used = n + 2
                rho = abs((a + n + 1) / ((b + n + 1) * (c + n + 1) * (n + 2.0))) * ax
                if rho < 1.0:
                    tail = mag * rho / (1.0 - rho)
                else:
                    tail = np.inf
                rounding = 2.0 * eps * abs_sum
                est = tail + rounding
                if rho < 1.0:
                    val = abs(total + comp)
                    if tail <= 0.1 * tol * val or tail <= rounding or mag == 0.0:
                        break
            total = total + comp
            vals[i] = total
            nterms[i] = used
            errs[i] = est
            ok[i] = est <= tol * max(abs(total), 1e-300)
        return vals, nterms, errs, ok

    @njit(cache=True, nogil=True)
    def _filon_cos_nb(nodes, values, t):
        m = nodes.size - 1
        out = np.empty(t.size)
        for i in range(t.size):
            ti = t[i]
            if ti <= 1e-12:
                acc = 0.0
                for j in range(m):
                    acc += 0.5 * (values[j] + values[j + 1]) * (nodes[j + 1] - nodes[j])
                out[i] = acc
                continue
            edge = (values[m] * np.sin(nodes[m] * ti) - values[0] * np.sin(nodes[0] * ti)) / ti
            acc = 0.0
            for j in range(m):
                h = nodes[j + 1] - nodes[j]
                s = (values[j + 1] - values[j]) / h
                acc += s * np.sin(0.5 * (nodes[j + 1] + nodes[j]) * ti) * np.sin(0.5 * h * ti)
            out[i] = edge - 2.0 * acc / (ti * ti)
        return out

    @njit(cache=True, nogil=True)
    def _cosine_sum_nb(omega, weight, t):
        out = np.empty(t.size)
        for i in range(t.size):
            ti = t[i]
            acc = 0.0
            for j in range(omega.size):
                acc += weight[j] * np.cos(omega[j] * ti)
            out[i] = acc
        return out

    @njit(cache=True, nogil=True)
    def _panel_sums_nb(w00, w01, w10, w11, g):
        npan = g.size - 1
        s0 = np.zeros(npan)
        s1 = np.zeros(npan)
        for n in range(1, npan):
            a0 = 0.0
            a1 = 0.0
            for k in range(1, n + 1):
                ga = g[n - k]
                gb = g[n - k + 1]
                a0 += w00[k] * ga + w01[k] * gb
                a1 += w10[k] * ga + w11[k] * gb
            s0[n] = a0
            s1[n] = a1
        return s0, s1

    NUMBA_KERNELS = {
        "filon_cos": _filon_cos_nb,
        "series_2f1": _series_2f1_nb,
        "series_1f2": _series_1f2_nb,
        "cosine_sum": _cosine_sum_nb,
        "panel_sums": _panel_sums_nb,
    }
    _ACTIVE = NUMBA_KERNELS
else:
    NUMBA_KERNELS = {}
    _ACTIVE = NUMPY_KERNELS


def series_2f1(a, b, c, z, tol=1e-12, max_terms=20000):
    """Direct Gauss series on a 1-d complex array.

    Returns
    -------
    values, terms_used, est_error, converged : ndarray
    """
    z = np.ascontiguousarray(np.atleast_1d(z), dtype=np.complex128)
    return _ACTIVE["series_2f1"](float(a), float(b), float(c), z, float(tol), int(max_terms))


def series_1f2(a, b, c, x, tol=1e-10, max_terms=2000):
    """Direct 1F2 series with compensated summation on a real array."""
    x = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    return _ACTIVE["series_1f2"](float(a), float(b), float(c), x, float(tol), int(max_terms))


def cosine_sum(omega, weight, t):
    """Weighted cosine sums ``sum_j w_j cos(omega_j t_i)`` for every t_i."""
    omega = np.ascontiguousarray(omega, dtype=np.float64)
    weight = np.ascontiguousarray(weight, dtype=np.float64)
    t = np.ascontiguousarray(np.atleast_1d(t), dtype=np.float64)
    return _ACTIVE["cosine_sum"](omega, weight, t)


def panel_sums(w00, w01, w10, w11, g):
    """History sums of the MSD panel recursion (see ``msd`` module)."""
    args = [np.ascontiguousarray(v, dtype=np.float64) for v in (w00, w01, w10, w11, g)]
    return _ACTIVE["panel_sums"](*args)


def filon_cos(nodes, values, t):
    """``int f(w) cos(w t) dw`` for piecewise-linear ``f`` given at ``nodes``."""
    nodes = np.ascontiguousarray(nodes, dtype=np.float64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    t = np.ascontiguousarray(np.atleast_1d(t), dtype=np.float64)
    return _ACTIVE["filon_cos"](nodes, values, t)
