"""Mean-square displacement, anomalous exponent and regime detection.

The noise part of the MSD,

    M(t) = int_0^t int_0^t G2(s) G2(r) nu(s - r) ds dr,

is accumulated on a uniform grid of step ``h`` with ``G2`` piecewise
linear.  Each pair of panels contributes ``sum_ab G_a G_b W_ab(k)`` where
``W_ab(k)`` integrates the two hat functions against ``nu(k h + x - y)``
by composite Simpson with ``m`` sub-steps per panel, so ``nu`` is only
needed on the exact grid of step ``h/m`` (no interpolation).  The step is
``min(pi / (8 omega_max), T / 4096)`` on nested windows ``T = t_max /
16^l`` so that short times are resolved as finely as long ones.
"""

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _accel
from .kernels import density_zeta, thermal_occupation
from .spectrum import BranchLabel, inverse_dispersion_dimensionless


class RegimeLabel(str, enum.Enum):
    BALLISTIC_EARLY = "BALLISTIC_EARLY"
    SUBDIFFUSIVE = "SUBDIFFUSIVE"
    BALLISTIC_LATE = "BALLISTIC_LATE"


class ConvergenceError(ArithmeticError):
    """Step halving changed the MSD by more than the allowed tolerance."""

    def __init__(self, message, worst_t, worst_change):
        super().__init__(message)
        self.worst_t = worst_t
        self.worst_change = worst_change


class NegativeMsdError(ArithmeticError):
    """MSD dipped below the numerical floor."""


@dataclass(frozen=True)
class Regime:
    t_start: float
    t_end: float
    alpha_mean: float
    label: RegimeLabel
    n_points: int

    @property
    def duration_ratio(self):
        return self.t_end / self.t_start

    def as_dict(self):
        return {"label": self.label.value, "t_start": self.t_start, "t_end": self.t_end,
                "alpha_mean": self.alpha_mean, "duration_ratio": self.duration_ratio,
                "n_points": self.n_points}


@dataclass
class MsdSeries:
    """MSD on an output grid with exponent, regimes and diagnostics."""

    t: np.ndarray
    msd: np.ndarray
    alpha: Optional[np.ndarray] = None
    regimes: list = field(default_factory=list)
    linearity_check: Optional[dict] = None
    convergence: dict = field(default_factory=dict)

    def regime(self, label):
        label = RegimeLabel(label)
        for r in self.regimes:
            if r.label is label:
                return r
        return None

    def labels(self):
        """Per-point regime label (empty string outside every regime)."""
        out = np.full(self.t.shape, "", dtype=object)
        for r in self.regimes:
            out[(self.t >= r.t_start) & (self.t <= r.t_end)] = r.label.value
        return out


DEFAULT_T_MIN = 1e-2
DEFAULT_T_MAX = 1e3
DEFAULT_POINTS = 400


def default_grid(t_min=DEFAULT_T_MIN, t_max=DEFAULT_T_MAX, points=DEFAULT_POINTS):
    """Log-spaced output grid."""
    return np.logspace(math.log10(t_min), math.log10(t_max), points)


# ---------------------------------------------------------------------------
# closed form
# ---------------------------------------------------------------------------

def msd_density_analytic(t, dim, v0_sq=0.0):
    """Long-time density-branch MSD ``[v0^2 + tau_- Lambda_-^2 / 2] (t / zeta)^2``.

    ``zeta = 1 + kappa tau_- Lambda_-`` carries the damping weight
    ``kappa``; the noise weight does not.
    """
    t = np.asarray(t, dtype=float)
    zeta = density_zeta(dim)
    out = (v0_sq + dim.tau_minus * dim.Lambda_minus ** 2 / 2.0) * (t / zeta) ** 2
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# panel weights
# ---------------------------------------------------------------------------

def _simpson_pair_coeffs(m):
    """Coefficients ``c_ab(d)``, ``d = -m..m``, of the Simpson double sum.

    ``W_ab(k) = (h/m)^2 sum_d c_ab(d) nu((k m + d) h / m)``.
    """
    if m % 2:
        raise ValueError("Simpson sub-steps must be even")
    w = np.ones(m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w /= 3.0
    x = np.arange(m + 1) / m
    hats = (1.0 - x, x)
    coeffs = np.zeros((2, 2, 2 * m + 1))
    for a in range(2):
        for b in range(2):
            outer = np.outer(w * hats[a], w * hats[b])
            for p in range(m + 1):
                for q in range(m + 1):
                    coeffs[a, b, p - q + m] += outer[p, q]
    return coeffs


def _panel_weights(nu_fine, npan, m, h):
    """``W_ab(k)`` for ``k = 0..npan`` from ``nu`` sampled at step ``h/m``."""
    coeffs = _simpson_pair_coeffs(m)
    k = np.arange(npan + 1)
    d = np.arange(-m, m + 1)
    idx = np.abs(k[:, None] * m + d[None, :])
    samples = nu_fine[idx]
    scale = (h / m) ** 2
    W = np.einsum("abd,kd->abk", coeffs, samples) * scale
    return W[0, 0], W[0, 1], W[1, 0], W[1, 1]


def _noise_msd_uniform(g, nu_fine, h, m):
    """Noise MSD at the grid nodes ``n h`` for piecewise-linear ``g``."""
    npan = g.size - 1
    w00, w01, w10, w11 = _panel_weights(nu_fine, npan, m, h)
    s0, s1 = _accel.panel_sums(w00, w01, w10, w11, g)
    ga, gb = g[:-1], g[1:]
    diag = ga * ga * w00[0] + ga * gb * (w01[0] + w10[0]) + gb * gb * w11[0]
    inc = diag + 2.0 * (ga * s0 + gb * s1)
    out = np.zeros(g.size)
    out[1:] = np.cumsum(inc)
    return out


def _lagrange4(tq, h, values):
    """Four-point Lagrange interpolation on the uniform grid ``n h``."""
    n = values.size
    pos = tq / h
    i0 = np.clip(np.floor(pos).astype(int) - 1, 0, n - 4)
    x = pos - i0
    out = np.zeros_like(tq)
    for j in range(4):
        basis = np.ones_like(tq)
        for k in range(4):
            if k != j:
                basis *= (x - k) / (j - k)
        out += basis * values[i0 + j]
    return out


@dataclass(frozen=True)
class _Level:
    window: float
    step: float
    panels: int


def _levels(t_min, t_max, omega_max, refine, base_panels=4096, ratio=16.0):
    levels = []
    T = t_max
    while True:
        h = min(math.pi / (8.0 * omega_max), T / base_panels) / refine
        npan = int(math.ceil(T / h - 1e-9))
        levels.append(_Level(T, T / npan, npan))
        if T / ratio < t_min:
            break
        T /= ratio
    return levels


def _evaluate(t_out, kernels, v0_sq, refine, m, ratio):
    t_min, t_max = float(t_out.min()), float(t_out.max())
    levels = _levels(t_min, t_max, kernels.omega_max, refine, ratio=ratio)
    out = np.empty_like(t_out)
    assigned = np.zeros(t_out.shape, dtype=bool)
    for lev in levels:
        sel = (~assigned) & (t_out <= lev.window * (1 + 1e-12)) & (t_out > lev.window / ratio)
        if lev is levels[-1]:
            sel = ~assigned
        if not sel.any():
            continue
        nodes = np.arange(lev.panels + 1) * lev.step
        g = np.asarray(kernels.g2(nodes), dtype=float)
        fine = np.arange((lev.panels + 1) * m + 1) * (lev.step / m)
        nu_fine = np.asarray(kernels.nu(fine), dtype=float)
        msd_nodes = _noise_msd_uniform(g, nu_fine, lev.step, m)
        if v0_sq:
            msd_nodes = msd_nodes + v0_sq * g * g
        out[sel] = _lagrange4(t_out[sel], lev.step, msd_nodes)
        assigned |= sel
    return out, levels


def msd_numeric(grid, branch, kernels, v0_sq=0.0, *, sub_steps=4, gate=5e-3,
                check_convergence=True, raise_on_failure=True, window_ratio=16.0):
    """MSD of the impurity from the kernels.

    Parameters
    ----------
    grid : array_like
        Positive, strictly increasing output times.
    branch : BranchLabel or str
    kernels : KernelSet
    v0_sq : float
        Initial velocity variance.
    sub_steps : int
        Even number of Simpson sub-steps per panel in the weight integrals.
    gate : float
        Largest relative change allowed when every step is halved.
    check_convergence : bool
        Run the step-halving gate.
    raise_on_failure : bool
        Raise :class:`ConvergenceError` when the gate fails; otherwise only
        record the failure.

    Returns
    -------
    MsdSeries
        With ``alpha`` and ``regimes`` filled in when at least five
        positive points exist.
    """
    branch = BranchLabel.parse(branch)
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ValueError("grid must be positive and strictly increasing")
    started = time.perf_counter()
    msd, levels = _evaluate(t, kernels, v0_sq, 1, sub_steps, window_ratio)
    conv = {
        "levels": [{"window": lv.window, "step": lv.step, "panels": lv.panels} for lv in levels],
        "sub_steps": sub_steps,
        "gate": gate,
    }
    if check_convergence:
        fine, _ = _evaluate(t, kernels, v0_sq, 2, sub_steps, window_ratio)
        floor = 1e-12 * max(float(np.max(np.abs(fine))), 1e-300)
        change = np.abs(fine - msd) / np.maximum(np.abs(fine), floor)
        worst = int(np.argmax(change))
        conv.update({
            "max_relative_change": float(change[worst]),
            "worst_t": float(t[worst]),
            "passed": bool(change[worst] < gate),
        })
        msd = fine
        if not conv["passed"] and raise_on_failure:
            raise ConvergenceError(
                f"step halving changed the MSD by {change[worst]:.3g} at t={t[worst]:.6g}",
                float(t[worst]), float(change[worst]))
    conv["seconds"] = time.perf_counter() - started
    scale = max(float(np.max(np.abs(msd))), 1e-300)
    if np.any(msd < -1e-9 * scale):
        raise NegativeMsdError(f"MSD negative beyond rounding: min {msd.min():.3g}")
    msd = np.maximum(msd, 0.0)
    series = MsdSeries(t, msd, convergence=conv)
    if np.count_nonzero(msd > 0) >= 5:
        series.alpha = anomalous_exponent(series)
        series.regimes = detect_regimes(series)
    return series


# ---------------------------------------------------------------------------
# exponent and regimes
# ---------------------------------------------------------------------------

def _derivative_weights(x, x0):
    """Weights of the first derivative at ``x0`` of the polynomial
    interpolating the points ``x``."""
    n = x.size
    w = np.zeros(n)
    for j in range(n):
        others = [k for k in range(n) if k != j]
        denom = np.prod([x[j] - x[k] for k in others])
        acc = 0.0
        for i in others:
            acc += np.prod([x0 - x[k] for k in others if k != i])
        w[j] = acc / denom
    return w


def anomalous_exponent(series):
    """Local exponent ``d ln MSD / d ln t``.

    A five-point stencil in ``ln t``, centered in the interior and one-sided
    at the ends; exact for power laws.  Leading non-positive MSD values are
    excluded and reported as NaN.

    Raises
    ------
    ValueError
        Fewer than five usable points.
    """
    t = np.asarray(series.t, dtype=float)
    msd = np.asarray(series.msd, dtype=float)
    alpha = np.full(t.shape, np.nan)
    positive = np.nonzero(msd > 0)[0]
    if positive.size < 5:
        raise ValueError("need at least five positive MSD points for the exponent")
    start = positive[0]
    if np.any(msd[start:] <= 0):
        raise ValueError("MSD must stay positive after its first positive point")
    x = np.log(t[start:])
    y = np.log(msd[start:])
    n = x.size
    for i in range(n):
        lo = min(max(i - 2, 0), n - 5)
        xs = x[lo:lo + 5]
        alpha[start + i] = _derivative_weights(xs - x[i], 0.0) @ y[lo:lo + 5]
    return alpha


def _runs(mask):
    runs = []
    i = 0
    n = mask.size
    while i < n:
        if mask[i]:
            j = i
            while j + 1 < n and mask[j + 1]:
                j += 1
            runs.append((i, j))
            i = j + 1
        else:
            i += 1
    return runs


def detect_regimes(series, ballistic=1.8, subdiffusive=1.0, min_points=5):
    """Split the exponent curve into ballistic and subdiffusive windows.

    BALLISTIC_EARLY is the run with ``alpha >= ballistic`` starting at the
    first point, BALLISTIC_LATE the run ending at the last point, and
    SUBDIFFUSIVE the longest run with ``alpha < subdiffusive``.  Runs shorter
    than ``min_points`` are dropped.  A ballistic run covering the whole
    grid is reported once, as BALLISTIC_EARLY.
    """
    alpha = series.alpha if series.alpha is not None else anomalous_exponent(series)
    t = np.asarray(series.t, dtype=float)
    valid = np.isfinite(alpha)
    regimes = []

    def make(i, j, label):
        return Regime(float(t[i]), float(t[j]), float(np.mean(alpha[i:j + 1])), label, j - i + 1)

    ball = _runs(valid & (alpha >= ballistic))
    ball = [r for r in ball if r[1] - r[0] + 1 >= min_points]
    first = int(np.argmax(valid)) if valid.any() else 0
    last = t.size - 1
    early = next((r for r in ball if r[0] == first), None)
    late = next((r for r in ball if r[1] == last), None)
    if early is not None:
        regimes.append(make(*early, RegimeLabel.BALLISTIC_EARLY))
    sub = [r for r in _runs(valid & (alpha < subdiffusive)) if r[1] - r[0] + 1 >= min_points]
    if sub:
        best = max(sub, key=lambda r: (t[r[1]] / t[r[0]], -r[0]))
        regimes.append(make(*best, RegimeLabel.SUBDIFFUSIVE))
    if late is not None and late != early:
        regimes.append(make(*late, RegimeLabel.BALLISTIC_LATE))
    regimes.sort(key=lambda r: r.t_start)
    return regimes


def plateau_stats(series):
    """``(alpha_mean, duration_ratio)`` of the subdiffusive window, or ``None``."""
    r = series.regime(RegimeLabel.SUBDIFFUSIVE)
    if r is None:
        return None
    return r.alpha_mean, r.duration_ratio


# ---------------------------------------------------------------------------
# linearity of the coupling
# ---------------------------------------------------------------------------

def typical_wavenumber(branch, dim, T=0.0, n_nodes=4000):
    """RMS bath wavenumber weighted by ``J(w) coth(w/2T) / w^2``.

    ``J / w^2`` is the spectral weight with which each bath frequency feeds
    the MSD at long times, so it sets the dominant ``k``.
    """
    branch = BranchLabel.parse(branch)
    if branch is BranchLabel.DENSITY:
        om = np.linspace(0.0, dim.Lambda_minus, n_nodes + 1)[1:]
        weight = dim.tau_minus * om
        du = np.full(om.shape, dim.Lambda_minus / n_nodes)
    else:
        u = (np.arange(n_nodes) + 0.5) * math.sqrt(dim.Lambda) / n_nodes
        om = dim.E_gap + u * u
        weight = dim.tau_plus * u / om ** 2 * 2.0 * u
        du = np.full(om.shape, math.sqrt(dim.Lambda) / n_nodes)
    weight = weight * (1.0 + thermal_occupation(om, T)) * du
    if not np.any(weight > 0):
        return 0.0
    k = inverse_dispersion_dimensionless(om, branch, dim)
    return float(math.sqrt(np.sum(weight * k * k) / np.sum(weight)))


def linearity_check(series, branch, dim, T=0.0, threshold=0.1):
    """Validity of the linearized coupling, ``k_typ sqrt(MSD) < threshold``.

    Returns
    -------
    dict
        ``k_typ``, the largest product ``max_kx``, ``t_valid`` (end of the
        initial window where the bound holds; the last time if it always
        holds) and ``valid_everywhere``.
    """
    k_typ = typical_wavenumber(branch, dim, T)
    kx = k_typ * np.sqrt(np.maximum(series.msd, 0.0))
    ok = kx < threshold
    if ok.all():
        t_valid = float(series.t[-1])
    elif not ok[0]:
        t_valid = 0.0
    else:
        t_valid = float(series.t[int(np.argmin(ok)) - 1])
    report = {"k_typ": k_typ, "max_kx": float(kx.max()) if kx.size else 0.0,
              "threshold": threshold, "t_valid": t_valid, "valid_everywhere": bool(ok.all())}
    series.linearity_check = report
    return report
