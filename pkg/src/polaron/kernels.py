"""Damping and noise kernels and the Green functions of the impurity.

Dimensionless units throughout (hbar = m_I = 1, frequency unit
``OMEGA_BAR``).  With ``kappa = damping_channels``

    Gamma(t) = kappa int J(w)/w cos(w t) dw
    nu(t)    =       int J(w) coth(w/2T) cos(w t) dw

and the Green functions follow from ``L[G2] = 1/(z^2 + z L[Gamma])``.
The density bath is the cubic form cut at ``Lambda_-``; the spin bath is
``tau_+ sqrt(w - E_gap)`` on ``[E_gap, E_gap + Lambda]``.
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import fresnel

from . import _accel
from .laplace import (
    LaplaceFn,
    green_g1_transform,
    green_g2_transform,
    invert_zakian,
    laplace_gamma_density,
    laplace_gamma_spin,
)
from .specfun import hyp1f2_array, hyp2f1
from .spectrum import BranchLabel

log = logging.getLogger(__name__)


class QuadratureError(ArithmeticError):
    """Band quadrature missed its tolerance."""

    def __init__(self, message, achieved):
        super().__init__(message)
        self.achieved = achieved


class GreenMode(str, enum.Enum):
    ANALYTIC_LONGTIME = "ANALYTIC_LONGTIME"
    NUMERIC = "NUMERIC"


def _kappa(dim):
    return getattr(dim, "damping_channels", 1)


def _t(t):
    return np.atleast_1d(np.asarray(t, dtype=float))


def _ret(t, out):
    return out if np.ndim(t) else float(out[0])


# ---------------------------------------------------------------------------
# density branch
# ---------------------------------------------------------------------------

_SERIES_SWITCH = 0.1


def gamma_density(t, dim):
    """Damping kernel of the cubic density bath.

    ``kappa tau (2 L t cos(L t) + (L^2 t^2 - 2) sin(L t)) / t^3`` with
    ``L = Lambda_-``; for ``L t < 0.1`` the Taylor series
    ``kappa tau sum (-1)^n L^{2n+3} t^{2n} / ((2n)! (2n+3))`` avoids the
    cancellation of the closed form.
    """
    tt = np.abs(_t(t))
    lam, tau = dim.Lambda_minus, dim.tau_minus
    x = lam * tt
    out = np.empty_like(tt)
    small = x < _SERIES_SWITCH
    xs = x[small]
    acc = np.zeros_like(xs)
    for n in range(8):
        acc += (-1) ** n * xs ** (2 * n) / (math.factorial(2 * n) * (2 * n + 3))
    out[small] = tau * lam ** 3 * acc
    xb = x[~small]
    out[~small] = tau * lam ** 3 * (2 * xb * np.cos(xb) + (xb * xb - 2) * np.sin(xb)) / xb ** 3
    return _ret(t, _kappa(dim) * out)


def gamma_density_printed(t, dim):
    """The density damping kernel as printed in the source derivation, with
    ``-2(2 - L^2 t^2) sin`` in place of ``(L^2 t^2 - 2) sin``; kept only to
    quantify that discrepancy (it does not tend to ``tau L^3/3``)."""
    tt = _t(t)
    lam, tau = dim.Lambda_minus, dim.tau_minus
    x = lam * tt
    out = tau * lam ** 3 * (2 * x * np.cos(x) - 2 * (2 - x * x) * np.sin(x)) / x ** 3
    return _ret(t, _kappa(dim) * out)


def noise_density_lowT(t, dim):
    """Zero-temperature noise kernel of the cubic density bath.

    ``tau [L^3 sin/t + 3 L^2 cos/t^2 - 6 L sin/t^3 - 6 (cos - 1)/t^4]``,
    switching to ``tau sum (-1)^n L^{2n+4} t^{2n} / ((2n)! (2n+4))`` for
    small ``L t``.
    """
    tt = np.abs(_t(t))
    lam, tau = dim.Lambda_minus, dim.tau_minus
    x = lam * tt
    out = np.empty_like(tt)
    small = x < 0.5
    xs = x[small]
    acc = np.zeros_like(xs)
    for n in range(12):
        acc += (-1) ** n * xs ** (2 * n) / (math.factorial(2 * n) * (2 * n + 4))
    out[small] = tau * lam ** 4 * acc
    xb = x[~small]
    s, c = np.sin(xb), np.cos(xb)
    out[~small] = tau * lam ** 4 * (s / xb + 3 * c / xb ** 2 - 6 * s / xb ** 3 - 6 * (c - 1) / xb ** 4)
    return _ret(t, out)


# ---------------------------------------------------------------------------
# spin branch
# ---------------------------------------------------------------------------

_GL16 = leggauss(16)
_GL12 = leggauss(12)


def _band_nodes(t_max, dim, rule, max_panel=None):
    """Gauss-Legendre nodes in ``u = sqrt(w - E)`` on panels whose width in
    ``w`` stays below ``pi / (4 t_max)``."""
    lam = dim.Lambda
    width = lam / 16.0
    if t_max > 0:
        width = min(width, math.pi / (4.0 * t_max))
    if max_panel is not None:
        width = min(width, max_panel)
    npan = max(16, int(math.ceil(lam / width)))
    w_edges = np.linspace(0.0, lam, npan + 1)
    u_edges = np.sqrt(w_edges)
    x, w = rule
    a, b = u_edges[:-1, None], u_edges[1:, None]
    u = (0.5 * (b - a) * (x + 1.0) + a).ravel()
    wu = (0.5 * (b - a) * w).ravel()
    return u, wu


def _band_cosine(t, dim, weight_fn, tol, label):
    """``int_band f(w) cos(w t) dw`` written in ``u``; ``weight_fn(u, omega)``
    returns ``f(omega) d omega / du``.  Two rules are compared for an error
    estimate."""
    tt = np.abs(_t(t))
    t_max = float(tt.max()) if tt.size else 0.0
    results = []
    for rule in (_GL16, _GL12):
        u, wu = _band_nodes(t_max, dim, rule)
        om = dim.E_gap + u * u
        results.append(_accel.cosine_sum(om, weight_fn(u, om) * wu, tt))
    hi, lo = results
    err = np.abs(hi - lo)
    scale = np.maximum(np.abs(hi), np.max(np.abs(hi)) * 1e-3 + 1e-300)
    if np.any(err > tol * scale + 1e-14):
        worst = float(np.max(err / scale))
        raise QuadratureError(f"{label}: band quadrature reached only {worst:.3g}", worst)
    return hi


def gamma_spin(t, dim, tol=1e-8):
    """Damping kernel of the gapped square-root bath, by band quadrature.

    Raises
    ------
    QuadratureError
        When two Gauss-Legendre rules disagree beyond ``tol``.
    """
    tau, kappa = dim.tau_plus, _kappa(dim)
    out = _band_cosine(t, dim, lambda u, om: kappa * tau * 2.0 * u * u / om, tol, "gamma_spin")
    return _ret(t, out)


def noise_spin_band(t, dim):
    """Zero-temperature spin noise kernel, exact for the declared band.

    ``nu = tau Re[exp(i E t) I(t)]`` with ``I = int_0^L sqrt(e) exp(i e t) de``
    written through Fresnel integrals for ``L t >= 0.01`` and through its
    power series ``sum (i t)^n L^{n+3/2} / (n! (n+3/2))`` below.
    """
    tt = np.abs(_t(t))
    lam, E, tau = dim.Lambda, dim.E_gap, dim.tau_plus
    out = np.empty_like(tt)
    small = lam * tt < 1e-2
    ts = tt[small]
    acc = np.zeros(ts.shape, dtype=complex)
    term = np.ones(ts.shape, dtype=complex)
    for n in range(10):
        if n:
            term = term * (1j * ts * lam) / n
        acc += term / (n + 1.5)
    out[small] = tau * np.real(np.exp(1j * E * ts) * acc) * lam ** 1.5
    tb = tt[~small]
    S, C = fresnel(math.sqrt(lam) * np.sqrt(2.0 * tb / math.pi))
    edge = math.sqrt(lam) * np.exp(1j * lam * tb)
    I = (edge - np.sqrt(math.pi / (2.0 * tb)) * (C + 1j * S)) / (1j * tb)
    out[~small] = tau * np.real(np.exp(1j * E * tb) * I)
    return _ret(t, out)


def noise_spin_hypergeometric(t, dim, tol=1e-10):
    """Band-consistent 1F2 form of the low-temperature spin noise kernel.

    ``tau L^{3/2} [(2/3) cos(E t) 1F2(3/4; 1/2, 7/4; -L^2 t^2/4)
    - (2/5) L t sin(E t) 1F2(5/4; 3/2, 9/4; -L^2 t^2/4)]``.

    Returns
    -------
    values, ok : ndarray
        ``ok`` is False where the series lost precision to cancellation.
    """
    tt = np.abs(_t(t))
    lam, E, tau = dim.Lambda, dim.E_gap, dim.tau_plus
    x = -0.25 * (lam * tt) ** 2
    f1, _, _, ok1 = hyp1f2_array(0.75, 0.5, 1.75, x, tol=tol)
    f2, _, _, ok2 = hyp1f2_array(1.25, 1.5, 2.25, x, tol=tol)
    val = tau * lam ** 1.5 * (2.0 / 3.0 * np.cos(E * tt) * f1
                              - 0.4 * lam * tt * np.sin(E * tt) * f2)
    return val, ok1 & ok2


def noise_spin_printed(t, dim):
    """The low-temperature spin noise kernel exactly as printed in the
    source derivation: prefactor ``(L - E)^{3/2}``, arguments built from
    ``E - L`` and ``cos`` in both terms.  Used only for deviation reports."""
    tt = np.abs(_t(t))
    lam, E, tau = dim.Lambda, dim.E_gap, dim.tau_plus
    d = E - lam
    x = -0.25 * tt ** 2 * d ** 2
    f1 = hyp1f2_array(0.75, 0.5, 1.75, x)[0]
    f2 = hyp1f2_array(1.25, 1.5, 2.25, x)[0]
    pref = tau * complex(lam - E) ** 1.5
    val = pref * (2.0 / 3.0 * np.cos(E * tt) * f1 + 0.4 * tt * d * np.cos(E * tt) * f2)
    return _ret(t, np.real(val))


def noise_spin_lowT(t, dim, form="band", tol=1e-4):
    """Low-temperature (coth -> 1) spin noise kernel.

    Parameters
    ----------
    form : {"band", "hypergeometric", "printed"}
        ``band`` (default) is exact for the band ``[E_gap, E_gap + Lambda]``.
        ``hypergeometric`` uses the 1F2 series and falls back to ``band``
        wherever cancellation spoils it or it deviates beyond ``tol``.
        ``printed`` returns the literal printed closed form unchecked.
    """
    if form == "band":
        return noise_spin_band(t, dim)
    if form == "printed":
        return noise_spin_printed(t, dim)
    if form != "hypergeometric":
        raise ValueError(f"unknown form {form!r}")
    val, ok = noise_spin_hypergeometric(t, dim)
    ref = _t(noise_spin_band(t, dim))
    scale = max(float(np.max(np.abs(ref))), 1e-300)
    bad = ~ok | (np.abs(val - ref) > tol * scale)
    if bad.any():
        log.info("1F2 noise form replaced by band evaluation at %d of %d points",
                 int(bad.sum()), bad.size)
    out = np.where(bad, ref, val)
    return _ret(t, out)


# ---------------------------------------------------------------------------
# finite temperature
# ---------------------------------------------------------------------------

def thermal_occupation(omega, T):
    """``coth(w / 2T) - 1 = 2 / (exp(w/T) - 1)``; zero at ``T = 0``."""
    w = np.asarray(omega, dtype=float)
    if T <= 0:
        return np.zeros_like(w)
    with np.errstate(over="ignore", divide="ignore"):
        return 2.0 / np.expm1(w / T)


def _thermal_nodes(dim, branch, T, n_nodes):
    if branch is BranchLabel.DENSITY:
        om = np.linspace(0.0, dim.Lambda_minus, n_nodes)
        f = dim.tau_minus * om ** 3 * thermal_occupation(np.maximum(om, 1e-300), T)
        f[0] = 0.0
    else:
        u = np.linspace(0.0, math.sqrt(dim.Lambda), n_nodes)
        om = dim.E_gap + u * u
        f = dim.tau_plus * u * thermal_occupation(om, T)
    return om, f


def noise_kernel(t, dim, branch, T=0.0, n_nodes=4097):
    """Noise kernel for tabulation inside the MSD integral.

    The zero-temperature part is closed form; the thermal excess
    ``int J (coth - 1) cos`` uses a piecewise-linear product (Filon)
    rule on a fixed frequency mesh, exact in ``t``.
    """
    branch = BranchLabel.parse(branch)
    tt = np.abs(_t(t))
    base = noise_density_lowT(tt, dim) if branch is BranchLabel.DENSITY else noise_spin_band(tt, dim)
    base = np.atleast_1d(base)
    if T > 0:
        om, f = _thermal_nodes(dim, branch, T, n_nodes)
        base = base + _accel.filon_cos(om, f, tt)
    return _ret(t, base)


def noise_general(t, T, branch, dim, tol=1e-10):
    """Noise kernel at temperature ``T`` by direct band quadrature.

    Serves as the reference for :func:`noise_kernel`.
    """
    branch = BranchLabel.parse(branch)
    if T < 0:
        raise ValueError("temperature must be non-negative")

    def coth_factor(om):
        if T <= 0:
            return np.ones_like(om)
        return 1.0 / np.tanh(om / (2.0 * T))

    if branch is BranchLabel.SPIN:
        tau = dim.tau_plus
        out = _band_cosine(t, dim, lambda u, om: tau * 2.0 * u * u * coth_factor(om), tol,
                           "noise_general")
        return _ret(t, out)
    tt = np.abs(_t(t))
    t_max = float(tt.max()) if tt.size else 0.0
    lam = dim.Lambda_minus
    width = lam / 16.0 if t_max == 0 else min(lam / 16.0, math.pi / (4.0 * t_max))
    npan = max(16, int(math.ceil(lam / width)))
    edges = np.linspace(0.0, lam, npan + 1)
    res = []
    for rule in (_GL16, _GL12):
        x, w = rule
        a, b = edges[:-1, None], edges[1:, None]
        om = (0.5 * (b - a) * (x + 1.0) + a).ravel()
        wo = (0.5 * (b - a) * w).ravel()
        res.append(_accel.cosine_sum(om, dim.tau_minus * om ** 3 * coth_factor(om) * wo, tt))
    hi, lo = res
    scale = np.maximum(np.abs(hi), np.max(np.abs(hi)) * 1e-3 + 1e-300)
    if np.any(np.abs(hi - lo) > tol * scale + 1e-14):
        worst = float(np.max(np.abs(hi - lo) / scale))
        raise QuadratureError(f"noise_general: band quadrature reached only {worst:.3g}", worst)
    return _ret(t, hi)


# ---------------------------------------------------------------------------
# zero-time damping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Gamma0:
    """Zero-time damping: closed form, quadrature and their relative gap."""

    closed_form: float
    quadrature: float
    deviation: float

    @property
    def value(self):
        return self.quadrature


def gamma0(branch, dim):
    """``Gamma(0) = kappa int J/w dw`` in closed form and by quadrature.

    The spin closed form ``tau [-pi sqrt(E) + 2 sqrt(L+E) 2F1(-1/2,-1/2;1/2;
    E/(L+E))]`` equals the band integral ``2 sqrt(L) - 2 sqrt(E)
    arctan(sqrt(L/E))``; any deviation is logged and the quadrature value
    is the one adopted.
    """
    branch = BranchLabel.parse(branch)
    kappa = _kappa(dim)
    if branch is BranchLabel.DENSITY:
        closed = kappa * dim.tau_minus * dim.Lambda_minus ** 3 / 3.0
        x, w = leggauss(24)
        om = 0.5 * dim.Lambda_minus * (x + 1.0)
        quad_val = kappa * dim.tau_minus * float(np.sum(om ** 2 * w) * 0.5 * dim.Lambda_minus)
    else:
        E, lam, tau = dim.E_gap, dim.Lambda, dim.tau_plus
        if E > 0:
            f = hyp2f1(-0.5, -0.5, 0.5, E / (lam + E)).value.real
            closed = kappa * tau * (-math.pi * math.sqrt(E) + 2.0 * math.sqrt(lam + E) * f)
        else:
            closed = kappa * tau * 2.0 * math.sqrt(lam)
        u, wu = _band_nodes(0.0, dim, _GL16)
        om = E + u * u
        quad_val = kappa * tau * float(np.sum(2.0 * u * u / om * wu))
    dev = abs(closed - quad_val) / max(abs(quad_val), 1e-300)
    if dev > 1e-6:
        log.warning("Gamma(0) closed form deviates from quadrature by %.3g; using quadrature", dev)
    return Gamma0(closed, quad_val, dev)


# ---------------------------------------------------------------------------
# Green functions
# ---------------------------------------------------------------------------

def density_zeta(dim):
    """Long-time mass renormalization ``1 + kappa tau_- Lambda_-``."""
    return 1.0 + _kappa(dim) * dim.tau_minus * dim.Lambda_minus


def spin_slope_moment(dim):
    """``int_0^L sqrt(e) / (E + e)^3 de`` by quadrature."""
    u, wu = _band_nodes(0.0, dim, _GL16)
    om = dim.E_gap + u * u
    return float(np.sum(2.0 * u * u / om ** 3 * wu))


def spin_slope(dim):
    """Long-time slope ``A`` of ``G2 = A t`` on the spin bath.

    ``A = E^5 / [E^5 + (2/3) E^2 L^{3/2} tau F1 - (4/5) E L^{5/2} tau F2
    + (2/7) L^{7/2} tau F3]`` with ``F_n = 2F1(n, n+1/2; n+3/2; -L/E)``,
    the damping scaled by ``kappa``.

    Raises
    ------
    ZeroDivisionError
        If the denominator vanishes.
    """
    E, lam, tau = dim.E_gap, dim.Lambda, dim.tau_plus * _kappa(dim)
    if E <= 0:
        raise ValueError("spin slope needs E_gap > 0")
    w = -lam / E
    f1 = hyp2f1(1.0, 1.5, 2.5, w).value.real
    f2 = hyp2f1(2.0, 2.5, 3.5, w).value.real
    f3 = hyp2f1(3.0, 3.5, 4.5, w).value.real
    denom = (E ** 5 + 2.0 / 3.0 * E ** 2 * lam ** 1.5 * tau * f1
             - 4.0 / 5.0 * E * lam ** 2.5 * tau * f2 + 2.0 / 7.0 * lam ** 3.5 * tau * f3)
    if denom == 0 or not math.isfinite(denom):
        raise ZeroDivisionError("slope denominator vanishes: parameter pathology")
    return E ** 5 / denom


@dataclass(frozen=True)
class GreenFunctions:
    g1: Callable
    g2: Callable
    g2_slope: float
    mode: GreenMode


def _zero_safe(fn, at_zero):
    def wrapped(t):
        tt = _t(t)
        out = np.full(tt.shape, float(at_zero))
        pos = tt > 0
        if pos.any():
            out[pos] = fn(tt[pos])
        return _ret(t, out)
    return wrapped


def green_functions(branch, dim, mode=GreenMode.NUMERIC):
    """Green functions ``G1``, ``G2`` and the long-time slope of ``G2``."""
    branch = BranchLabel.parse(branch)
    mode = GreenMode(mode)
    if branch is BranchLabel.DENSITY:
        slope = 1.0 / density_zeta(dim)
    else:
        slope = spin_slope(dim) if dim.tau_plus * _kappa(dim) != 0 else 1.0
    if mode is GreenMode.ANALYTIC_LONGTIME:
        g1 = _zero_safe(lambda t: np.full(t.shape, slope), slope)
        g2 = _zero_safe(lambda t: slope * t, 0.0)
        return GreenFunctions(g1, g2, slope, mode)
    F1 = green_g1_transform(dim, branch)
    F2 = green_g2_transform(dim, branch)
    g1 = _zero_safe(lambda t: invert_zakian(F1, t), 1.0)
    g2 = _zero_safe(lambda t: invert_zakian(F2, t), 0.0)
    return GreenFunctions(g1, g2, slope, mode)


# ---------------------------------------------------------------------------
# kernel bundle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelSet:
    """Everything the MSD integral and the diagnostics need for one branch."""

    branch: BranchLabel
    gamma: Callable
    gamma0: Gamma0
    nu: Callable
    laplace_gamma: LaplaceFn
    g1: Callable
    g2: Callable
    g2_slope: float
    omega_max: float
    temperature: float
    dim: object = None
    g2_analytic: Optional[Callable] = None


def build_kernels(branch, dim, T=None, mode=GreenMode.NUMERIC):
    """Assemble the kernels of ``branch``.

    Parameters
    ----------
    T : float, optional
        Dimensionless temperature; defaults to ``dim.T``.  ``0`` means the
        low-temperature limit.
    """
    branch = BranchLabel.parse(branch)
    T = dim.T if T is None else T
    if branch is BranchLabel.DENSITY:
        gamma = lambda t: gamma_density(t, dim)  # noqa: E731
        lg = LaplaceFn(lambda z: laplace_gamma_density(z, dim))
        omega_max = dim.Lambda_minus
    else:
        if dim.E_gap <= 0:
            raise ValueError("spin branch needs a gap (Omega > 0)")
        gamma = lambda t: gamma_spin(t, dim)  # noqa: E731
        lg = LaplaceFn(lambda z: laplace_gamma_spin(z, dim))
        omega_max = dim.E_gap + dim.Lambda
    greens = green_functions(branch, dim, mode)
    analytic = green_functions(branch, dim, GreenMode.ANALYTIC_LONGTIME)
    return KernelSet(
        branch=branch,
        gamma=gamma,
        gamma0=gamma0(branch, dim),
        nu=lambda t: noise_kernel(t, dim, branch, T),
        laplace_gamma=lg,
        g1=greens.g1,
        g2=greens.g2,
        g2_slope=greens.g2_slope,
        omega_max=omega_max,
        temperature=T,
        dim=dim,
        g2_analytic=analytic.g2,
    )
