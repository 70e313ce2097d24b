"""Search for undamped oscillations below the spin gap.

A real frequency ``omega`` in ``(0, E_gap)`` would be a long-lived mode if
``omega^2 + Gamma(0) - Delta(omega) = 0``, where ``Delta`` is the bath self
energy.  Below the band ``Delta`` is an ordinary integral and is never
positive, so for physical parameters the condition has no root.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .kernels import gamma0
from .specfun import hyp2f1_kernel_family
from .spectrum import BranchLabel


class Verdict(str, enum.Enum):
    NO_POLE = "NO_POLE"
    POLE_FOUND = "POLE_FOUND"


def self_energy(omega, dim):
    """Sub-gap bath self energy of the gapped square-root band.

    ``Delta(w) = -2 tau_+ Lambda^{3/2} 2F1(1, 3/2; 5/2; -Lambda/(E - w)) / (3 (E - w))``

    Raises
    ------
    ValueError
        For ``omega >= E_gap`` (inside the band a principal value is needed).
    """
    w = np.asarray(omega, dtype=float)
    E, lam, tau = dim.E_gap, dim.Lambda, dim.tau_plus
    if np.any(w >= E):
        raise ValueError("self energy is only defined below the gap")
    a = E - w
    if tau == 0:
        out = np.zeros_like(a)
    else:
        f = hyp2f1_kernel_family(-lam / a).real
        out = -2.0 * tau * lam ** 1.5 * f / (3.0 * a)
    return out if out.ndim else float(out)


def self_energy_quadrature(omega, dim):
    """``int J(w') / (w - w') dw'`` over the band by adaptive quadrature.

    Uses ``u = sqrt(w' - E)`` so the integrand is smooth.
    """
    w = float(omega)
    E, lam, tau = dim.E_gap, dim.Lambda, dim.tau_plus
    if w >= E:
        raise ValueError("self energy is only defined below the gap")
    a = E - w
    val, _ = integrate.quad(lambda u: 2.0 * u * u / (a + u * u), 0.0, math.sqrt(lam),
                            epsabs=0.0, epsrel=1e-13, limit=200)
    return -tau * val


@dataclass
class PoleScan:
    """Result of scanning the pole condition below the gap."""

    omega_grid: np.ndarray
    condition_values: np.ndarray
    self_energy_values: np.ndarray
    gamma0: float
    sign_changes: list = field(default_factory=list)
    roots: list = field(default_factory=list)
    verdict: Verdict = Verdict.NO_POLE

    @property
    def self_energy_non_positive(self):
        return bool(np.all(self.self_energy_values <= 0.0))

    def as_dict(self):
        return {
            "verdict": self.verdict.value,
            "gamma0": self.gamma0,
            "grid_size": int(self.omega_grid.size),
            "omega_min": float(self.omega_grid[0]),
            "omega_max": float(self.omega_grid[-1]),
            "condition_min": float(np.min(self.condition_values)),
            "self_energy_max": float(np.max(self.self_energy_values)),
            "self_energy_non_positive": self.self_energy_non_positive,
            "sign_changes": [list(map(float, s)) for s in self.sign_changes],
            "roots": [float(r) for r in self.roots],
        }


def pole_scan(dim, grid_size=2048, delta_shift=0.0, rtol=1e-8):
    """Evaluate ``omega^2 + Gamma(0) - kappa Delta(omega)`` on ``(0, E_gap)``.

    ``Gamma(0)`` is the quadrature value of the damping kernel, which
    already carries the damping weight ``kappa``; ``Delta`` is scaled by
    the same weight so both terms share one convention.

    Parameters
    ----------
    dim : DimensionlessConfig
    grid_size : int
        Number of interior grid points.
    delta_shift : float
        Constant added to ``Delta``; a test hook to plant a root.
    rtol : float
        Relative width to which bisection refines each root.
    """
    E = dim.E_gap
    if not E > 0:
        raise ValueError("pole scan needs a gapped spin branch")
    kappa = getattr(dim, "damping_channels", 1)
    g0 = gamma0(BranchLabel.SPIN, dim).value
    omega = E * np.arange(1, grid_size + 1) / (grid_size + 1)
    delta = self_energy(omega, dim)

    def condition(w):
        return w * w + g0 - kappa * (self_energy(w, dim) + delta_shift)

    values = omega * omega + g0 - kappa * (delta + delta_shift)
    if not np.all(np.isfinite(values)):
        raise ArithmeticError("pole condition is not finite on the scan grid")
    scan = PoleScan(omega, values, delta, g0)
    signs = np.sign(values)
    for i in np.nonzero(signs[:-1] * signs[1:] <= 0)[0]:
        lo, hi = omega[i], omega[i + 1]
        scan.sign_changes.append((float(lo), float(hi)))
        if values[i] == 0:
            root = float(lo)
        elif values[i + 1] == 0:
            root = float(hi)
        else:
            root = optimize.bisect(condition, lo, hi, xtol=1e-300, rtol=max(rtol, 4e-16), maxiter=200)
        if not scan.roots or root != scan.roots[-1]:
            scan.roots.append(root)
    scan.verdict = Verdict.POLE_FOUND if scan.roots else Verdict.NO_POLE
    return scan
