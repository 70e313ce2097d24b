"""Spectral densities of the two coupling scenarios.

Every function accepts either :class:`~polaron.params.DerivedScales` (SI,
result in kg/s^2) or :class:`~polaron.params.DimensionlessConfig` (units
hbar = m_I = 1).  Only attributes shared by both are used.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .spectrum import BranchLabel


class DensityForm(str, enum.Enum):
    FULL = "FULL"
    SIMPLIFIED = "SIMPLIFIED"


def _arr(omega):
    return np.asarray(omega, dtype=float)


def _out(x):
    return x if np.ndim(x) else float(x)


def j_density_full(omega, scales):
    """Full density-branch spectral density ``tau~_- G^{3/2} / sqrt(F)``.

    ``F = 1 + (omega/Lambda_-)^2`` and ``G = sqrt(F) - 1``; ``G`` is formed
    as ``x^2 / (sqrt(1 + x^2) + 1)`` so the small-frequency end keeps full
    relative precision.
    """
    x = _arr(omega) / scales.Lambda_minus
    root = np.sqrt(1.0 + x * x)
    g = x * x / (root + 1.0)
    return _out(scales.tau_tilde_minus * g ** 1.5 / root)


def j_density_cubic(omega, scales):
    """Low-frequency density-branch form ``m_I tau_- omega^3`` (no cutoff)."""
    w = _arr(omega)
    return _out(scales.m_I * scales.tau_minus * w ** 3)


def j_density_cutoff(omega, scales):
    """Cubic form restricted to ``[0, Lambda_-]``, the bath used for dynamics."""
    w = _arr(omega)
    inside = (w >= 0) & (w <= scales.Lambda_minus)
    return _out(np.where(inside, scales.m_I * scales.tau_minus * w ** 3, 0.0))


def reduced_spin_prefactor(scales):
    """``tau~_+ / sqrt(Lambda_+)``, finite also at ``g = g12``.

    Both prefactors scale as ``sqrt(Lambda)``, so at ``Lambda_+ = 0`` the
    ratio is continued from the density-branch prefactor.
    """
    if scales.Lambda_plus > 0 and scales.tau_tilde_plus is not None:
        return scales.tau_tilde_plus / math.sqrt(scales.Lambda_plus)
    if scales.Lambda_plus < 0:
        raise ValueError("Lambda_+ < 0 (g < g12): spin spectral density is imaginary")
    return scales.tau_tilde_minus / (scales.m_I * math.sqrt(scales.Lambda_minus))


def j_spin_full(omega, scales, return_flag=False):
    """Full spin-branch spectral density ``m_I tau~_+ G_+ / sqrt(F_+)``.

    With ``R = sqrt(Lambda_+^2 + omega^2)`` and ``S = sqrt(Lambda_+^2 +
    E_gap^2)`` this equals ``m_I c (2R - S - Lambda_+) sqrt(R - S) / (2R)``
    where ``c = tau~_+/sqrt(Lambda_+)``; the rewritten form stays finite
    at ``Lambda_+ = 0``.

    Parameters
    ----------
    return_flag : bool
        Also return a boolean mask of below-gap inputs (set to 0).
    """
    w = _arr(omega)
    lam = scales.Lambda_plus
    if lam < 0:
        raise ValueError("Lambda_+ < 0 (g < g12): spin spectral density is imaginary")
    c = reduced_spin_prefactor(scales)
    r = np.hypot(lam, w)
    s = math.hypot(lam, scales.E_gap)
    below = (r - s < 0) | (w < scales.E_gap)
    rad = np.where(below, 0.0, r - s)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = scales.m_I * c * (2.0 * r - s - lam) * np.sqrt(rad) / (2.0 * r)
    val = np.where(below | (r == 0), 0.0, val)
    val = _out(val)
    if return_flag:
        return val, _out(below)
    return val


def j_spin_gapped(omega, scales):
    """Gapped square-root density on the band ``[E_gap, E_gap + Lambda]``."""
    w = _arr(omega)
    eps = w - scales.E_gap
    inside = (eps >= 0) & (w <= scales.E_gap + scales.Lambda)
    return _out(np.where(inside, scales.m_I * scales.tau_plus * np.sqrt(np.maximum(eps, 0.0)), 0.0))


def spin_band_integral(scales):
    """Exact ``int J_gapped d omega = (2/3) m_I tau_+ Lambda^{3/2}``."""
    return 2.0 / 3.0 * scales.m_I * scales.tau_plus * scales.Lambda ** 1.5


@dataclass(frozen=True)
class BathSpec:
    """A spectral density together with its frequency support."""

    branch: BranchLabel
    form: DensityForm
    support: tuple
    scales: object

    def __call__(self, omega):
        if self.branch is BranchLabel.DENSITY:
            fn = j_density_full if self.form is DensityForm.FULL else j_density_cutoff
        else:
            fn = j_spin_full if self.form is DensityForm.FULL else j_spin_gapped
        return fn(omega, self.scales)


def bath_spec(branch, scales, form=DensityForm.SIMPLIFIED):
    """Bath description used by the kernels; SIMPLIFIED drives the dynamics."""
    branch = BranchLabel.parse(branch)
    form = DensityForm(form)
    if branch is BranchLabel.DENSITY:
        support = (0.0, math.inf) if form is DensityForm.FULL else (0.0, scales.Lambda_minus)
    else:
        hi = math.inf if form is DensityForm.FULL else scales.E_gap + scales.Lambda
        support = (scales.E_gap, hi)
    return BathSpec(branch, form, support, scales)
