"""Bogoliubov spectra of the coherently coupled two-component condensate.

Energies are returned as angular frequencies (energy / hbar).  With
``e = hbar k^2 / (2 m_B)`` and the branch interaction scales
``(g +- g12) n / hbar = 2 Lambda_+-`` the symmetric (GS1) branches read

    E_-^2 = e (e + 2 Lambda_-)
    E_+^2 = e (e + 2 Lambda_+ + 4 Omega) + 2 Omega (2 Lambda_+ + 2 Omega)
"""

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import hbar


class BranchLabel(str, enum.Enum):
    DENSITY = "density"
    SPIN = "spin"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"density": cls.DENSITY, "-": cls.DENSITY, "minus": cls.DENSITY,
                   "spin": cls.SPIN, "+": cls.SPIN, "plus": cls.SPIN}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown branch {value!r}") from None


class UnstableSpectrumError(ValueError):
    """Negative radicand in a dispersion relation."""


class InsideGapError(ValueError):
    """Spin-branch frequency below the gap has no real wavenumber."""


def _free_energy(k, m_B):
    return hbar * np.asarray(k, dtype=float) ** 2 / (2.0 * m_B)


def _branch_coeffs(branch, scales):
    """(linear coefficient b, constant c) with E^2 = e^2 + b e + c."""
    if BranchLabel.parse(branch) is BranchLabel.DENSITY:
        return 2.0 * scales.Lambda_minus, 0.0
    b = 2.0 * scales.Lambda_plus + 4.0 * scales.Omega
    return b, scales.E_gap ** 2


def dispersion_symmetric(k, branch, scales):
    """Branch energy of the symmetric GS1 condensate.

    Parameters
    ----------
    k : float or ndarray
        Wavenumber (1/m).
    branch : BranchLabel or str
    scales : DerivedScales

    Returns
    -------
    float or ndarray
        Angular frequency (rad/s).
    """
    e = _free_energy(k, scales.m_B)
    b, c = _branch_coeffs(branch, scales)
    out = np.sqrt(e * (e + b) + c)
    return out if np.ndim(out) else float(out)


def _energy_from_frequency(omega, b, c):
    # positive root of e^2 + b e + (c - omega^2) = 0, written without cancellation
    d = np.asarray(omega, dtype=float) ** 2 - c
    return 2.0 * d / (b + np.sqrt(b * b + 4.0 * d))


def inverse_dispersion(omega, branch, scales):
    """Wavenumber (1/m) at which ``branch`` reaches frequency ``omega``.

    Raises
    ------
    InsideGapError
        Spin branch with ``omega < E_gap``.
    ValueError
        Negative frequency on the density branch.
    """
    branch = BranchLabel.parse(branch)
    omega = np.asarray(omega, dtype=float)
    if branch is BranchLabel.DENSITY and np.any(omega < 0):
        raise ValueError("density branch needs omega >= 0")
    if branch is BranchLabel.SPIN and np.any(omega < scales.E_gap):
        raise InsideGapError(f"frequency inside the gap (E_gap = {scales.E_gap:.6g} rad/s)")
    b, c = _branch_coeffs(branch, scales)
    e = np.maximum(_energy_from_frequency(omega, b, c), 0.0)
    k = np.sqrt(2.0 * scales.m_B * e / hbar)
    return k if np.ndim(k) else float(k)


def inverse_dispersion_dimensionless(omega, branch, dim):
    """Dimensionless wavenumber ``k * length_unit`` for a dimensionless frequency.

    In units hbar = m_I = 1 the free energy is ``k^2 / (2 m_B/m_I)``.
    """
    branch = BranchLabel.parse(branch)
    omega = np.asarray(omega, dtype=float)
    if branch is BranchLabel.DENSITY:
        b, c = 2.0 * dim.Lambda_minus, 0.0
    else:
        if np.any(omega < dim.E_gap):
            raise InsideGapError("frequency inside the gap")
        b, c = 2.0 * dim.Lambda_plus + 4.0 * dim.Omega, dim.E_gap ** 2
    e = np.maximum(_energy_from_frequency(omega, b, c), 0.0)
    k = np.sqrt(2.0 * dim.mass_ratio * e)
    return k if np.ndim(k) else float(k)


def bogoliubov_amplitudes(k, branch, scales):
    """Bogoliubov wave functions ``(f, f_tilde)`` of one branch.

    Raises
    ------
    ValueError
        At ``k = 0`` (condensate mode).
    """
    k = np.asarray(k, dtype=float)
    if np.any(k == 0):
        raise ValueError("k = 0 is the condensate mode and carries no Bogoliubov amplitude")
    e = _free_energy(k, scales.m_B)
    energy = dispersion_symmetric(k, branch, scales)
    if BranchLabel.parse(branch) is BranchLabel.SPIN:
        e = e + scales.Omega
    f = np.sqrt(e / (2.0 * energy))
    ft = np.sqrt(energy / (2.0 * e))
    if np.ndim(f) == 0:
        return float(f), float(ft)
    return f, ft


# ---------------------------------------------------------------------------
# general two-branch dispersion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneralSpectrumInput:
    """Inputs of the general two-component dispersion, all in rad/s.

    ``Lambda12_sqrt`` stands for ``Lambda_12 sqrt(n1 n2)``.  ``e_1k`` and
    ``e_2k`` are per-wavenumber arrays (or scalars).
    """

    e_1k: object
    e_2k: object
    Lambda1_n1: float
    Lambda2_n2: float
    Lambda12_sqrt: float
    n1: float
    n2: float
    theta: float
    gamma_k: object = None


def symmetric_general_input(k, scales, theta12=math.pi):
    """General-form inputs for the balanced ground state.

    With ``n1 = n2 = n/2`` and ``tan(theta) = 1`` the single-particle
    energies become ``e + (1 - cos(theta12)) Omega`` and
    ``e + (1 + cos(theta12)) Omega``; the Rabi term carries
    ``sqrt(n1 n2)`` in its denominator and the inter-species term
    ``g12 sqrt(n1 n2)``, as dimensional consistency requires.
    """
    e = _free_energy(k, scales.m_B)
    n1 = n2 = scales.n / 2.0
    theta = math.atan(math.sqrt(n1 / n2))
    root = math.sqrt(n1 * n2)
    c12 = math.cos(theta12)
    e1 = e - (-1) * (1.0 + (-1) * c12) * scales.Omega * scales.n / (2.0 * root)
    e2 = e - (+1) * (1.0 + (+1) * c12) * scales.Omega * scales.n / (2.0 * root)
    g, g12 = scales.g, scales.g12
    s2, c2 = math.sin(2 * theta), math.cos(2 * theta)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    lam1 = (g * n1 * cos_t ** 2 + g * n2 * sin_t ** 2 + g12 * root * s2 * c12) / hbar
    lam2 = (g * n1 * sin_t ** 2 + g * n2 * cos_t ** 2 - g12 * root * s2 * c12) / hbar
    lam12 = ((g * n2 - g * n1) / 2.0 * s2 + g12 * root * c2 * c12) / hbar
    return GeneralSpectrumInput(e1, e2, lam1, lam2, lam12, n1, n2, theta)


def dispersion_general(k, inp):
    """Both branches of the general two-component dispersion.

    ``k`` only fixes the output shape; the wavenumber dependence enters
    through ``inp.e_1k`` and ``inp.e_2k``.

    Returns
    -------
    (E_upper, E_lower)
        The ``+`` and ``-`` roots.  In the symmetric case these are the
        larger and the smaller of the spin and density energies; the two
        symmetric branches cross at large ``k`` when ``4 Omega < 2 g12 n /
        hbar``, so the upper root is not always the spin branch.

    Raises
    ------
    UnstableSpectrumError
        Negative radicand anywhere.
    """
    e1 = np.broadcast_to(np.asarray(inp.e_1k, dtype=float), np.shape(k))
    e2 = np.broadcast_to(np.asarray(inp.e_2k, dtype=float), np.shape(k))
    w1 = e1 ** 2 + 2.0 * inp.Lambda1_n1 * e1
    w2 = e2 ** 2 + 2.0 * inp.Lambda2_n2 * e2
    mix = (w1 - w2) ** 2 + 16.0 * inp.Lambda12_sqrt ** 2 * e1 * e2
    if np.any(mix < 0):
        raise UnstableSpectrumError("negative mixing radicand: dynamically unstable parameters")
    root = np.sqrt(mix)
    upper = 0.5 * (w1 + w2 + root)
    lower = 0.5 * (w1 + w2 - root)
    # rounding can push an exact zero slightly negative
    tol = 1e-12 * np.maximum(np.abs(w1) + np.abs(w2), 1e-300)
    if np.any(lower < -tol):
        raise UnstableSpectrumError("negative branch radicand: dynamically unstable parameters")
    upper = np.sqrt(np.maximum(upper, 0.0))
    lower = np.sqrt(np.maximum(lower, 0.0))
    if np.ndim(upper) == 0:
        return float(upper), float(lower)
    return upper, lower


# ---------------------------------------------------------------------------
# ground state
# ---------------------------------------------------------------------------

class GroundState(str, enum.Enum):
    GS1 = "GS1"
    GS2 = "GS2"


@dataclass(frozen=True)
class GroundStateReport:
    """Ground-state classification of the symmetric condensate.

    Attributes
    ----------
    phase : GroundState
    n1, n2 : float
        Component densities (1/m).
    tan_theta : float
        Mixing angle from the energy minimization at ``theta12 = pi``.
    A : float or None
        Mutual interaction parameter (``None`` at ``Omega = 0``).
    supported : bool
        Dynamics are only implemented over GS1.
    """

    phase: GroundState
    n1: float
    n2: float
    tan_theta: float
    A: object
    supported: bool
    note: str


def ground_state(config):
    """Classify the symmetric ground state as GS1 (balanced) or GS2 (polarized)."""
    n = config.n
    g = config.g1
    interaction = (g - config.g12) * n
    if config.Omega > 0:
        A = (config.g1 + config.g2 - 2.0 * config.g12) * n / (4.0 * hbar * config.Omega)
    else:
        A = None
    polarized = A is not None and abs(A) > 1.0
    if polarized:
        imbalance = n * math.sqrt(1.0 - (2.0 * hbar * config.Omega / interaction) ** 2)
        n1, n2 = (n + imbalance) / 2.0, (n - imbalance) / 2.0
        return GroundStateReport(GroundState.GS2, n1, n2, math.sqrt(n1 / n2), A, False, "polarized ground state: dynamics not supported")
    note = "balanced ground state"
    if A is None:
        note = "Omega = 0: miscibility parameter undefined, balanced state assumed"
    return GroundStateReport(GroundState.GS1, n / 2.0, n / 2.0, 1.0, A, True, note)
