"""Physical inputs, validity gates, derived scales and the unit system.

All microscopic inputs are SI.  Downstream numerics run in units with
hbar = m_I = 1 and the frequency unit ``OMEGA_BAR = 1000*pi rad/s``; the
matching length unit is ``sqrt(hbar / (m_I * OMEGA_BAR))``.
"""

import dataclasses
import enum
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

from scipy.constants import hbar, k as k_boltzmann

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

OMEGA_BAR = 1000.0 * math.pi
MASS_RB87 = 1.4432e-25
MASS_K41 = 6.8014e-26


class CouplingScenario(str, enum.Enum):
    """Sign structure of the impurity coupling to the two components.

    Equal signs couple the impurity to the density (-) branch, opposite
    signs to the spin (+) branch.
    """

    SAME_SIGN = "SAME_SIGN"
    OPPOSITE_SIGN = "OPPOSITE_SIGN"


class ConfigError(ValueError):
    """Malformed or unknown configuration input."""


class ScaleError(ValueError):
    """A derived scale does not exist for the given inputs."""


@dataclass(frozen=True)
class PhysicalConfig:
    """Microscopic inputs in SI units.

    Attributes
    ----------
    m_B, m_I : float
        Boson and impurity masses (kg).
    g1, g2, g12 : float
        1D intra- and inter-species couplings (J m).
    gIB : float
        Impurity-boson coupling magnitude (J m).
    coupling_scenario : CouplingScenario
    n : float
        Total linear density (1/m).
    Omega : float
        Rabi frequency (rad/s).
    T : float
        Temperature (K).  ``0`` selects the low-temperature limit.
    theta12, delta : float
        Relative phase and detuning, fixed to pi and 0.
    Lambda_cut : float
        Hard cutoff of the gapped spectral density (rad/s).
    v0_sq : float
        Initial velocity variance (m^2/s^2).
    tau_plus_override : float or None
        Dimensionless spin-branch coupling replacing the microscopic value.
    damping_channels : int
        Number of condensate components whose identical contributions are
        summed in the damping kernel.  ``2`` keeps damping and noise
        related by the fluctuation-dissipation theorem; ``1`` reproduces
        the single-channel closed forms.
    """

    m_B: float = MASS_RB87
    m_I: float = MASS_K41
    g1: float = 2.15e-37
    g2: float = 2.15e-37
    g12: float = 2.15e-37
    gIB: float = 0.5e-37
    coupling_scenario: CouplingScenario = CouplingScenario.OPPOSITE_SIGN
    n: float = 7e6
    Omega: float = 100.0 * math.pi
    T: float = 0.0
    theta12: float = math.pi
    delta: float = 0.0
    Lambda_cut: float = 10.0 * OMEGA_BAR
    v0_sq: float = 0.0
    tau_plus_override: Optional[float] = None
    damping_channels: int = 2

    def __post_init__(self):
        object.__setattr__(self, "coupling_scenario", CouplingScenario(self.coupling_scenario))

    @property
    def g(self):
        return self.g1

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def reference_config():
    """Rb-87 bath, K-41 impurity, spin-branch coupling with tau_+ = 1."""
    return PhysicalConfig(tau_plus_override=1.0)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

class GateStatus(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    NOT_APPLICABLE = "NOT_APPLICABLE"


@dataclass(frozen=True)
class Gate:
    name: str
    status: GateStatus
    detail: str
    branches: tuple = ("density", "spin")


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of every validity gate for one configuration."""

    gates: tuple
    mutual_interaction: Optional[float]

    def usable(self, branch):
        """True if no gate affecting ``branch`` failed."""
        branch = str(getattr(branch, "value", branch)).lower()
        return all(g.status != GateStatus.FAIL for g in self.gates if branch in g.branches)

    def failures(self, branch=None):
        out = [g for g in self.gates if g.status == GateStatus.FAIL]
        if branch is not None:
            branch = str(getattr(branch, "value", branch)).lower()
            out = [g for g in out if branch in g.branches]
        return out

    def as_dict(self):
        return {
            "mutual_interaction": self.mutual_interaction,
            "gates": [
                {"name": g.name, "status": g.status.value, "detail": g.detail,
                 "branches": list(g.branches)}
                for g in self.gates
            ],
        }


_NUMERIC_FIELDS = ("m_B", "m_I", "g1", "g2", "g12", "gIB", "n", "Omega", "T",
                   "theta12", "delta", "Lambda_cut", "v0_sq")


def validate(config):
    """Run every validity gate.

    Returns
    -------
    ValidationReport

    Raises
    ------
    ValueError
        Non-finite inputs or a negative Rabi frequency.
    """
    for name in _NUMERIC_FIELDS:
        val = getattr(config, name)
        if not math.isfinite(val):
            raise ValueError(f"{name} must be finite, got {val!r}")
    if config.tau_plus_override is not None and not math.isfinite(config.tau_plus_override):
        raise ValueError("tau_plus_override must be finite")
    if config.Omega < 0:
        raise ValueError(f"Omega must be non-negative, got {config.Omega!r}")

    def gate(name, ok, detail, branches=("density", "spin")):
        return Gate(name, GateStatus.PASS if ok else GateStatus.FAIL, detail, branches)

    gates = [
        gate("symmetric_couplings", config.g1 == config.g2,
             f"g1={config.g1:.6g}, g2={config.g2:.6g}"),
        gate("repulsive_interspecies", config.g12 > 0, f"g12={config.g12:.6g}"),
        gate("pi_state", math.isclose(config.theta12, math.pi, rel_tol=0, abs_tol=1e-12),
             f"theta12={config.theta12!r}"),
        gate("zero_detuning", config.delta == 0.0, f"delta={config.delta!r}"),
        gate("positive_density", config.n > 0, f"n={config.n:.6g}"),
        gate("positive_masses", config.m_B > 0 and config.m_I > 0,
             f"m_B={config.m_B:.6g}, m_I={config.m_I:.6g}"),
        gate("positive_cutoff", config.Lambda_cut > 0, f"Lambda_cut={config.Lambda_cut:.6g}",
             ("spin",)),
        gate("non_negative_temperature", config.T >= 0, f"T={config.T!r}"),
        gate("non_negative_v0_sq", config.v0_sq >= 0, f"v0_sq={config.v0_sq!r}"),
        gate("damping_channels", config.damping_channels in (1, 2),
             f"damping_channels={config.damping_channels!r}"),
    ]

    mutual = None
    # hbar * Omega underflows for absurdly small Omega; treat that as Omega = 0
    if 4.0 * hbar * config.Omega > 0:
        mutual = (config.g1 + config.g2 - 2.0 * config.g12) * config.n / (4.0 * hbar * config.Omega)
        gates.append(gate("miscibility", abs(mutual) < 1.0, f"|A|={abs(mutual):.6g} (need < 1)"))
        gates.append(Gate("gapped_spin_branch", GateStatus.PASS, "Omega > 0", ("spin",)))
    else:
        gates.append(Gate("miscibility", GateStatus.NOT_APPLICABLE,
                          "A undefined at Omega = 0", ("density", "spin")))
        gates.append(Gate("gapped_spin_branch", GateStatus.FAIL,
                          "spin dynamics need Omega > 0 (no gap)", ("spin",)))

    if config.coupling_scenario == CouplingScenario.OPPOSITE_SIGN:
        gates.append(gate("real_spin_relaxation", config.g1 >= config.g12,
                          f"g={config.g1:.6g} >= g12={config.g12:.6g} required", ("spin",)))
    else:
        gates.append(Gate("real_spin_relaxation", GateStatus.NOT_APPLICABLE,
                          "same-sign coupling", ("spin",)))
    return ValidationReport(tuple(gates), mutual)


# ---------------------------------------------------------------------------
# derived scales
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DerivedScales:
    """Every frequency, prefactor and coefficient derived from the inputs (SI).

    Attributes
    ----------
    Lambda_minus, Lambda_plus : float
        ``n (g +- g12) / (2 hbar)`` in rad/s; ``Lambda_plus`` keeps its sign.
    E_gap : float
        Spin-branch gap as an angular frequency.
    tau_minus : float
        Density-branch coefficient of ``J = m_I tau_minus omega^3`` (s).
    tau_tilde_minus : float
        Prefactor of the full density spectral density (kg/s^2), fixed so
        that the full form reduces to the cubic one at low frequency.
    tau_tilde_plus : float or None
        Prefactor of the full spin spectral density (1/s^2); ``None`` when
        ``g < g12``.
    tau_plus : float
        Coefficient of the gapped density ``m_I tau_plus sqrt(omega - E_gap)``
        (s^-3/2); the override when given, else the ``g ~ g12`` formula.
    tau_plus_near_gap : float or None
        Near-gap coefficient implied by the full spin spectral density.
    """

    m_B: float
    m_I: float
    m_R: float
    n: float
    g: float
    g12: float
    Omega: float
    T: float
    v0_sq: float
    Lambda_cut: float
    Lambda_minus: float
    Lambda_plus: float
    E_gap: float
    eta_minus: float
    tau_minus: float
    tau_tilde_minus: float
    tau_plus: float
    tau_plus_source: str
    tau_tilde_plus: Optional[float]
    tau_plus_near_gap: Optional[float]
    c_d: float
    A_misc: Optional[float]
    Delta_detuning: Optional[float]
    damping_channels: int
    scenario: CouplingScenario

    @property
    def Lambda(self):
        return self.Lambda_cut


def _gap(Omega, g, g12, n):
    return math.sqrt(2.0 * hbar * Omega * ((g - g12) * n + 2.0 * hbar * Omega)) / hbar


def derive_scales(config):
    """Compute all derived scales.

    Raises
    ------
    ScaleError
        ``g < g12`` with opposite-sign coupling (imaginary spin relaxation
        time) or a negative gap radicand.
    """
    g, g12, n = config.g1, config.g12, config.n
    m_B, m_I = config.m_B, config.m_I
    if config.coupling_scenario == CouplingScenario.OPPOSITE_SIGN and g < g12:
        raise ScaleError("g < g12: tau_tilde_plus would be imaginary (no real relaxation time)")
    lam_m = n * (g + g12) / (2.0 * hbar)
    lam_p = n * (g - g12) / (2.0 * hbar)
    radicand = 2.0 * hbar * config.Omega * ((g - g12) * n + 2.0 * hbar * config.Omega)
    if radicand < 0:
        raise ScaleError("negative gap radicand: spin branch dynamically unstable")
    e_gap = math.sqrt(radicand) / hbar

    eta = config.gIB / (g + g12)
    tau_m = (2.0 * eta) ** 2 / (2.0 * math.pi * m_I) * m_B ** 1.5 / (n ** 1.5 * math.sqrt(g + g12))
    tau_tilde_m = 2.0 ** 1.5 * m_I * tau_m * lam_m ** 3
    if lam_p >= 0:
        tau_tilde_p = tau_tilde_m * math.sqrt(lam_p / lam_m) / m_I
    else:
        tau_tilde_p = None

    if config.tau_plus_override is not None:
        tau_p = config.tau_plus_override * OMEGA_BAR ** 1.5
        source = "override"
    else:
        tau_p = (2.0 * config.gIB) ** 2 * n * m_B ** 1.5 / (
            math.sqrt(2.0) * math.pi * m_I * hbar ** 2.5)
        source = "microscopic"

    near_gap = None
    if lam_p >= 0:
        # J_+ -> m_I tau_+ sqrt(omega - E_gap) just above the gap
        big = math.hypot(lam_p, e_gap)
        reduced = tau_tilde_m / (m_I * math.sqrt(lam_m))
        if big > 0:
            near_gap = reduced * (big - lam_p) * math.sqrt(e_gap) / (2.0 * big ** 1.5)

    if 4.0 * hbar * config.Omega > 0:
        a_misc = (config.g1 + config.g2 - 2.0 * g12) * n / (4.0 * hbar * config.Omega)
        detuning = (2.0 * config.delta + (config.g1 - config.g2) * n) / (4.0 * hbar * config.Omega)
    else:
        a_misc = None
        detuning = None

    return DerivedScales(
        m_B=m_B, m_I=m_I, m_R=m_B * m_I / (m_B + m_I), n=n, g=g, g12=g12,
        Omega=config.Omega, T=config.T, v0_sq=config.v0_sq, Lambda_cut=config.Lambda_cut,
        Lambda_minus=lam_m, Lambda_plus=lam_p, E_gap=e_gap, eta_minus=eta,
        tau_minus=tau_m, tau_tilde_minus=tau_tilde_m, tau_plus=tau_p,
        tau_plus_source=source, tau_tilde_plus=tau_tilde_p, tau_plus_near_gap=near_gap,
        c_d=math.sqrt(n * (g + g12) / (2.0 * m_B)), A_misc=a_misc,
        Delta_detuning=detuning, damping_channels=config.damping_channels,
        scenario=config.coupling_scenario,
    )


# ---------------------------------------------------------------------------
# dimensionless units
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DimensionlessConfig:
    """Inputs for the numerics in units hbar = m_I = 1, frequency OMEGA_BAR.

    Frequencies are divided by ``omega_unit``; ``tau_minus`` is multiplied
    by it; ``tau_plus`` (and its near-gap variant) is divided by
    ``omega_unit**1.5``; ``tau_tilde_minus`` by ``m_I omega_unit**2``;
    ``tau_tilde_plus`` by ``omega_unit**2``; temperature is ``k_B T /
    (hbar omega_unit)``; ``v0_sq`` is divided by ``(length_unit *
    omega_unit)**2``.  ``mass_ratio`` is ``m_B / m_I``.
    """

    Lambda_minus: float
    Lambda_plus: float
    Lambda: float
    E_gap: float
    Omega: float
    tau_minus: float
    tau_tilde_minus: float
    tau_plus: float
    tau_tilde_plus: Optional[float]
    tau_plus_near_gap: Optional[float]
    T: float
    v0_sq: float
    mass_ratio: float
    damping_channels: int = 2
    omega_unit: float = OMEGA_BAR
    length_unit: float = 1.0
    m_I: float = 1.0
    scales: Optional[DerivedScales] = field(default=None, compare=False, repr=False)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def length_unit(m_I, omega_unit=OMEGA_BAR):
    return math.sqrt(hbar / (m_I * omega_unit))


def nondimensionalize(config, scales, omega_unit=OMEGA_BAR):
    """Convert derived SI scales into the internal dimensionless set."""
    w = omega_unit
    ell = length_unit(scales.m_I, w)

    def opt(v, f):
        return None if v is None else f(v)

    return DimensionlessConfig(
        Lambda_minus=scales.Lambda_minus / w,
        Lambda_plus=scales.Lambda_plus / w,
        Lambda=scales.Lambda_cut / w,
        E_gap=scales.E_gap / w,
        Omega=scales.Omega / w,
        tau_minus=scales.tau_minus * w,
        tau_tilde_minus=scales.tau_tilde_minus / (scales.m_I * w ** 2),
        tau_plus=scales.tau_plus / w ** 1.5,
        tau_tilde_plus=opt(scales.tau_tilde_plus, lambda v: v / w ** 2),
        tau_plus_near_gap=opt(scales.tau_plus_near_gap, lambda v: v / w ** 1.5),
        T=k_boltzmann * scales.T / (hbar * w),
        v0_sq=scales.v0_sq / (ell * w) ** 2,
        mass_ratio=scales.m_B / scales.m_I,
        damping_channels=scales.damping_channels,
        omega_unit=w,
        length_unit=ell,
        m_I=1.0,
        scales=scales,
    )


def redimensionalize(dim, m_I):
    """Inverse of :func:`nondimensionalize` for every converted quantity.

    Returns
    -------
    dict
        SI values keyed like :class:`DerivedScales` fields.
    """
    w, ell = dim.omega_unit, dim.length_unit

    def opt(v, f):
        return None if v is None else f(v)

    return {
        "Lambda_minus": dim.Lambda_minus * w,
        "Lambda_plus": dim.Lambda_plus * w,
        "Lambda_cut": dim.Lambda * w,
        "E_gap": dim.E_gap * w,
        "Omega": dim.Omega * w,
        "tau_minus": dim.tau_minus / w,
        "tau_tilde_minus": dim.tau_tilde_minus * m_I * w ** 2,
        "tau_plus": dim.tau_plus * w ** 1.5,
        "tau_tilde_plus": opt(dim.tau_tilde_plus, lambda v: v * w ** 2),
        "tau_plus_near_gap": opt(dim.tau_plus_near_gap, lambda v: v * w ** 1.5),
        "T": dim.T * hbar * w / k_boltzmann,
        "v0_sq": dim.v0_sq * (ell * w) ** 2,
        "m_B": dim.mass_ratio * m_I,
    }


def prepare(config, branch=None, omega_unit=OMEGA_BAR):
    """Validate, derive and nondimensionalize in one step.

    Returns
    -------
    report, scales, dim
    """
    report = validate(config)
    scales = derive_scales(config)
    return report, scales, nondimensionalize(config, scales, omega_unit)


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

_FIELDS = {f.name: f for f in dataclasses.fields(PhysicalConfig)}


def config_from_mapping(data, base=None):
    """Build a config from flat key/value pairs (SI units).

    Raises
    ------
    ConfigError
        Unknown keys or values of the wrong type.
    """
    base = base or PhysicalConfig()
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    values = {}
    for key, raw in data.items():
        if isinstance(raw, dict):
            raise ConfigError(f"config must be flat; '{key}' is a table")
        if key == "coupling_scenario":
            try:
                values[key] = CouplingScenario(str(raw).upper())
            except ValueError as exc:
                raise ConfigError(f"bad coupling_scenario {raw!r}") from exc
        elif key == "damping_channels":
            if isinstance(raw, bool) or not isinstance(raw, int):
                raise ConfigError("damping_channels must be an integer")
            values[key] = raw
        elif key == "tau_plus_override" and raw is None:
            values[key] = None
        else:
            if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                raise ConfigError(f"'{key}' must be a number, got {raw!r}")
            values[key] = float(raw)
    return dataclasses.replace(base, **values)


def load_config(path):
    """Read a flat TOML file of SI values into a :class:`PhysicalConfig`."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return config_from_mapping(data)
