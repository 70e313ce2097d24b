"""Command-line front end.

Every subcommand reads one flat TOML config (SI units), expands the
optional ``--sweep`` axes into a list of configs, evaluates the points on
a thread pool capped by ``POLARON_THREADS`` and writes one CSV per point
plus ``manifest.json``.  Points are written after an ordered join, so the
files do not depend on scheduling.

Exit codes: 0 success, 2 bad arguments or config, 3 validation failure,
4 convergence failure.
"""

import argparse
import csv
import dataclasses
import enum
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, _accel
from .kernels import build_kernels
from .laplace import InversionMethod, green_g2_transform, invert, known_pair, KNOWN_PAIRS
from .msd import default_grid, linearity_check, msd_numeric, plateau_stats
from .params import (ConfigError, PhysicalConfig, ScaleError,
                     derive_scales, load_config, nondimensionalize, validate)
from .sdensity import j_density_cubic, j_density_full, j_spin_full, j_spin_gapped
from .spectrum import BranchLabel, dispersion_symmetric
from .stability import pole_scan

log = logging.getLogger("polaron")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_CONVERGENCE = 4

SWEEP_FIELDS = {"OMEGA": "Omega", "GIB": "gIB", "TAU_PLUS": "tau_plus_override",
                "TEMPERATURE": "T"}


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    """One sweep axis with its expanded values."""

    axis: str
    values: tuple

    @property
    def field(self):
        return SWEEP_FIELDS[self.axis]


def parse_sweep(text):
    """Parse ``AXIS=lo:hi:count:log|lin`` or ``AXIS=v1,v2,...``.

    Raises
    ------
    ValueError
        Unknown axis, malformed range or non-finite values.
    """
    if "=" not in text:
        raise ValueError(f"sweep {text!r} must look like AXIS=lo:hi:count:log|lin")
    axis, spec = text.split("=", 1)
    axis = axis.strip().upper()
    if axis not in SWEEP_FIELDS:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_FIELDS)}")
    parts = spec.split(":")
    if len(parts) == 4:
        lo, hi = float(parts[0]), float(parts[1])
        count = int(parts[2])
        spacing = parts[3].strip().lower()
        if count < 1:
            raise ValueError("sweep count must be at least 1")
        if spacing == "lin":
            values = np.linspace(lo, hi, count)
        elif spacing == "log":
            if lo <= 0 or hi <= 0:
                raise ValueError("log sweep needs positive bounds")
            values = np.geomspace(lo, hi, count)
        else:
            raise ValueError(f"sweep spacing must be 'log' or 'lin', got {parts[3]!r}")
        values = [float(v) for v in values]
    elif len(parts) == 1:
        values = [float(v) for v in spec.split(",") if v.strip()]
    else:
        raise ValueError(f"malformed sweep {text!r}")
    if not values or not all(math.isfinite(v) for v in values):
        raise ValueError(f"sweep {axis} needs finite values")
    return SweepSpec(axis, tuple(values))


def expand_sweeps(base, sweeps):
    """Configs of the cartesian product of ``sweeps``, in a fixed order.

    Returns
    -------
    list of (dict, PhysicalConfig)
        Sweep coordinates and the config of each point.
    """
    if not sweeps:
        return [({}, base)]
    points = []
    for combo in itertools.product(*(s.values for s in sweeps)):
        coords = {s.axis: v for s, v in zip(sweeps, combo)}
        changes = {s.field: v for s, v in zip(sweeps, combo)}
        points.append((coords, base.replace(**changes)))
    return points


def thread_cap():
    """Worker count from ``POLARON_THREADS`` (default: available CPUs)."""
    raw = os.environ.get("POLARON_THREADS")
    if raw is None or raw.strip() == "":
        try:
            return max(1, len(os.sched_getaffinity(0)))
        except AttributeError:
            return max(1, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise CliError(f"POLARON_THREADS must be an integer, got {raw!r}", EXIT_PARSE) from None
    if n < 1:
        raise CliError("POLARON_THREADS must be at least 1", EXIT_PARSE)
    return n


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, str):
        return v
    return "%.17g" % v


def write_csv(path, header, columns):
    """Write equal-length columns with 17 significant digits and LF endings."""
    rows = zip(*columns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, enum.Enum):
        return obj.value
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(path, payload):
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# per-point work
# ---------------------------------------------------------------------------

@dataclass
class PointResult:
    index: int
    coords: dict
    config: PhysicalConfig
    tables: list = field(default_factory=list)      # (suffix, header, columns)
    documents: list = field(default_factory=list)   # (suffix, payload)
    summary: dict = field(default_factory=dict)
    validation: Optional[dict] = None
    scales: Optional[object] = None
    warnings: list = field(default_factory=list)
    error: Optional[str] = None
    code: int = EXIT_OK


def _prepare_point(res, args, branch):
    """Validate and derive; returns ``dim`` or records a validation failure."""
    try:
        report = validate(res.config)
    except ValueError as exc:
        res.error, res.code = str(exc), EXIT_VALIDATION
        return None
    res.validation = report.as_dict()
    failures = report.failures(branch) if branch is not None else []
    if failures:
        msg = "; ".join(f"{g.name}: {g.detail}" for g in failures)
        if not args.soft_fail:
            res.error, res.code = f"validation failed: {msg}", EXIT_VALIDATION
            return None
        res.warnings.append(f"validation failed (soft): {msg}")
    try:
        scales = derive_scales(res.config)
    except ScaleError as exc:
        res.error, res.code = str(exc), EXIT_VALIDATION
        return None
    res.scales = scales
    dim = nondimensionalize(res.config, scales)
    if args.low_temp:
        dim = dim.replace(T=0.0)
    return dim


def _g2_by_method(kernels, dim, method):
    if method is InversionMethod.ZAKIAN:
        return kernels.g2
    F2 = green_g2_transform(dim, kernels.branch)

    def g2(t):
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros(tt.shape)
        pos = tt > 0
        if pos.any():
            out[pos] = invert(F2, tt[pos], method).values
        return out if np.ndim(t) else float(out[0])
    return g2


def _run_msd(res, args):
    branch = BranchLabel.parse(args.branch)
    dim = _prepare_point(res, args, branch)
    if dim is None:
        return
    kernels = build_kernels(branch, dim, T=dim.T)
    method = InversionMethod(args.method)
    if method is not InversionMethod.ZAKIAN:
        kernels = dataclasses.replace(kernels, g2=_g2_by_method(kernels, dim, method))
    grid = default_grid(args.tmin, args.tmax, args.points)
    series = msd_numeric(grid, branch, kernels, dim.v0_sq, raise_on_failure=False)
    lin = linearity_check(series, branch, dim, dim.T)
    alpha = series.alpha if series.alpha is not None else np.full(grid.shape, np.nan)
    res.tables.append(("", ["t", "msd", "alpha", "regime_label"],
                       [series.t, series.msd, alpha, list(series.labels())]))
    plateau = plateau_stats(series)
    res.summary = {
        "branch": branch.value,
        "temperature": dim.T,
        "regimes": [r.as_dict() for r in series.regimes],
        "plateau": None if plateau is None else {"alpha_mean": plateau[0], "duration_ratio": plateau[1]},
        "t_valid": lin["t_valid"],
        "linearity": lin,
        "convergence": series.convergence,
    }
    if branch is BranchLabel.SPIN:
        res.summary["stability"] = pole_scan(dim).as_dict()
    if not series.convergence.get("passed", True):
        res.error = (f"refinement gate failed: change {series.convergence['max_relative_change']:.3g} "
                     f"at t={series.convergence['worst_t']:.6g}")
        res.code = EXIT_CONVERGENCE


def _run_spectrum(res, args):
    dim = _prepare_point(res, args, None)
    if dim is None:
        return
    k = np.linspace(0.0, args.kmax, args.points)
    k_si = k / dim.length_unit
    e_minus = dispersion_symmetric(k_si, BranchLabel.DENSITY, res.scales) / dim.omega_unit
    e_plus = dispersion_symmetric(k_si, BranchLabel.SPIN, res.scales) / dim.omega_unit
    res.tables.append(("", ["k", "E_minus", "E_plus"], [k, e_minus, e_plus]))
    res.summary = {"E_gap": dim.E_gap, "Lambda_minus": dim.Lambda_minus, "Lambda_plus": dim.Lambda_plus}


def _run_sdensity(res, args):
    dim = _prepare_point(res, args, None)
    if dim is None:
        return
    wmax = args.omega_max if args.omega_max is not None else 2.0 * (dim.E_gap + dim.Lambda)
    omega = np.linspace(0.0, wmax, args.points)
    res.tables.append(("", ["omega", "J_minus_full", "J_minus_cubic", "J_plus_full", "J_plus_gapped"],
                       [omega, j_density_full(omega, dim), j_density_cubic(omega, dim),
                        j_spin_full(omega, dim), j_spin_gapped(omega, dim)]))
    res.summary = {"E_gap": dim.E_gap, "omega_max": wmax}


def _run_kernels(res, args):
    branch = BranchLabel.parse(args.branch)
    dim = _prepare_point(res, args, branch)
    if dim is None:
        return
    kernels = build_kernels(branch, dim, T=dim.T)
    t = default_grid(args.tmin, args.tmax, args.points)
    g2 = _g2_by_method(kernels, dim, InversionMethod(args.method))
    res.tables.append(("", ["t", "gamma", "nu", "g2_numeric", "g2_analytic"],
                       [t, kernels.gamma(t), kernels.nu(t), g2(t), kernels.g2_analytic(t)]))
    res.summary = {"branch": branch.value, "gamma0": dataclasses.asdict(kernels.gamma0),
                   "g2_slope": kernels.g2_slope, "method": args.method}


def _run_invert(res, args):
    F, f = known_pair(args.pair)
    t = np.linspace(args.tmax / args.points, args.tmax, args.points)
    num = invert(F, t, args.method).values
    exact = f(t)
    err = np.abs(num - exact)
    res.tables.append(("", ["t", "f_numeric", "f_analytic", "abs_err"], [t, num, exact, err]))
    res.summary = {"pair": args.pair, "method": args.method, "max_abs_err": float(err.max())}


def _run_stability(res, args):
    dim = _prepare_point(res, args, BranchLabel.SPIN)
    if dim is None:
        return
    if not dim.E_gap > 0:
        res.error, res.code = "stability scan needs a gapped spin branch (Omega > 0)", EXIT_VALIDATION
        return
    scan = pole_scan(dim, grid_size=args.points)
    res.tables.append(("", ["omega", "self_energy", "condition"],
                       [scan.omega_grid, scan.self_energy_values, scan.condition_values]))
    res.documents.append(("", scan.as_dict()))
    res.summary = {"verdict": scan.verdict.value}


RUNNERS = {
    "msd": _run_msd,
    "spectrum": _run_spectrum,
    "sdensity": _run_sdensity,
    "kernels": _run_kernels,
    "invert": _run_invert,
    "stability": _run_stability,
}

POINT_DEFAULTS = {
    # subcommand: (t_max, points)
    "msd": (1e3, 400),
    "kernels": (100.0, 200),
    "invert": (10.0, 100),
    "spectrum": (None, 200),
    "sdensity": (None, 200),
    "stability": (None, 2048),
}


def _evaluate(index, coords, config, args):
    res = PointResult(index, coords, config)
    try:
        RUNNERS[args.command](res, args)
    except ArithmeticError as exc:
        res.error, res.code = f"{type(exc).__name__}: {exc}", EXIT_CONVERGENCE
    except ValueError as exc:
        res.error, res.code = f"{type(exc).__name__}: {exc}", EXIT_VALIDATION
    return res


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat TOML file of SI parameters")
    common.add_argument("--branch", choices=[b.value for b in BranchLabel], default="spin")
    common.add_argument("--sweep", action="append", default=[], metavar="AXIS=lo:hi:count:log|lin",
                        help=f"sweep axis ({', '.join(SWEEP_FIELDS)}); repeat for a product")
    common.add_argument("--tmax", type=float, help="largest dimensionless time")
    common.add_argument("--tmin", type=float, default=1e-2, help="smallest dimensionless time")
    common.add_argument("--points", type=int, help="number of output points")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--method", choices=[m.value for m in InversionMethod], default="zakian")
    common.add_argument("--soft-fail", action="store_true",
                        help="record validation failures as warnings and continue")
    common.add_argument("--low-temp", action="store_true", help="force the zero-temperature limit")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="polaron", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("msd", parents=[common], help="MSD, exponent and regimes (sweeps allowed)")
    p = sub.add_parser("spectrum", parents=[common], help="dimensionless Bogoliubov branches")
    p.add_argument("--kmax", type=float, default=10.0, help="largest dimensionless wavenumber")
    p = sub.add_parser("sdensity", parents=[common], help="spectral densities")
    p.add_argument("--omega-max", type=float, default=None, help="largest dimensionless frequency")
    sub.add_parser("kernels", parents=[common], help="damping, noise and Green kernels")
    p = sub.add_parser("invert", parents=[common], help="Laplace inversion of a known pair")
    p.add_argument("--pair", required=True, choices=sorted(KNOWN_PAIRS))
    sub.add_parser("stability", parents=[common], help="sub-gap pole scan")
    return parser


def _check_args(parser, args):
    tmax_default, points_default = POINT_DEFAULTS[args.command]
    if args.tmax is None:
        args.tmax = tmax_default
    if args.points is None:
        args.points = points_default
    if args.points < 5 and args.command in ("msd",):
        parser.error("--points must be at least 5 for the MSD exponent")
    if args.points < 2:
        parser.error("--points must be at least 2")
    if args.tmax is not None and not (math.isfinite(args.tmax) and args.tmax > 0):
        parser.error("--tmax must be positive")
    if not (math.isfinite(args.tmin) and args.tmin > 0):
        parser.error("--tmin must be positive")
    if args.command in ("msd", "kernels") and args.tmin >= args.tmax:
        parser.error("--tmin must be below --tmax")
    try:
        args.sweeps = [parse_sweep(s) for s in args.sweep]
    except ValueError as exc:
        parser.error(str(exc))
    axes = [s.axis for s in args.sweeps]
    if len(set(axes)) != len(axes):
        parser.error("each sweep axis may appear once")


def _write_outputs(results, args):
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for res in results:
        stem = f"{args.command}_{res.index:03d}"
        files = []
        for suffix, header, columns in res.tables:
            path = out / f"{stem}{suffix}.csv"
            write_csv(path, header, columns)
            files.append(path.name)
        for suffix, payload in res.documents:
            path = out / f"{stem}{suffix}.json"
            write_json(path, payload)
            files.append(path.name)
        entries.append({
            "index": res.index,
            "sweep": res.coords,
            "config": res.config,
            "derived_scales": res.scales,
            "validation": res.validation,
            "files": files,
            "summary": res.summary,
            "warnings": res.warnings,
            "error": res.error,
            "exit_code": res.code,
        })
    manifest = {
        "tool": "polaron",
        "version": __version__,
        "backend": _accel.BACKEND,
        "command": args.command,
        "branch": args.branch,
        "method": args.method,
        "low_temp": args.low_temp,
        "soft_fail": args.soft_fail,
        "sweeps": [{"axis": s.axis, "values": list(s.values)} for s in args.sweeps],
        "points": entries,
    }
    write_json(out / "manifest.json", manifest)
    return manifest


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _check_args(parser, args)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        base = load_config(args.config) if args.config else PhysicalConfig()
        workers = thread_cap()
    except ConfigError as exc:
        print(f"polaron: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CliError as exc:
        print(f"polaron: {exc}", file=sys.stderr)
        return exc.code
    try:
        points = expand_sweeps(base, args.sweeps)
    except (TypeError, ValueError) as exc:
        print(f"polaron: {exc}", file=sys.stderr)
        return EXIT_PARSE

    jobs = [(i, coords, cfg, args) for i, (coords, cfg) in enumerate(points)]
    if workers == 1 or len(jobs) == 1:
        results = [_evaluate(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(lambda job: _evaluate(*job), jobs))

    _write_outputs(results, args)
    code = max((r.code for r in results), default=EXIT_OK)
    for r in results:
        for w in r.warnings:
            log.warning("point %d: %s", r.index, w)
        if r.error:
            print(f"polaron: point {r.index}: {r.error}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
