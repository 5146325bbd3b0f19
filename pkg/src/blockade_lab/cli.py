"""Command-line sweeps: ``blockade-lab {spectrum,g2,g2-map,oracle-compare}``.

Frequencies given as bare numbers are in units of the mechanical frequency;
a unit suffix (``rad/s``, ``Hz``, ``kHz``, ``MHz``, ``GHz``) gives SI values.
``--omega-m`` itself is rad/s when bare. Temperatures are kelvin (``K``,
``mK`` and ``uK`` suffixes accepted). Output frequencies are always in units
of ``omega_m``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import json
import math
import os
import re
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, correlations, oracle, spectrum
from .errors import BlockadeError, ConvergenceError, SearchError, TruncationError
from .params import QuadratureSpec, SystemParams, temperature_for_nbar

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_TRUNCATION = 0, 2, 3, 4
MODES = ("spectrum", "g2", "g2-map", "oracle-compare")
SWEEP_VARS = ("delta0", "g0", "kappa", "T", "Q")
METHODS = ("series", "integral", "approx", "all")
FREQ_VARS = ("g0", "kappa", "drive", "delta0")

_FREQ_UNITS = {"rad/s": 1.0, "hz": 2 * math.pi, "khz": 2e3 * math.pi,
               "mhz": 2e6 * math.pi, "ghz": 2e9 * math.pi}
_TEMP_UNITS = {"k": 1.0, "mk": 1e-3, "uk": 1e-6}
_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf)\s*(.*?)\s*$")


class UsageError(BlockadeError):
    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


def _split(value, field_name):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value), ""
    m = _NUMBER.match(str(value))
    if not m:
        raise UsageError(field_name, f"cannot parse {value!r}")
    return float(m.group(1)), m.group(2).lower()


def parse_frequency(value, omega_m: float, field_name: str) -> float:
    """Frequency in rad/s; bare numbers are multiples of ``omega_m``."""
    number, unit = _split(value, field_name)
    if not unit:
        return number * omega_m
    if unit not in _FREQ_UNITS:
        raise UsageError(field_name, f"unknown frequency unit {unit!r}")
    return number * _FREQ_UNITS[unit]


def parse_omega_m(value) -> float:
    number, unit = _split(value, "omega_m")
    if not unit:
        return number
    if unit not in _FREQ_UNITS:
        raise UsageError("omega_m", f"unknown frequency unit {unit!r}")
    return number * _FREQ_UNITS[unit]


def parse_temperature(value, field_name="T") -> float:
    number, unit = _split(value, field_name)
    if not unit:
        return number
    if unit not in _TEMP_UNITS:
        raise UsageError(field_name, f"unknown temperature unit {unit!r}")
    return number * _TEMP_UNITS[unit]


def parse_q(value) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity"):
        return math.inf
    number, unit = _split(value, "Q")
    if unit:
        raise UsageError("Q", "Q is dimensionless")
    return number


@dataclass
class SweepAxis:
    var: str
    start: float
    stop: float
    points: int
    scale: str = "linear"

    def __post_init__(self):
        try:
            self.start, self.stop, self.points = float(self.start), float(self.stop), int(self.points)
        except (TypeError, ValueError) as exc:
            raise UsageError("sweep", str(exc)) from None
        if self.var not in SWEEP_VARS:
            raise UsageError("sweep", f"variable {self.var!r} not in {SWEEP_VARS}")
        if self.points < 2:
            raise UsageError("sweep", "need at least 2 points")
        if self.scale not in ("linear", "log"):
            raise UsageError("sweep", f"scale {self.scale!r} must be linear or log")
        if self.scale == "log" and (self.start <= 0 or self.stop <= 0):
            raise UsageError("sweep", "log sweeps need positive bounds")

    @classmethod
    def parse(cls, text: str) -> "SweepAxis":
        parts = text.split(":")
        if len(parts) not in (4, 5):
            raise UsageError("sweep", f"expected var:start:stop:points[:log], got {text!r}")
        try:
            start, stop, points = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError as exc:
            raise UsageError("sweep", str(exc)) from None
        return cls(parts[0], start, stop, points, parts[4] if len(parts) == 5 else "linear")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass
class RunConfig:
    """Effective run configuration.

    ``params`` holds dimensionless values: frequencies in units of
    ``omega_m`` (which is stored in rad/s), ``T`` in kelvin. Sweep bounds for
    frequency variables are also in units of ``omega_m``.
    """

    mode: str
    params: dict = field(default_factory=lambda: {
        "g0": 0.5, "omega_m": 1.0, "kappa": 0.1, "Q": math.inf, "T": 0.0,
        "drive": 0.0, "delta0": 0.0})
    sweeps: list = field(default_factory=list)
    method: str = "all"
    out: str | None = None
    timestamp: bool = True
    workers: int = 1
    zpl_relative: bool = False
    n_cut: int | None = None
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    nodes_per_period: int = 48
    full_range: bool = False
    drives: list = field(default_factory=lambda: [0.001, 0.002])
    oracle_Q: float = 1e5
    n_photon_max: int = 4
    n_phonon_max: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise UsageError("mode", f"{self.mode!r} not in {MODES}")
        if self.method not in METHODS:
            raise UsageError("method", f"{self.method!r} not in {METHODS}")
        if self.workers < 1:
            raise UsageError("workers", "must be >= 1")
        self.sweeps = [s if isinstance(s, SweepAxis) else SweepAxis(**s) for s in self.sweeps]
        if self.mode == "g2-map":
            names = sorted(s.var for s in self.sweeps)
            if names != ["g0", "kappa"]:
                raise UsageError("sweep", "g2-map needs exactly the axes g0 and kappa")
        elif len(self.sweeps) > 1:
            raise UsageError("sweep", f"{self.mode} takes at most one sweep axis")
        try:
            self.base_params()
        except ValueError as exc:
            raise UsageError("params", str(exc)) from None

    def base_params(self) -> SystemParams:
        p = self.params
        wm = p["omega_m"]
        return SystemParams(g0=p["g0"] * wm, omega_m=wm, kappa=p["kappa"] * wm, Q=p["Q"],
                            T=p["T"], drive=p["drive"] * wm, detuning0=p["delta0"] * wm)

    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(rel_tol=self.rel_tol, abs_tol=self.abs_tol,
                              nodes_per_period=self.nodes_per_period)

    def to_json(self) -> str:
        d = dataclasses.asdict(self)
        d["params"] = {k: _json_float(v) for k, v in d["params"].items()}
        d["oracle_Q"] = _json_float(d["oracle_Q"])
        # execution-only fields never change the rows
        d.pop("out")
        d.pop("workers")
        return json.dumps(d, sort_keys=True, separators=(",", ":"))


def _json_float(v):
    return "inf" if isinstance(v, float) and math.isinf(v) else v


def _resolve_params(raw: dict, base: dict) -> dict:
    out = dict(base)
    if "omega_m" in raw and raw["omega_m"] is not None:
        out["omega_m"] = parse_omega_m(raw["omega_m"])
    wm = out["omega_m"]
    for name in FREQ_VARS:
        if raw.get(name) is not None:
            out[name] = parse_frequency(raw[name], wm, name) / wm
    if raw.get("Q") is not None:
        out["Q"] = parse_q(raw["Q"])
    if raw.get("T") is not None:
        out["T"] = parse_temperature(raw["T"])
    if raw.get("nbar") is not None:
        out["T"] = temperature_for_nbar(float(raw["nbar"]), wm)
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    file_cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError("config", str(exc)) from None
    base = RunConfig.__dataclass_fields__["params"].default_factory()
    params = _resolve_params(file_cfg.get("params", {}), base)
    cli_params = {"g0": args.g0, "omega_m": args.omega_m, "kappa": args.kappa, "Q": args.Q,
                  "T": args.T, "drive": args.drive, "delta0": args.delta0, "nbar": args.nbar}
    params = _resolve_params(cli_params, params)
    kwargs = {k: v for k, v in file_cfg.items() if k not in ("params", "mode")}
    if "oracle_Q" in kwargs:
        kwargs["oracle_Q"] = parse_q(kwargs["oracle_Q"])
    if args.sweep:
        kwargs["sweeps"] = [SweepAxis.parse(s) for s in args.sweep]
    overrides = {
        "method": args.method, "out": args.out, "workers": args.workers, "n_cut": args.n_cut,
        "n_photon_max": args.n_photon_max, "n_phonon_max": args.n_phonon_max,
        "oracle_Q": parse_q(args.oracle_Q) if args.oracle_Q is not None else None,
        "drives": [float(x) for x in args.drives.split(",")] if args.drives else None,
        "rel_tol": args.rel_tol, "abs_tol": args.abs_tol,
    }
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    for flag in ("zpl_relative", "full_range"):
        if getattr(args, flag):
            kwargs[flag] = True
    if args.no_timestamp:
        kwargs["timestamp"] = False
    if "workers" not in kwargs:
        env = os.environ.get("BLOCKADE_LAB_WORKERS")
        if env:
            try:
                kwargs["workers"] = int(env)
            except ValueError:
                raise UsageError("BLOCKADE_LAB_WORKERS", f"not an integer: {env!r}") from None
    unknown = set(kwargs) - set(RunConfig.__dataclass_fields__)
    if unknown:
        raise UsageError(sorted(unknown)[0], "unknown config field")
    return RunConfig(mode=args.mode or file_cfg.get("mode"), params=params, **kwargs)


# --- per-row workers (module level so they pickle) -------------------------

def _point_params(cfg: RunConfig, assignment: dict) -> SystemParams:
    p = dict(cfg.params)
    p.update(assignment)
    if cfg.zpl_relative and "delta0" in assignment:
        p["delta0"] = assignment["delta0"] - p["g0"] ** 2
    wm = p["omega_m"]
    return SystemParams(g0=p["g0"] * wm, omega_m=wm, kappa=p["kappa"] * wm, Q=p["Q"], T=p["T"],
                        drive=p["drive"] * wm, detuning0=p["delta0"] * wm)


def _error_kind(exc: Exception) -> str:
    if isinstance(exc, TruncationError):
        return "truncation"
    if isinstance(exc, (ConvergenceError, SearchError)):
        return "convergence"
    return "error"


def _row_spectrum(job):
    cfg, assignment = job
    out = {"S_series": math.nan, "S_integral": math.nan}
    if cfg.method in ("approx", "all"):
        out["S_bad_cavity"] = math.nan
    errors = []
    p = _point_params(cfg, assignment)
    try:
        d0 = p.detuning0
        out["S_series"] = spectrum.s_series(d0, p, cfg.n_cut)
        out["S_integral"] = spectrum.s_integral(d0, p, cfg.quadrature())
        if "S_bad_cavity" in out and p.g0 > 0:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                out["S_bad_cavity"] = spectrum.s_bad_cavity(d0, p)
    except Exception as exc:  # recorded per row
        errors.append((_error_kind(exc), f"{type(exc).__name__}: {exc}"))
    return p.detuning0_m, out, errors


def _row_g2(job):
    cfg, assignment = job
    out = {"g2_series": math.nan, "g2_approx": math.nan}
    if cfg.method in ("integral", "all"):
        out["g2_integral"] = math.nan
    errors = []
    p = _point_params(cfg, assignment)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            out["g2_series"] = correlations.g2_series(p.detuning0, p, n_cut=cfg.n_cut).g2
            out["g2_approx"] = correlations.g2_approx(p.detuning0, p)
            if "g2_integral" in out:
                out["g2_integral"] = correlations.g2_integral(p.detuning0, p, cfg.quadrature()).g2
    except Exception as exc:
        errors.append((_error_kind(exc), f"{type(exc).__name__}: {exc}"))
    return p.detuning0_m, out, errors


def _row_g2_map(job):
    cfg, assignment = job
    p = _point_params(cfg, assignment)
    out = {"min_g2": math.nan, "delta0_opt": math.nan}
    errors = []
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            d, g = correlations.g2_min(p, "scan", full_range=cfg.full_range)
        out = {"min_g2": g, "delta0_opt": d / p.omega_m}
    except Exception as exc:
        errors.append((_error_kind(exc), f"{type(exc).__name__}: {exc}"))
    return None, out, errors


def _row_oracle(job):
    cfg, assignment = job
    p = _point_params(cfg, assignment)
    out = {k: math.nan for k in ("S_analytic", "S_oracle", "g2_analytic", "g2_oracle",
                                 "dev_S", "dev_g2", "leakage")}
    errors = []
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            out["S_analytic"] = spectrum.s_series(p.detuning0, p.replace(Q=math.inf), cfg.n_cut)
            out["g2_analytic"] = correlations.g2_series(p.detuning0, p.replace(Q=math.inf)).g2
    except Exception as exc:
        errors.append((_error_kind(exc), f"analytic {type(exc).__name__}: {exc}"))
    try:
        q = cfg.oracle_Q if math.isinf(p.Q) else p.Q
        po = p.replace(Q=q)
        trunc = oracle.default_truncation(po)
        trunc = oracle.TruncationSpec(cfg.n_photon_max, cfg.n_phonon_max or trunc.n_phonon_max,
                                      trunc.leakage_tol)
        res = oracle.weak_drive_extrapolation(po, trunc, cfg.drives)
        out["S_oracle"], out["g2_oracle"], out["leakage"] = res.spectrum_value, res.g2, res.leakage
        out["dev_S"] = abs(out["S_oracle"] - out["S_analytic"]) / out["S_analytic"]
        out["dev_g2"] = abs(out["g2_oracle"] - out["g2_analytic"]) / out["g2_analytic"]
    except Exception as exc:
        errors.append((_error_kind(exc), f"oracle {type(exc).__name__}: {exc}"))
    return p.detuning0_m, out, errors


_ROW_FUNCS = {"spectrum": _row_spectrum, "g2": _row_g2, "g2-map": _row_g2_map,
              "oracle-compare": _row_oracle}


def _assignments(cfg: RunConfig):
    if not cfg.sweeps:
        return [{}]
    if cfg.mode == "g2-map":
        by = {s.var: s.values() for s in cfg.sweeps}
        return [{"g0": g, "kappa": k} for g in by["g0"] for k in by["kappa"]]
    axis = cfg.sweeps[0]
    return [{axis.var: v} for v in axis.values()]


def run(cfg: RunConfig):
    """Evaluate every sweep point; returns ``(columns, rows, error_kinds)``."""
    jobs = [(cfg, a) for a in _assignments(cfg)]
    func = _ROW_FUNCS[cfg.mode]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(func, jobs))
    else:
        results = [func(j) for j in jobs]
    rows, kinds = [], []
    sweep_cols = _sweep_columns(cfg)
    value_cols = list(results[0][1]) if results else []
    for (_, assignment), (_, values, errors) in zip(jobs, results):
        p = _point_params(cfg, assignment)
        lead = _lead_values(cfg, p, assignment)
        rows.append(lead + [values.get(c, math.nan) for c in value_cols]
                    + ["; ".join(msg for _, msg in errors)])
        kinds.extend(kind for kind, _ in errors)
    return sweep_cols + value_cols + ["error"], rows, kinds


def _sweep_columns(cfg):
    if cfg.mode == "g2-map":
        return ["g0/omega_m", "kappa/omega_m"]
    cols = ["delta0/omega_m"]
    if cfg.sweeps and cfg.sweeps[0].var != "delta0":
        var = cfg.sweeps[0].var
        cols.insert(0, var if var in ("T", "Q") else f"{var}/omega_m")
    return cols


def _lead_values(cfg, p: SystemParams, assignment):
    if cfg.mode == "g2-map":
        return [p.eta, p.kappa_m]
    vals = [p.detuning0_m]
    if cfg.sweeps and cfg.sweeps[0].var != "delta0":
        var = cfg.sweeps[0].var
        vals.insert(0, assignment[var])
    return vals


def _fmt(v):
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.16e}"


def write_csv(cfg: RunConfig, columns, rows, stream):
    stream.write(f"# blockade-lab {__version__}\n")
    if cfg.timestamp:
        stream.write(f"# generated: {_dt.datetime.now(_dt.timezone.utc).isoformat()}\n")
    stream.write(f"# mode: {cfg.mode}\n")
    stream.write(f"# config: {cfg.to_json()}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


def summarize(cfg: RunConfig, columns, rows, kinds) -> str:
    ok = [r for r in rows if not r[-1]]
    lines = [f"{cfg.mode}: {len(rows)} rows, {len(rows) - len(ok)} with errors"]

    def col(name):
        i = columns.index(name)
        return np.array([float(r[i]) for r in ok]) if ok else np.array([])

    if cfg.mode == "spectrum" and ok:
        s = col("S_series")
        i = int(np.nanargmax(s))
        lines.append(f"max S_series = {s[i]:.6g} at delta0/omega_m = {ok[i][0]:.6g}")
    elif cfg.mode == "g2" and ok:
        g = col("g2_series")
        i = int(np.nanargmin(g))
        lines.append(f"min g2_series = {g[i]:.6g} at delta0/omega_m = {ok[i][columns.index('delta0/omega_m')]:.6g}")
    elif cfg.mode == "g2-map" and ok:
        lines.append(f"smallest min_g2 = {np.nanmin(col('min_g2')):.6g}")
    elif cfg.mode == "oracle-compare":
        trunc = kinds.count("truncation")
        if ok:
            lines.append(f"max dev_S = {np.nanmax(col('dev_S')):.3e}, "
                         f"max dev_g2 = {np.nanmax(col('dev_g2')):.3e}")
        lines.append(f"oracle truncation failures: {trunc}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blockade-lab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sp_ = sub.add_parser(mode)
        sp_.add_argument("--config")
        for name in ("g0", "omega-m", "kappa", "Q", "T", "drive", "delta0"):
            sp_.add_argument(f"--{name}", dest=name.replace("-", "_"))
        sp_.add_argument("--nbar", type=float, help="set T from the mechanical occupation")
        sp_.add_argument("--sweep", action="append", help="var:start:stop:points[:log]")
        sp_.add_argument("--method", choices=METHODS)
        sp_.add_argument("--out")
        sp_.add_argument("--no-timestamp", action="store_true")
        sp_.add_argument("--workers", type=int)
        sp_.add_argument("--zpl-relative", action="store_true",
                         help="delta0 sweep values are offsets from -Delta_g")
        sp_.add_argument("--full-range", action="store_true")
        sp_.add_argument("--n-cut", type=int)
        sp_.add_argument("--rel-tol", type=float)
        sp_.add_argument("--abs-tol", type=float)
        sp_.add_argument("--drives", help="comma-separated drive amplitudes in units of kappa")
        sp_.add_argument("--oracle-Q", dest="oracle_Q")
        sp_.add_argument("--n-photon-max", type=int)
        sp_.add_argument("--n-phonon-max", type=int)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
    except (UsageError, TypeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    columns, rows, kinds = run(cfg)
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            write_csv(cfg, columns, rows, fh)
    else:
        write_csv(cfg, columns, rows, sys.stdout)
    print(summarize(cfg, columns, rows, kinds), file=sys.stdout if cfg.out else sys.stderr)
    if "convergence" in kinds:
        return EXIT_NUMERIC
    if "truncation" in kinds:
        return EXIT_TRUNCATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
