"""Parameter sweeps, comparison tables, CSV output and plot-script emission.

Configuration files are TOML. Every frequency-like parameter is entered in Hz
and multiplied by 2 pi on load; times are in seconds; ``r_nm`` is the ion
separation in nanometres. ``Gamma_spin`` (ground-spin decoherence rate) is in
1/s, or give ``T2s`` instead.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import product
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import cavity, dipolar
from . import constants as const
from .errors import ConfigError
from .reports import FidelityReport

CONFIG_DIR_ENV = "YBGATES_CONFIG_DIR"
SCHEMES = ("md", "ps-analytic", "ps-numeric", "pi", "vx")
FREQUENCY_KEYS = frozenset(
    {
        "omega", "g", "kappa", "gamma1", "gamma1r", "gamma2", "gamma3", "gamma4", "gamma5",
        "gamma_star", "delta_p", "delta_yb1", "delta_yb2", "delta_omega", "Delta", "delta_eg",
        "sigma_p", "splitting", "hyperfine",
    }
)
CONSTANT_KEYS = frozenset(const.DEFAULT_CONSTANTS_HZ)
POSITIVE_KEYS = frozenset({"r_nm", "g", "kappa", "C", "omega", "T1p", "Delta", "alpha", "Delta_over_g"})
FLOAT_FORMAT = "%.17e"
COMMENT = "#"
ERROR_COLUMN = "error"
OUT_OF_RANGE = "fidelity outside [0, 1]"


def package_version() -> str:
    try:
        from importlib.metadata import version

        return version("artifact")
    except Exception:  # pragma: no cover - only when running from a bare checkout
        return "0+unknown"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def resolve_config_path(path: str | os.PathLike) -> Path:
    """Absolute or cwd-relative paths win; otherwise look in $YBGATES_CONFIG_DIR."""
    p = Path(path)
    if p.is_file():
        return p
    base = os.environ.get(CONFIG_DIR_ENV)
    if base and not p.is_absolute() and (Path(base) / p).is_file():
        return Path(base) / p
    raise ConfigError(f"config file not found: {path}")


def load_toml(path: str | os.PathLike) -> dict[str, Any]:
    p = resolve_config_path(path)
    try:
        with open(p, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from exc


def to_internal(key: str, value: Any) -> Any:
    """Hz -> rad/s for frequency keys; everything else unchanged."""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return value
    return const.hz(value) if key in FREQUENCY_KEYS else float(value)


def load_constants(block: dict[str, Any] | None = None) -> dict[str, float]:
    """Default Yb:YVO4 constants overridden by a ``[constants]`` block, in internal units."""
    merged = dict(const.DEFAULT_CONSTANTS_HZ)
    for key, value in (block or {}).items():
        if key not in CONSTANT_KEYS:
            raise ConfigError(f"unknown constant {key!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value) or value < 0:
            raise ConfigError(f"constant {key!r} must be a finite non-negative number")
        merged[key] = value
    return {k: to_internal(k, v) for k, v in merged.items()}


# ---------------------------------------------------------------------------
# per-scheme evaluation
# ---------------------------------------------------------------------------


def _cavity_coupling(params: dict[str, Any], gamma: float, consts: dict[str, float]) -> tuple[float, float]:
    """(g, kappa) from any consistent combination of g, kappa, C and alpha = g/kappa.

    ``gamma`` is the rate in the cooperativity denominator, so the same helper
    serves both C = 4g^2/(kappa gamma1) and the dephasing-inclusive variant.
    """
    g, kappa, C, alpha = (params.get(k) for k in ("g", "kappa", "C", "alpha"))
    if C is not None and alpha is not None:
        kappa = C * gamma / (4.0 * alpha**2)
        return alpha * kappa, kappa
    if C is not None:
        kappa = kappa if kappa is not None else consts["kappa"]
        return math.sqrt(C * kappa * gamma / 4.0), kappa
    if alpha is not None:
        kappa = kappa if kappa is not None else consts["kappa"]
        return alpha * kappa, kappa
    return (g if g is not None else consts["g"]), (kappa if kappa is not None else consts["kappa"])


def _md_params(params: dict[str, Any], consts: dict[str, float]) -> dipolar.DipolarParams:
    gamma2 = params.get("gamma2", consts["gamma2"])
    rates = dipolar.DipolarRates(
        gamma1_up=params.get("gamma1", consts["gamma1"]),
        gamma1_down=params.get("gamma1", consts["gamma1"]),
        gamma2=gamma2,
        gamma3=params.get("gamma3", gamma2),
        gamma4=params.get("gamma4", consts["gamma4"]),
        gamma5=params.get("gamma5", consts["gamma5"]),
    )
    if "r_nm" in params:
        r = params["r_nm"] * 1e-9
    elif "r" in params:
        r = params["r"]
    else:
        raise ConfigError("md needs r_nm")
    return dipolar.DipolarParams(
        r=r,
        g_par=params.get("g_par", consts["g_par"]),
        g_perp=params.get("g_perp", consts["g_perp"]),
        omega=params.get("omega", 1.0e7),
        rates=rates,
        splitting=params.get("splitting", consts["hyperfine"]),
    )


def _evaluate_md(params, consts) -> FidelityReport:
    p = _md_params(params, consts)
    method = params.get("method", "closed")
    if method == "closed":
        rep = dipolar.md_closed_form_fidelity(p)
    elif method == "perturbative":
        rep = dipolar.md_perturbative_fidelity(p)
    elif method == "exact":
        rep = dipolar.md_exact_fidelity(p)
    elif method == "average":
        rep = dipolar.md_average_fidelity(p)
    else:
        raise ConfigError(f"unknown md method {method!r}")
    rep.metadata["validity"] = dipolar.md_validity_check(p).norm_times_activation
    return rep


def _scattering_params(params, consts) -> cavity.ScatteringParams:
    gamma1 = params.get("gamma1", consts["gamma1"])
    g, kappa = _cavity_coupling(params, gamma1, consts)
    if "Gamma_spin" in params:
        spin = params["Gamma_spin"]
    else:
        spin = 1.0 / params.get("T2s", consts["T2s_ground"])
    kwargs = {
        "g": g,
        "kappa": kappa,
        "gamma1": gamma1,
        "Gamma_spin": spin,
        "gamma2": params.get("gamma2", consts["gamma2"]),
        "gamma4": params.get("gamma4", consts["gamma4"]),
        "T1o": params.get("T1o", consts["T1o"]),
        "T2o": params.get("T2o", consts["T2o_cavity"]),
        "w": params.get("w", consts["w"]),
    }
    for key in ("T1p", "delta_p", "delta_yb1", "delta_yb2", "gamma_star", "decay_to_up"):
        if key in params:
            kwargs[key] = params[key]
    if "sigma_p" in params:
        kwargs["T1p"] = 1.0 / params["sigma_p"]
    return cavity.ScatteringParams(**kwargs)


def _evaluate_ps_analytic(params, consts) -> FidelityReport:
    p = _scattering_params(params, consts)
    use_ceff = bool(params.get("use_ceff", False))
    if params.get("optimize", True):
        return cavity.ps_optimize_bandwidth(p, use_ceff).report
    return cavity.ps_analytic_fidelity(p, use_ceff)


def _evaluate_ps_numeric(params, consts) -> FidelityReport:
    p = _scattering_params(params, consts)
    return cavity.ps_numeric_fidelity(p, optimize_bandwidth=bool(params.get("optimize", False)))


def _interference_params(params, consts) -> cavity.InterferenceParams:
    gamma1 = params.get("gamma1", consts["gamma1"])
    bulk = not params.get("cavity", True) or not any(k in params for k in ("g", "kappa", "C", "alpha"))
    t2 = params.get("T2o", consts["T2o_bulk"] if bulk else consts["T2o_cavity"])
    gamma_star = params.get("gamma_star", const.pure_dephasing_from_t2(t2, gamma1))
    kwargs = {
        "gamma1": gamma1,
        "gamma_star": gamma_star,
        "delta_omega": params.get("delta_omega", 0.0),
        "gamma1r": params.get("gamma1r"),
    }
    if not bulk:
        # cooperativity axis uses the dephasing-inclusive linewidth for this scheme
        width = gamma1 + 2.0 * gamma_star if params.get("dephased_cooperativity", True) else gamma1
        kwargs["g"], kwargs["kappa"] = _cavity_coupling(params, width, consts)
    return cavity.InterferenceParams(**kwargs)


def _evaluate_pi(params, consts) -> FidelityReport:
    return cavity.pi_fidelity(_interference_params(params, consts))


def _exchange_params(params, consts) -> cavity.VirtualExchangeParams:
    gamma1 = params.get("gamma1", consts["gamma1"])
    g, kappa = _cavity_coupling(params, gamma1, consts)
    base = cavity.VirtualExchangeParams(
        g=g,
        kappa=kappa,
        Delta=1.0,
        delta_eg=params.get("delta_eg", consts["hyperfine"]),
        gamma1=gamma1,
        gamma_star=params.get("gamma_star", const.pure_dephasing_from_t2(consts["T2o_cavity"], gamma1)),
        gamma5=params.get("gamma5", consts["gamma5"]),
    )
    if "Delta" in params:
        delta = params["Delta"]
    elif "Delta_over_g" in params:
        delta = params["Delta_over_g"] * g
    else:
        delta = cavity.vx_optimal_detuning(base)
    return base.with_(Delta=delta)


def _evaluate_vx(params, consts) -> FidelityReport:
    p = _exchange_params(params, consts)
    method = params.get("method", "closed")
    if method == "closed":
        return cavity.vx_perturbative_fidelity(p)
    if method == "numeric":
        return cavity.vx_perturbative_fidelity(p, numeric=True)
    if method == "exact":
        return cavity.vx_exact_fidelity(p)
    raise ConfigError(f"unknown vx method {method!r}")


EVALUATORS = {
    "md": _evaluate_md,
    "ps-analytic": _evaluate_ps_analytic,
    "ps-numeric": _evaluate_ps_numeric,
    "pi": _evaluate_pi,
    "vx": _evaluate_vx,
}


def evaluate(scheme: str, params: dict[str, Any], consts: dict[str, float] | None = None) -> FidelityReport:
    """One scheme evaluation with parameters already in internal units."""
    if scheme not in EVALUATORS:
        raise ConfigError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}")
    return EVALUATORS[scheme](params, consts if consts is not None else load_constants())


# ---------------------------------------------------------------------------
# sweep specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    points: int
    scale: str = "linear"

    def __post_init__(self) -> None:
        if self.points < 2:
            raise ConfigError(f"axis {self.name!r} needs at least 2 points")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"axis {self.name!r}: scale must be 'linear' or 'log'")
        if self.name in POSITIVE_KEYS and min(self.start, self.stop) <= 0:
            raise ConfigError(f"axis {self.name!r} must be positive")
        if self.scale == "log" and min(self.start, self.stop) <= 0:
            raise ConfigError(f"log axis {self.name!r} must be positive")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.logspace(math.log10(self.start), math.log10(self.stop), self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class SweepSpec:
    scheme: str
    axes: tuple[Axis, ...]
    fixed: dict[str, Any] = field(default_factory=dict)
    stem: str = "sweep"
    constants: dict[str, float] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        if not 1 <= len(self.axes) <= 2:
            raise ConfigError("a sweep has one or two axes")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ConfigError("axis names must be distinct")
        for key, value in self.fixed.items():
            if key in POSITIVE_KEYS and isinstance(value, (int, float)) and value <= 0:
                raise ConfigError(f"fixed parameter {key!r} must be positive")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SweepSpec:
        try:
            axes = tuple(
                Axis(str(a["name"]), float(a["start"]), float(a["stop"]), int(a["points"]), str(a.get("scale", "linear")))
                for a in data.get("axes", [])
            )
            outputs = data.get("outputs", {})
            return cls(
                scheme=str(data["scheme"]),
                axes=axes,
                fixed=dict(data.get("fixed", {})),
                stem=str(outputs.get("stem", data.get("stem", "sweep"))),
                constants=dict(data.get("constants", {})),
                seed=int(data.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed sweep spec: {exc}") from exc

    @classmethod
    def from_file(cls, path) -> SweepSpec:
        return cls.from_dict(load_toml(path))

    def digest(self) -> str:
        payload = {
            "scheme": self.scheme,
            "axes": [asdict(a) for a in self.axes],
            "fixed": self.fixed,
            "constants": self.constants,
            "seed": self.seed,
            "version": package_version(),
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()[:16]

    def grid(self) -> list[dict[str, float]]:
        names = [a.name for a in self.axes]
        return [dict(zip(names, (float(v) for v in combo))) for combo in product(*(a.values() for a in self.axes))]


def _point_params(spec: SweepSpec, point: dict[str, float]) -> dict[str, Any]:
    raw = {**spec.fixed, **point}
    return {k: to_internal(k, v) for k, v in raw.items()}


def _evaluate_point(task: tuple[int, str, dict[str, Any], dict[str, float], dict[str, float]]) -> tuple[int, dict[str, Any]]:
    index, scheme, params, consts, point = task
    row: dict[str, Any] = dict(point)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            report = evaluate(scheme, params, consts)
        row.update(report.row())
        notes = sorted({str(w.message) for w in caught})
        if notes:
            row["warnings"] = "; ".join(notes)
        if not report.in_unit_interval:
            row[ERROR_COLUMN] = OUT_OF_RANGE
    except Exception as exc:  # per-point failures are recorded, the sweep continues
        row[ERROR_COLUMN] = f"{type(exc).__name__}: {exc}"
    return index, row


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

LEADING_COLUMNS = (
    "fidelity", "gate_time", "method", "eps_L1", "eps_H1", "eps_HH2", "eps_LH2", "eps_total",
    "entanglement_fidelity", "average_fidelity",
)


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % float(value)
    return str(value)


def _columns(rows: list[dict[str, Any]], first: list[str]) -> list[str]:
    seen = set(first)
    cols = list(first)
    for name in LEADING_COLUMNS:
        if name not in seen and any(name in r for r in rows):
            cols.append(name)
            seen.add(name)
    extra = sorted({k for r in rows for k in r} - seen - {ERROR_COLUMN})
    return cols + extra + [ERROR_COLUMN]


def write_csv(path: Path, rows: list[dict[str, Any]], metadata: dict[str, Any], first: list[str]) -> Path:
    """Header comment block, header row, one line per row, full precision floats."""
    buf = io.StringIO()
    for key, value in metadata.items():
        text = value if isinstance(value, str) else json.dumps(value, sort_keys=True)
        buf.write(f"{COMMENT} {key}: {text}\n")
    writer = csv.writer(buf, lineterminator="\n")
    cols = _columns(rows, first)
    writer.writerow(cols)
    for r in rows:
        writer.writerow([format_value(r.get(c)) for c in cols])
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(buf.getvalue())
    tmp.replace(path)
    return path


def read_csv(path: Path) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Metadata dictionary and rows (as strings) of a file written by :func:`write_csv`."""
    meta: dict[str, str] = {}
    body = []
    with open(path) as fh:
        for line in fh:
            if line.startswith(COMMENT):
                key, _, value = line[1:].strip().partition(": ")
                meta[key] = value
            else:
                body.append(line)
    rows = list(csv.DictReader(body))
    return meta, rows


# ---------------------------------------------------------------------------
# sweep driver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    """``failures`` counts points that raised; ``out_of_range`` counts first-order
    estimates that left [0, 1], which are annotated but are not errors of the run."""

    path: Path
    rows: int
    failures: int
    out_of_range: int
    skipped: bool


def _count_errors(rows) -> tuple[int, int]:
    flagged = [r.get(ERROR_COLUMN) for r in rows if r.get(ERROR_COLUMN)]
    out_of_range = sum(1 for e in flagged if e == OUT_OF_RANGE)
    return len(flagged) - out_of_range, out_of_range


def _partial_path(out: Path) -> Path:
    return out.with_name(out.name + ".partial")


def _load_partial(path: Path, digest: str) -> dict[int, dict[str, Any]]:
    if not path.is_file():
        return {}
    done: dict[int, dict[str, Any]] = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != digest:
            return {}
        for line in fh:
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                break  # a torn last line from an interrupted run
            done[int(record["index"])] = record["row"]
    return done


def run_sweep(spec: SweepSpec, out_dir: str | os.PathLike = ".", workers: int = 1, force: bool = False) -> SweepResult:
    """Evaluate every grid point and write ``<stem>.csv``.

    Finished points are journalled to ``<stem>.csv.partial`` so an
    interrupted sweep resumes where it stopped. A completed CSV whose
    recorded digest matches the spec is left untouched unless ``force``.
    """
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    consts = load_constants(spec.constants)
    digest = spec.digest()
    out = Path(out_dir) / f"{spec.stem}.csv"
    if out.is_file() and not force:
        meta, rows = read_csv(out)
        if meta.get("spec_digest") == digest:
            return SweepResult(out, len(rows), *_count_errors(rows), skipped=True)
    partial = _partial_path(out)
    done = {} if force else _load_partial(partial, digest)
    grid = spec.grid()
    tasks = [(i, spec.scheme, _point_params(spec, pt), consts, pt) for i, pt in enumerate(grid) if i not in done]
    out.parent.mkdir(parents=True, exist_ok=True)
    mode = "a" if done else "w"
    with open(partial, mode) as journal:
        if not done:
            journal.write(digest + "\n")
        if workers == 1 or len(tasks) <= 1:
            results = map(_evaluate_point, tasks)
            pool = None
        else:
            pool = ProcessPoolExecutor(max_workers=min(workers, len(tasks)))
            results = pool.map(_evaluate_point, tasks)
        try:
            for index, row in results:
                done[index] = row
                journal.write(json.dumps({"index": index, "row": row}, default=float) + "\n")
                journal.flush()
        finally:
            if pool is not None:
                pool.shutdown()
    rows = [done[i] for i in range(len(grid))]
    metadata = {
        "code_version": package_version(),
        "scheme": spec.scheme,
        "spec_digest": digest,
        "seed": spec.seed,
        "axes": [asdict(a) for a in spec.axes],
        "fixed_parameters": spec.fixed,
        "constants_rad_per_s": consts,
    }
    write_csv(out, rows, metadata, [a.name for a in spec.axes])
    partial.unlink(missing_ok=True)
    return SweepResult(out, len(rows), *_count_errors(rows), skipped=False)


# ---------------------------------------------------------------------------
# comparison table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonConfig:
    r_nm: tuple[float, ...] = (5.0, 10.0)
    cooperativities: tuple[float, ...] = (100.0, 1000.0)
    alpha: float = 0.001
    slice_start: float = 10.0
    slice_stop: float = 1.0e4
    slice_points: int = 31
    omega: float = 1.0e7  # rad/s
    constants: dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ComparisonConfig:
        block = data.get("comparison", {})
        try:
            return cls(
                r_nm=tuple(float(x) for x in block.get("r_nm", cls.r_nm)),
                cooperativities=tuple(float(x) for x in block.get("cooperativities", cls.cooperativities)),
                alpha=float(block.get("alpha", cls.alpha)),
                slice_start=float(block.get("slice_start", cls.slice_start)),
                slice_stop=float(block.get("slice_stop", cls.slice_stop)),
                slice_points=int(block.get("slice_points", cls.slice_points)),
                omega=const.hz(float(block["omega"])) if "omega" in block else cls.omega,
                constants=dict(data.get("constants", {})),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed comparison config: {exc}") from exc


def _cavity_row(scheme: str, C: float, rep: FidelityReport) -> dict[str, Any]:
    return {"scheme": scheme, "parameter": "C", "value": C, "fidelity": rep.fidelity, "gate_time": rep.gate_time, "error_rate": rep.infidelity}


def _slice_point(C: float, cfg: ComparisonConfig, consts: dict[str, float]) -> tuple[FidelityReport, FidelityReport]:
    ps = _evaluate_ps_analytic({"C": C, "alpha": cfg.alpha, "optimize": True}, consts)
    pi = _evaluate_pi({"C": C, "alpha": cfg.alpha}, consts)
    return ps, pi


def run_comparison(cfg: ComparisonConfig) -> dict[str, list[dict[str, Any]]]:
    """Summary rows for every scheme plus the cooperativity slice.

    Cavity rows use g/kappa = ``alpha``. The scattering gate takes C as the
    bare cooperativity; the interference gate takes it with the
    dephasing-broadened linewidth gamma1 + 2 gamma*, which is the horizontal
    axis that puts both schemes on one plot.
    """
    consts = load_constants(cfg.constants)
    table: list[dict[str, Any]] = []
    for r in cfg.r_nm:
        rep = _evaluate_md({"r_nm": r, "omega": cfg.omega, "method": "closed"}, consts)
        table.append({"scheme": "md", "parameter": "r_nm", "value": r, "fidelity": rep.fidelity, "gate_time": rep.gate_time, "error_rate": rep.infidelity})
    for C in cfg.cooperativities:
        ps, pi = _slice_point(C, cfg, consts)
        table.append(_cavity_row("ps", C, ps))
        table.append(_cavity_row("pi", C, pi))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            vx = _evaluate_vx({"C": C, "alpha": cfg.alpha}, consts)
        row = _cavity_row("vx", C, vx)
        notes = sorted({str(w.message) for w in caught})
        if not vx.in_unit_interval:
            notes.append("first-order estimate outside [0, 1]")
        row["note"] = "; ".join(notes)
        table.append(row)
    slice_rows = []
    for C in np.logspace(math.log10(cfg.slice_start), math.log10(cfg.slice_stop), cfg.slice_points):
        ps, pi = _slice_point(float(C), cfg, consts)
        slice_rows.append(
            {
                "C": float(C),
                "ps_fidelity": ps.fidelity,
                "ps_gate_time": ps.gate_time,
                "pi_fidelity": pi.fidelity,
                "pi_gate_time": pi.gate_time,
            }
        )
    return {"table": table, "slice": slice_rows}


def write_comparison(result: dict[str, list[dict[str, Any]]], out_dir, cfg: ComparisonConfig) -> list[Path]:
    meta = {"code_version": package_version(), "config": asdict(cfg)}
    out = Path(out_dir)
    return [
        write_csv(out / "comparison.csv", result["table"], meta, ["scheme", "parameter", "value"]),
        write_csv(out / "cooperativity_slice.csv", result["slice"], meta, ["C"]),
    ]


def format_table(rows: list[dict[str, Any]]) -> str:
    lines = [f"{'scheme':<7}{'parameter':>12}{'fidelity':>12}{'error %':>10}{'gate time (s)':>16}"]
    for r in rows:
        lines.append(
            f"{r['scheme']:<7}{r['parameter'] + '=' + format(r['value'], 'g'):>12}"
            f"{r['fidelity']:>12.5f}{100 * r['error_rate']:>10.3f}{r['gate_time']:>16.4e}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# plot scripts
# ---------------------------------------------------------------------------

_PLOT_HEADER = '''#!/usr/bin/env python3
"""Plot {csv_name}. Generated file; reads the CSV and draws, nothing else."""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

CSV = Path(__file__).with_name("{csv_name}")


def load():
    with open(CSV) as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    return rows


def column(rows, name):
    return [float(r[name]) for r in rows if r.get(name) not in (None, "") and not r.get("error")]


rows = load()
'''

_LINE_BODY = '''X = {x!r}
SERIES = {series!r}
fig, axes = plt.subplots(len(SERIES), 1, sharex=True, figsize=(5, 2.6 * len(SERIES)), squeeze=False)
for ax, names in zip(axes[:, 0], SERIES):
    for name in names:
        ax.plot(column(rows, X), column(rows, name), marker="o", ms=3, label=name)
    ax.set_ylabel(", ".join(names))
    ax.legend(fontsize="small")
    if {logx!r}:
        ax.set_xscale("log")
axes[-1, 0].set_xlabel(X)
fig.tight_layout()
fig.savefig(CSV.with_suffix(".png"), dpi=150)
'''

_HEATMAP_BODY = '''X, Y, Z, CONTOUR = {x!r}, {y!r}, {z!r}, {contour!r}
xs = sorted(set(column(rows, X)))
ys = sorted(set(column(rows, Y)))
grid = [[float("nan")] * len(xs) for _ in ys]
cgrid = [[float("nan")] * len(xs) for _ in ys]
for r in rows:
    if r.get("error") or r.get(Z) in (None, ""):
        continue
    i, j = ys.index(float(r[Y])), xs.index(float(r[X]))
    grid[i][j] = float(r[Z])
    if CONTOUR and r.get(CONTOUR) not in (None, ""):
        cgrid[i][j] = float(r[CONTOUR])
fig, ax = plt.subplots(figsize=(5, 4))
if xs and ys:
    mesh = ax.pcolormesh(xs, ys, grid, shading="auto")
    fig.colorbar(mesh, ax=ax, label=Z)
    if CONTOUR:
        levels = [10.0**k for k in range(-3, 9)]
        cs = ax.contour(xs, ys, cgrid, levels=levels, colors="white", linestyles="dashed")
        ax.clabel(cs, fmt="%g", fontsize="small")
    if {logx!r}:
        ax.set_xscale("log")
    if {logy!r}:
        ax.set_yscale("log")
ax.set_xlabel(X)
ax.set_ylabel(Y)
fig.tight_layout()
fig.savefig(CSV.with_suffix(".png"), dpi=150)
'''


def _is_log_axis(meta: dict[str, str], name: str) -> bool:
    try:
        axes = json.loads(meta.get("axes", "[]"))
    except json.JSONDecodeError:
        return False
    return any(a.get("name") == name and a.get("scale") == "log" for a in axes)


def emit_plotscript(csv_path: str | os.PathLike, kind: str) -> str:
    """Standalone matplotlib script for a CSV produced by this module.

    ``line`` puts the first column on x and draws fidelity and gate time in
    two panels (the paired ps/pi columns of a slice file share a panel).
    ``heatmap`` uses the first two columns as axes, colours by fidelity and
    overlays dashed contours of a Purcell (else cooperativity) column at powers
    of ten when one is present.
    """
    if kind not in ("line", "heatmap"):
        raise ConfigError(f"unknown plot kind {kind!r}; use 'line' or 'heatmap'")
    path = Path(csv_path)
    if not path.is_file():
        raise ConfigError(f"no dataset at {path}")
    meta, rows = read_csv(path)
    with open(path) as fh:
        header = next(csv.reader(line for line in fh if not line.startswith(COMMENT)), [])
    head = _PLOT_HEADER.format(csv_name=path.name)
    if kind == "line":
        x = header[0] if header else "x"
        fid = [c for c in header if c.endswith("fidelity") and c not in ("entanglement_fidelity", "average_fidelity")]
        times = [c for c in header if c.endswith("gate_time")]
        series = [s for s in (fid or ["fidelity"], times or ["gate_time"])]
        logx = _is_log_axis(meta, x) or x == "C"
        return head + _LINE_BODY.format(x=x, series=series, logx=logx)
    if len(header) < 2:
        x, y = "x", "y"
    else:
        x, y = header[0], header[1]
    contour = next((c for c in ("purcell_factor", "C") if c in header), None)
    return head + _HEATMAP_BODY.format(
        x=x, y=y, z="fidelity", contour=contour, logx=_is_log_axis(meta, x), logy=_is_log_axis(meta, y)
    )
