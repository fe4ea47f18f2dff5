"""Declarative experiments: config loading, replicated runs and artifact files.

A config is a TOML document::

    problem = "schwefel1d"
    model = "ok"
    strategy = ["cvd", "mepe"]     # one name or a list to compare
    replications = 10
    seed = 0

    [stopping]
    max_samples = 50
    metric = "mae"
    threshold = 0.01

    [strategy_params.ssa]
    epsilon_dist = 0.01

Unknown keys are rejected. ``runs.csv`` is the primary output; the summary is
always recomputed from its rows.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .adaptive import (
    ACQ_OPTIMIZER,
    STRATEGY_NAMES,
    ModelSpec,
    RunRecord,
    StoppingRule,
    make_reference,
    run_adaptive_loop,
)
from .benchfns import fidelity_gap, get_problem
from .errors import ConfigError
from .gpcore import OptimizerConfig
from .kernels import KernelSpec

METRIC_COLUMNS = ("mae", "rmse", "rmae", "r2", "pct_pos", "pct_neg")
TOP_KEYS = {"problem", "model", "strategy", "initial_size", "lf_size", "replications", "seed",
            "reference_seed", "reference_size", "kernel", "pool_size", "checkpoints", "workers",
            "h", "h_lf", "degree", "stopping", "strategy_params", "optimizer", "acq_optimizer",
            "output", "name"}
STOP_KEYS = {"max_samples", "metric", "threshold"}
OPT_KEYS = {"particles_per_dim", "iters_per_dim", "inertia", "cognitive", "social",
            "polish_sweeps", "theta_lower", "theta_upper", "max_particles", "max_iters"}
OUTPUT_KEYS = {"dir", "log_y", "plot_metric"}


# ------------------------------------------------------------------- config


@dataclass(frozen=True)
class ExperimentSpec:
    problem: str
    strategies: tuple = ("mepe",)
    model: str = "ok"
    stopping: StoppingRule = StoppingRule(max_samples=30)
    strategy_params: dict = field(default_factory=dict)
    initial_size: int | None = None
    lf_size: int | None = None
    replications: int = 1
    seed: int = 0
    reference_seed: int = 12345
    reference_size: int | None = None
    kernel: str = "matern32"
    h: int | None = None
    h_lf: int | None = None
    degree: int = 1
    pool_size: int | None = None
    checkpoints: tuple = ()
    workers: int = 1
    optimizer: OptimizerConfig = OptimizerConfig()
    acq_optimizer: OptimizerConfig = ACQ_OPTIMIZER
    output_dir: str | None = None
    log_y: bool = True
    plot_metric: str | None = None
    name: str = ""

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        for s in self.strategies:
            if s not in STRATEGY_NAMES:
                raise ConfigError(f"unknown strategy {s!r}")
        for s in self.strategy_params:
            if s not in self.strategies:
                raise ConfigError(f"parameters given for unused strategy {s!r}")
        try:
            get_problem(self.problem)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        if self.model not in ("ok", "uk", "hk", "plsok", "plshk"):
            raise ConfigError(f"unknown model {self.model!r}")

    def model_spec(self) -> ModelSpec:
        return ModelSpec(self.model, KernelSpec(self.kernel), self.degree, self.h, self.h_lf,
                         self.optimizer)

    @property
    def metric(self) -> str:
        return self.plot_metric or self.stopping.metric or "mae"


def _opt(d: dict, where: str, base: OptimizerConfig) -> OptimizerConfig:
    bad = set(d) - OPT_KEYS
    if bad:
        raise ConfigError(f"unknown keys in [{where}]: {sorted(bad)}")
    return replace(base, **d)


def spec_from_dict(d: dict) -> ExperimentSpec:
    bad = set(d) - TOP_KEYS
    if bad:
        raise ConfigError(f"unknown config keys: {sorted(bad)}")
    if "problem" not in d:
        raise ConfigError("config needs 'problem'")
    stop = dict(d.get("stopping", {}))
    if set(stop) - STOP_KEYS:
        raise ConfigError(f"unknown keys in [stopping]: {sorted(set(stop) - STOP_KEYS)}")
    try:
        stopping = StoppingRule(**stop) if stop else StoppingRule(max_samples=30)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    strat = d.get("strategy", "mepe")
    strategies = (strat,) if isinstance(strat, str) else tuple(strat)
    output = dict(d.get("output", {}))
    if set(output) - OUTPUT_KEYS:
        raise ConfigError(f"unknown keys in [output]: {sorted(set(output) - OUTPUT_KEYS)}")
    kw = {k: d[k] for k in ("initial_size", "lf_size", "replications", "seed", "reference_seed",
                            "reference_size", "kernel", "pool_size", "workers", "h", "h_lf",
                            "degree", "model", "name") if k in d}
    return ExperimentSpec(
        problem=d["problem"],
        strategies=strategies,
        stopping=stopping,
        strategy_params={k: dict(v) for k, v in d.get("strategy_params", {}).items()},
        checkpoints=tuple(int(c) for c in d.get("checkpoints", ())),
        optimizer=_opt(d.get("optimizer", {}), "optimizer", OptimizerConfig()),
        acq_optimizer=_opt(d.get("acq_optimizer", {}), "acq_optimizer", ACQ_OPTIMIZER),
        output_dir=output.get("dir"),
        log_y=bool(output.get("log_y", True)),
        plot_metric=output.get("plot_metric"),
        **kw,
    )


def load_spec(path) -> ExperimentSpec:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return spec_from_dict(data)


# ------------------------------------------------------------------- running


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    records: list
    summary: list = field(default_factory=list)

    @property
    def statuses(self) -> list[str]:
        return [r.status for r in self.records]


def _run_one(args) -> RunRecord:
    spec, strategy, k = args
    problem = get_problem(spec.problem)
    ref = make_reference(problem, spec.reference_size, spec.reference_seed)
    try:
        return run_adaptive_loop(
            problem, spec.model_spec(), strategy, spec.stopping, spec.seed + k,
            initial=spec.initial_size, lf_size=spec.lf_size,
            strategy_params=spec.strategy_params.get(strategy, {}), reference=ref,
            acq_optimizer=spec.acq_optimizer, pool_size=spec.pool_size)
    except Exception as exc:  # a failing replication never aborts its siblings
        rec = RunRecord(problem.name, strategy, spec.model, spec.seed + k)
        rec.status, rec.message = "error", f"{type(exc).__name__}: {exc}"
        return rec


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """R replications per strategy with seeds master+k, then the summary."""
    jobs = [(spec, s, k) for s in spec.strategies for k in range(spec.replications)]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as ex:
            records = list(ex.map(_run_one, jobs))
    else:
        records = [_run_one(j) for j in jobs]
    for rec, (_, _, k) in zip(records, jobs):
        rec.replication = k
    rows = records_to_rows(records, get_problem(spec.problem).dim)
    return ExperimentResult(spec, records, summarize(rows, spec.stopping, spec.checkpoints))


# ------------------------------------------------------------------- rows / csv


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def run_columns(n: int) -> list[str]:
    return (["strategy", "replication", "seed", "iteration", "m", "status", "run_status"]
            + [f"x{i + 1}" for i in range(n)] + ["y"] + list(METRIC_COLUMNS) + ["diagnostics"])


def records_to_rows(records, n: int) -> list[dict]:
    rows = []
    for rec in records:
        k = getattr(rec, "replication", 0)
        if not rec.rows:
            rows.append({"strategy": rec.strategy, "replication": k, "seed": rec.seed,
                         "iteration": None, "m": None, "status": "error",
                         "run_status": rec.status, "point": None, "y": None, "metrics": {},
                         "diagnostics": {"message": rec.message}})
            continue
        for r in rec.rows:
            rows.append({"strategy": rec.strategy, "replication": k, "seed": rec.seed,
                         "iteration": r["iteration"], "m": r["m"], "status": r["status"],
                         "run_status": rec.status, "point": r["point"], "y": r["y"],
                         "metrics": r["metrics"], "diagnostics": r["diagnostics"]})
    return rows


def write_runs_csv(fh, rows: list[dict], n: int) -> None:
    w = csv.writer(fh, lineterminator="\r\n")
    w.writerow(run_columns(n))
    for r in rows:
        pt = [None] * n if r["point"] is None else list(np.asarray(r["point"], float).reshape(-1))
        diag = json.dumps(_plain(r["diagnostics"]), sort_keys=True) if r["diagnostics"] else ""
        w.writerow([_fmt(r["strategy"]), _fmt(r["replication"]), _fmt(r["seed"]),
                    _fmt(r["iteration"]), _fmt(r["m"]), r["status"], r["run_status"]]
                   + [_fmt(v) for v in pt] + [_fmt(r["y"])]
                   + [_fmt(r["metrics"].get(c)) for c in METRIC_COLUMNS] + [diag])


def read_runs_csv(path_or_fh) -> list[dict]:
    """Parse runs.csv back into the row dicts produced by :func:`records_to_rows`."""
    fh = open(path_or_fh, newline="", encoding="utf-8") if isinstance(path_or_fh, (str, Path)) \
        else path_or_fh
    try:
        reader = csv.DictReader(fh)
        xs = [c for c in reader.fieldnames if c.startswith("x") and c[1:].isdigit()]
        out = []
        for r in reader:
            num = lambda s: None if s == "" else float(s)  # noqa: E731
            ival = lambda s: None if s == "" else int(s)  # noqa: E731
            pt = [num(r[c]) for c in xs]
            out.append({
                "strategy": r["strategy"], "replication": int(r["replication"]),
                "seed": int(r["seed"]), "iteration": ival(r["iteration"]), "m": ival(r["m"]),
                "status": r["status"], "run_status": r["run_status"],
                "point": None if all(v is None for v in pt) else np.array(pt),
                "y": num(r["y"]),
                "metrics": {c: num(r[c]) for c in METRIC_COLUMNS if r[c] != ""},
                "diagnostics": json.loads(r["diagnostics"]) if r["diagnostics"] else {},
            })
        return out
    finally:
        if fh is not path_or_fh:
            fh.close()


# ------------------------------------------------------------------- summary


def _stop_reached(rule: StoppingRule, metrics: dict) -> bool:
    if rule.metric == "pct_min":
        pp, pn = metrics.get("pct_pos"), metrics.get("pct_neg")
        metrics = dict(metrics, pct_min=None if pp is None or pn is None else min(pp, pn))
    return rule.reached(metrics)


def summarize(rows: list[dict], stopping: StoppingRule, checkpoints=()) -> list[dict]:
    """Mean and variation (max - min) over replications, per strategy.

    Quantities: samples-to-threshold (over replications that reached it),
    every metric at the initial size, at each checkpoint, and at the final row.
    """
    out = []
    by_strategy: dict[str, dict[int, list[dict]]] = {}
    for r in rows:
        by_strategy.setdefault(r["strategy"], {}).setdefault(r["replication"], []).append(r)

    def add(strategy, quantity, m, values, n_runs):
        vals = [v for v in values if v is not None and not (isinstance(v, float) and math.isnan(v))]
        out.append({"strategy": strategy, "quantity": quantity, "m": m, "count": len(vals),
                    "runs": n_runs,
                    "mean": float(np.mean(vals)) if vals else None,
                    "variation": float(max(vals) - min(vals)) if vals else None})

    for strategy, reps in by_strategy.items():
        runs = [sorted((r for r in rr if r["m"] is not None), key=lambda r: r["m"])
                for rr in reps.values()]
        n_runs = len(runs)
        hits = []
        for rr in runs:
            hit = next((r["m"] for r in rr if _stop_reached(stopping, r["metrics"])), None)
            hits.append(hit)
        if stopping.metric is not None:
            add(strategy, "samples_to_threshold", None, hits, n_runs)
        statuses = [rr[-1]["run_status"] if rr else "error" for rr in runs]
        out.append({"strategy": strategy, "quantity": "clustering_failures", "m": None,
                    "count": n_runs, "runs": n_runs,
                    "mean": float(sum(s == "clustering_failure" for s in statuses)),
                    "variation": 0.0})
        ms = sorted({r["m"] for rr in runs for r in rr})
        marks = []
        if ms:
            marks.append(("initial", ms[0]))
        marks += [("checkpoint", int(c)) for c in checkpoints]
        for _, mark in marks:
            for c in METRIC_COLUMNS:
                vals = [next((r["metrics"].get(c) for r in rr if r["m"] == mark), None) for rr in runs]
                if any(v is not None for v in vals):
                    add(strategy, c, mark, vals, n_runs)
        for c in METRIC_COLUMNS:
            vals = [rr[-1]["metrics"].get(c) if rr else None for rr in runs]
            if any(v is not None for v in vals):
                add(strategy, f"final_{c}", None, vals, n_runs)
        add(strategy, "final_m", None, [rr[-1]["m"] if rr else None for rr in runs], n_runs)
    return out


SUMMARY_COLUMNS = ("strategy", "quantity", "m", "count", "runs", "mean", "variation")


def write_summary_csv(fh, summary: list[dict]) -> None:
    w = csv.writer(fh, lineterminator="\r\n")
    w.writerow(SUMMARY_COLUMNS)
    for s in summary:
        w.writerow([_fmt(s[c]) for c in SUMMARY_COLUMNS])


def read_summary_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        out = []
        for r in csv.DictReader(fh):
            out.append({"strategy": r["strategy"], "quantity": r["quantity"],
                        "m": int(r["m"]) if r["m"] else None, "count": int(r["count"]),
                        "runs": int(r["runs"]),
                        "mean": float(r["mean"]) if r["mean"] else None,
                        "variation": float(r["variation"]) if r["variation"] else None})
        return out


def summary_key(problem: str, model: str, s: dict) -> str:
    tail = s["quantity"] + (f"@{s['m']}" if s["m"] is not None else "")
    return f"{problem}/{model}/{s['strategy']}/{tail}"


def summary_dict(spec: ExperimentSpec, summary: list[dict]) -> dict[str, float | None]:
    return {summary_key(spec.problem, spec.model, s): s["mean"] for s in summary}


# ------------------------------------------------------------------- SVG


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
            "#7f7f7f", "#bcbd22", "#17becf")


def svg_line_plot(series: dict[str, tuple[list, list]], xlabel: str, ylabel: str,
                  log_y: bool = False, width: int = 640, height: int = 420) -> str:
    """Minimal SVG line chart: axes, ticks, one polyline per series, legend."""
    ml, mr, mt, mb = 70, 150, 20, 50
    pts = [(x, y) for xs, ys in series.values() for x, y in zip(xs, ys)
           if y is not None and (not log_y or y > 0)]
    if not pts:
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
                '<text x="20" y="40">no data</text></svg>\n')
    tf = (lambda v: math.log10(v)) if log_y else (lambda v: v)
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(tf(p[1]) for p in pts), max(tf(p[1]) for p in pts)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw, ph = width - ml - mr, height - mt - mb
    sx = lambda x: ml + (x - x0) / (x1 - x0) * pw  # noqa: E731
    sy = lambda y: mt + ph - (tf(y) - y0) / (y1 - y0) * ph  # noqa: E731
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'font-family="sans-serif" font-size="11">',
             f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for i in range(6):
        xv = x0 + (x1 - x0) * i / 5
        parts.append(f'<text x="{sx(xv):.1f}" y="{mt + ph + 15}" text-anchor="middle">{xv:.3g}</text>')
        yv = y0 + (y1 - y0) * i / 5
        ylab = f"{10 ** yv:.3g}" if log_y else f"{yv:.3g}"
        ypix = mt + ph - (yv - y0) / (y1 - y0) * ph
        parts.append(f'<text x="{ml - 5}" y="{ypix + 4:.1f}" text-anchor="end">{ylab}</text>')
    parts.append(f'<text x="{ml + pw / 2}" y="{height - 10}" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="15" y="{mt + ph / 2}" transform="rotate(-90 15 {mt + ph / 2})" '
                 f'text-anchor="middle">{ylabel}</text>')
    for i, (name, (xs, ys)) in enumerate(series.items()):
        col = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in zip(xs, ys)
                          if y is not None and (not log_y or y > 0))
        parts.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{coords}"/>')
        ly = mt + 15 * (i + 1)
        parts.append(f'<line x1="{ml + pw + 10}" y1="{ly}" x2="{ml + pw + 30}" y2="{ly}" '
                     f'stroke="{col}" stroke-width="2"/>')
        parts.append(f'<text x="{ml + pw + 35}" y="{ly + 4}">{name}</text>')
    parts.append("</svg>\n")
    return "\n".join(parts)


def convergence_series(rows: list[dict], metric: str) -> dict[str, tuple[list, list]]:
    """Mean metric versus m over the replications that reached each m."""
    acc: dict[str, dict[int, list[float]]] = {}
    for r in rows:
        v = r["metrics"].get(metric)
        if r["m"] is None or v is None:
            continue
        acc.setdefault(r["strategy"], {}).setdefault(r["m"], []).append(v)
    return {s: (sorted(d), [float(np.mean(d[m])) for m in sorted(d)]) for s, d in acc.items()}


# ------------------------------------------------------------------- artifacts


def emit_artifacts(result: ExperimentResult, out_dir=None) -> dict[str, Path]:
    """Write runs.csv, summary.csv, convergence.svg and samples.csv."""
    if not result.records:
        raise ValueError("no run records to write")
    spec = result.spec
    out = Path(out_dir or spec.output_dir or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    problem = get_problem(spec.problem)
    n = problem.dim
    rows = records_to_rows(result.records, n)
    paths = {k: out / f for k, f in (("runs", "runs.csv"), ("summary", "summary.csv"),
                                      ("convergence", "convergence.svg"), ("samples", "samples.csv"))}
    buf = io.StringIO()
    write_runs_csv(buf, rows, n)
    _write(paths["runs"], buf.getvalue())
    buf = io.StringIO()
    write_summary_csv(buf, result.summary)
    _write(paths["summary"], buf.getvalue())
    metric = spec.metric if spec.metric in METRIC_COLUMNS else "mae"
    svg = svg_line_plot(convergence_series(rows, metric), "samples m", metric,
                        log_y=spec.log_y and metric in ("mae", "rmse", "rmae"))
    _write(paths["convergence"], svg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["strategy", "replication", "index"] + [f"x{i + 1}" for i in range(n)] + ["y"])
    for rec in result.records:
        if rec.dataset is None:
            continue
        raw = rec.dataset.raw_points()
        for i, (x, y) in enumerate(zip(raw, rec.dataset.responses)):
            w.writerow([rec.strategy, getattr(rec, "replication", 0), i] + [_fmt(v) for v in x]
                       + [_fmt(y)])
    _write(paths["samples"], buf.getvalue())
    return paths


def _write(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


# ------------------------------------------------------------------- golden


@dataclass(frozen=True)
class GoldenEntry:
    key: str
    target: float
    tol_abs: float | None = None
    tol_rel: float | None = None
    note: str = ""

    def __post_init__(self):
        if self.tol_abs is None and self.tol_rel is None:
            raise ConfigError(f"golden entry {self.key!r} needs tol_abs or tol_rel")

    def accepts(self, observed: float | None) -> bool:
        if observed is None or not np.isfinite(observed):
            return False
        diff = abs(observed - self.target)
        ok = False
        if self.tol_abs is not None:
            ok = ok or diff <= self.tol_abs
        if self.tol_rel is not None:
            ok = ok or diff <= self.tol_rel * abs(self.target)
        return ok


@dataclass
class GoldenReport:
    results: list  # (entry, observed, passed)

    @property
    def passed(self) -> bool:
        return all(p for _, _, p in self.results)

    @property
    def misses(self) -> list[GoldenEntry]:
        return [e for e, _, p in self.results if not p]

    def lines(self) -> list[str]:
        out = []
        for e, obs, p in self.results:
            o = "missing" if obs is None else f"{obs:.6g}"
            tol = f"abs {e.tol_abs}" if e.tol_abs is not None else f"rel {e.tol_rel}"
            out.append(f"{'PASS' if p else 'MISS'} {e.key}: observed {o}, target {e.target} ({tol})")
        return out


def golden_check(summary: dict[str, float | None], table: list[GoldenEntry]) -> GoldenReport:
    return GoldenReport([(e, summary.get(e.key), e.accepts(summary.get(e.key))) for e in table])


def static_quantities(keys) -> dict[str, float]:
    """Golden keys that need no adaptive run: ``optimum/<problem>[/k]`` and
    ``fidelity_gap/<problem>/<mae|rmae|rmse>``."""
    from .benchfns import evaluate

    out = {}
    for key in keys:
        parts = key.split("/")
        if parts[0] == "optimum":
            p = get_problem(parts[1])
            k = int(parts[2]) if len(parts) > 2 else 0
            out[key] = evaluate(p, np.array(p.known_optima[k][0], float))
        elif parts[0] == "fidelity_gap":
            vals = dict(zip(("mae", "rmae", "rmse"), fidelity_gap(get_problem(parts[1]))))
            out[key] = vals[parts[2]]
    return out


def load_golden(path) -> tuple[list[GoldenEntry], list[ExperimentSpec]]:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    bad = set(data) - {"entry", "experiment"}
    if bad:
        raise ConfigError(f"unknown golden table keys: {sorted(bad)}")
    entries = []
    for e in data.get("entry", []):
        extra = set(e) - {"key", "target", "tol_abs", "tol_rel", "note"}
        if extra:
            raise ConfigError(f"unknown golden entry keys: {sorted(extra)}")
        entries.append(GoldenEntry(**e))
    specs = [spec_from_dict(x) for x in data.get("experiment", [])]
    return entries, specs


def run_golden(path, out_dir=None, progress=None) -> GoldenReport:
    entries, specs = load_golden(path)
    observed = static_quantities([e.key for e in entries])
    for spec in specs:
        if progress:
            progress(f"running {spec.name or spec.problem} ({', '.join(spec.strategies)})")
        res = run_experiment(spec)
        observed.update(summary_dict(spec, res.summary))
        if out_dir is not None:
            emit_artifacts(res, Path(out_dir) / (spec.name or spec.problem))
    return golden_check(observed, entries)


def exit_code(statuses) -> int:
    statuses = list(statuses)
    if any(s == "error" for s in statuses):
        return 1
    if any(s == "clustering_failure" for s in statuses):
        return 2
    return 0


__all__ = ["ExperimentSpec", "ExperimentResult", "spec_from_dict", "load_spec", "run_experiment",
           "emit_artifacts", "summarize", "read_runs_csv", "write_runs_csv", "records_to_rows",
           "golden_check", "GoldenEntry", "GoldenReport", "load_golden", "run_golden",
           "svg_line_plot", "exit_code", "summary_dict"]
