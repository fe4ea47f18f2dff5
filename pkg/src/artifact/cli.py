"""Command line entry point: ``artifact {fit,adapt,experiment,dynamics,golden}``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import ArtifactError, ConfigError


def _overrides(spec, args):
    kw = {}
    if getattr(args, "seed", None) is not None:
        kw["seed"] = args.seed
    if getattr(args, "replications", None) is not None:
        kw["replications"] = args.replications
    if getattr(args, "out", None) is not None:
        kw["output_dir"] = args.out
    if getattr(args, "workers", None) is not None:
        kw["workers"] = args.workers
    return replace(spec, **kw) if kw else spec


def _spec_from_args(args, default_strategy="mepe"):
    from .harness import load_spec, spec_from_dict

    if args.config:
        return _overrides(load_spec(args.config), args)
    if not args.problem:
        raise ConfigError("give --config or --problem")
    d = {"problem": args.problem, "model": args.model,
         "strategy": getattr(args, "strategy", None) or default_strategy}
    stop = {}
    if getattr(args, "budget", None) is not None:
        stop["max_samples"] = args.budget
    if getattr(args, "metric", None):
        stop["metric"] = args.metric
        stop["threshold"] = args.threshold
    if stop:
        d["stopping"] = stop
    for k in ("initial_size", "lf_size", "reference_size"):
        if getattr(args, k, None) is not None:
            d[k] = getattr(args, k)
    return _overrides(spec_from_dict(d), args)


def _common(p, strategy=False):
    p.add_argument("--config", help="TOML experiment config")
    p.add_argument("--problem", help="benchmark problem name")
    p.add_argument("--model", default="ok", choices=["ok", "uk", "hk", "plsok", "plshk"])
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--initial-size", dest="initial_size", type=int)
    p.add_argument("--lf-size", dest="lf_size", type=int)
    p.add_argument("--reference-size", dest="reference_size", type=int)
    if strategy:
        p.add_argument("--strategy")
        p.add_argument("--budget", type=int, help="maximum number of samples")
        p.add_argument("--metric", choices=["mae", "rmse", "rmae", "r2", "pct_pos", "pct_neg", "pct_min"])
        p.add_argument("--threshold", type=float)


# ------------------------------------------------------------------- commands


def cmd_fit(args) -> int:
    from .adaptive import _evaluate, make_reference, model_metrics
    from .benchfns import get_problem
    from .designspace import Dataset, initial_size, tplhd

    spec = _spec_from_args(args)
    problem = get_problem(spec.problem)
    mspec = spec.model_spec()
    rng = np.random.default_rng(spec.seed)
    m = spec.initial_size or initial_size(problem.dim)
    lf_model = None
    if mspec.multifidelity:
        Zl = tplhd(spec.lf_size or 7 * m, problem.dim)
        lf_ds = Dataset(Zl, _evaluate(problem, Zl, "lf"), problem.domain)
        lf_model = mspec.fit_lf(lf_ds, int(rng.integers(0, 2 ** 63 - 1)))
    Z = tplhd(m, problem.dim)
    ds = Dataset(Z, _evaluate(problem, Z), problem.domain)
    model = mspec.fit(ds, int(rng.integers(0, 2 ** 63 - 1)), lf_model)
    ref = make_reference(problem, spec.reference_size, spec.reference_seed)
    report = {"problem": problem.name, "model": spec.model, "m": m,
              "theta": [float(t) for t in model.theta], "sigma2": model.sigma2,
              "metrics": model_metrics(model, problem, ref)}
    print(json.dumps(report, indent=2))
    if args.save:
        Path(args.save).write_text(json.dumps(model.to_dict()), encoding="utf-8")
    return 0


def cmd_adapt(args) -> int:
    from .harness import emit_artifacts, exit_code, run_experiment

    spec = _spec_from_args(args)
    if len(spec.strategies) != 1 or spec.replications != 1:
        spec = replace(spec, strategies=spec.strategies[:1], replications=1,
                       strategy_params={k: v for k, v in spec.strategy_params.items()
                                        if k == spec.strategies[0]})
    res = run_experiment(spec)
    rec = res.records[0]
    for row in rec.rows:
        mets = " ".join(f"{k}={v:.4g}" for k, v in row["metrics"].items() if v is not None)
        print(f"iter {row['iteration']:3d}  m={row['m']:4d}  {mets}")
    print(f"status: {rec.status}" + (f" ({rec.message})" if rec.message else ""))
    if spec.output_dir:
        for p in emit_artifacts(res).values():
            print(f"wrote {p}")
    return exit_code(res.statuses)


def cmd_experiment(args) -> int:
    from .harness import emit_artifacts, exit_code, run_experiment

    if not args.config:
        raise ConfigError("experiment needs --config")
    spec = _spec_from_args(args)
    res = run_experiment(spec)
    paths = emit_artifacts(res, spec.output_dir or ".")
    for s in res.summary:
        if s["quantity"] in ("samples_to_threshold", "final_m") or s["quantity"].startswith("final_mae"):
            mean = "-" if s["mean"] is None else f"{s['mean']:.4g}"
            var = "-" if s["variation"] is None else f"{s['variation']:.4g}"
            print(f"{s['strategy']:>6} {s['quantity']:<22} {mean} ± {var}  ({s['count']}/{s['runs']})")
    for p in paths.values():
        print(f"wrote {p}")
    return exit_code(res.statuses)


def _params(pairs):
    from .dynamics import OscillatorParams

    kw = {}
    for item in pairs or ():
        k, _, v = item.partition("=")
        if not _:
            raise ConfigError(f"expected NAME=VALUE, got {item!r}")
        kw[k] = float(v)
    return OscillatorParams().with_values(**kw)


def cmd_dynamics(args) -> int:
    from . import dynamics as dyn
    from .benchfns import get_problem

    if args.action == "lle":
        prm = _params(args.param)
        val = dyn.largest_lyapunov(prm)
        print(json.dumps({"params": prm.to_dict(), "lle": val, "label": dyn.chaos_label(val)}))
    elif args.action == "sticking":
        prm = _params(args.param)
        print(json.dumps({"params": prm.to_dict(),
                          "sticking_time": dyn.sticking_time(prm, tuple(args.window))}))
    elif args.action == "molaie":
        sys_ = dyn.molaie_system(args.a)
        cfg = dyn.LleConfig(dt=0.1, t_transient=100.0, t_total=1100.0)
        est = dyn.largest_lyapunov(sys_, cfg, jacobian="estimated")
        ex = dyn.largest_lyapunov(sys_, cfg, jacobian="exact")
        print(json.dumps({"a": args.a, "lle_estimated": est, "lle_exact": ex}))
    else:  # map
        problem = get_problem(args.problem)
        shape = args.grid if len(args.grid) == problem.dim else [args.grid[0]] * problem.dim
        P, vals = dyn.lle_grid(problem.hf, problem.domain, shape)
        out = args.out or f"{problem.name}_map.csv"
        dyn.write_map_csv(out, P, vals)
        print(f"wrote {out} ({len(vals)} points, {int(np.sum(vals >= 0))} chaotic)")
    return 0


def cmd_golden(args) -> int:
    from .harness import run_golden

    report = run_golden(args.table, args.out, progress=lambda s: print(s, flush=True))
    for line in report.lines():
        print(line)
    print("golden: " + ("all entries within tolerance" if report.passed
                        else f"{len(report.misses)} miss(es)"))
    return 0 if report.passed else 1


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="artifact", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one model on a TPLHD design and print its metrics")
    _common(p)
    p.add_argument("--save", help="write the fitted model as JSON")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("adapt", help="one adaptive sampling run")
    _common(p, strategy=True)
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("experiment", help="replicated experiment from a config file")
    _common(p, strategy=True)
    p.add_argument("--replications", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("dynamics", help="oscillator LLE, sticking time and parameter maps")
    p.add_argument("action", choices=["lle", "sticking", "map", "molaie"])
    p.add_argument("--param", action="append", metavar="NAME=VALUE",
                   help="override an oscillator parameter (repeatable)")
    p.add_argument("--window", nargs=2, type=float, default=[150.0, 250.0])
    p.add_argument("--problem", default="mob_lle_1d")
    p.add_argument("--grid", nargs="+", type=int, default=[11])
    p.add_argument("--a", type=float, default=3.4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("golden", help="run the golden regression table")
    p.add_argument("--table", default="golden/reference.toml")
    p.add_argument("--out")
    p.set_defaults(func=cmd_golden)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ArtifactError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
