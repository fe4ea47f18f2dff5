import io
from pathlib import Path

import numpy as np
import pytest

from artifact.adaptive import StoppingRule
from artifact.errors import ConfigError
from artifact.harness import (
    GoldenEntry,
    emit_artifacts,
    exit_code,
    golden_check,
    load_golden,
    load_spec,
    read_runs_csv,
    records_to_rows,
    run_experiment,
    spec_from_dict,
    static_quantities,
    summarize,
    svg_line_plot,
    write_runs_csv,
)

ROOT = Path(__file__).resolve().parents[1]

SMALL = {
    "problem": "forrester",
    "strategy": ["msd", "mipt"],
    "initial_size": 4,
    "replications": 2,
    "seed": 7,
    "reference_size": 200,
    "stopping": {"max_samples": 8, "metric": "rmse", "threshold": 1e-9},
    "optimizer": {"particles_per_dim": 15, "iters_per_dim": 30, "polish_sweeps": 20},
}


@pytest.fixture(scope="module")
def small_result():
    return run_experiment(spec_from_dict(SMALL))


def test_config_validation():
    with pytest.raises(ConfigError, match="unknown config keys"):
        spec_from_dict({**SMALL, "budgett": 3})
    with pytest.raises(ConfigError):
        spec_from_dict({**SMALL, "stopping": {"max_samples": 5, "metrc": "mae"}})
    with pytest.raises(ConfigError):
        spec_from_dict({**SMALL, "optimizer": {"swarm": 3}})
    with pytest.raises(ConfigError):
        spec_from_dict({**SMALL, "strategy": "nope"})
    with pytest.raises(ConfigError):
        spec_from_dict({**SMALL, "problem": "nope"})
    with pytest.raises(ConfigError):
        spec_from_dict({**SMALL, "replications": 0})
    with pytest.raises(ConfigError):
        spec_from_dict({**SMALL, "strategy_params": {"cvd": {}}})
    with pytest.raises(ConfigError):
        spec_from_dict({"strategy": "cvd"})


def test_shipped_configs_parse():
    for path in sorted((ROOT / "configs").glob("*.toml")):
        assert load_spec(path).problem
    entries, specs = load_golden(ROOT / "golden" / "reference.toml")
    assert entries and specs


def test_row_count_and_seed_isolation(small_result):
    recs = small_result.records
    assert [(r.strategy, r.replication, r.seed) for r in recs] == [
        ("msd", 0, 7), ("msd", 1, 8), ("mipt", 0, 7), ("mipt", 1, 8)]
    rows = records_to_rows(recs, 1)
    # initial row plus one per added sample
    assert len(rows) == sum(1 + 8 - 4 for _ in recs)
    # replication k depends only on master + k, not on its siblings
    alone = run_experiment(spec_from_dict({**SMALL, "strategy": "mipt", "replications": 1, "seed": 8}))
    assert np.array_equal(alone.records[0].dataset.points, recs[3].dataset.points)


def test_runs_csv_round_trip(small_result):
    rows = records_to_rows(small_result.records, 1)
    buf = io.StringIO()
    write_runs_csv(buf, rows, 1)
    text = buf.getvalue()
    assert text.splitlines()[0].startswith("strategy,replication,seed,iteration,m,status,run_status,x1,y,mae")
    assert "\r\n" in text
    back = read_runs_csv(io.StringIO(text, newline=""))
    assert len(back) == len(rows)
    for a, b in zip(rows, back):
        assert a["m"] == b["m"] and a["y"] == b["y"]
        assert a["metrics"]["mae"] == b["metrics"]["mae"]  # repr floats are exact
        if a["point"] is not None:
            assert np.array_equal(np.asarray(a["point"]).reshape(-1), b["point"])


def test_summary_recomputable_from_csv(small_result, tmp_path):
    paths = emit_artifacts(small_result, tmp_path)
    rows = read_runs_csv(paths["runs"])
    again = summarize(rows, small_result.spec.stopping, small_result.spec.checkpoints)
    assert again == small_result.summary
    finals = [s for s in again if s["quantity"] == "final_m"]
    assert all(s["mean"] == 8.0 and s["variation"] == 0.0 for s in finals)
    assert paths["convergence"].read_text().startswith("<svg")
    assert paths["samples"].read_bytes().count(b"\r\n") == 1 + 4 * 8


def test_determinism_bytes(small_result, tmp_path):
    again = run_experiment(small_result.spec)
    a = emit_artifacts(small_result, tmp_path / "a")
    b = emit_artifacts(again, tmp_path / "b")
    for k in ("runs", "summary", "samples", "convergence"):
        assert a[k].read_bytes() == b[k].read_bytes()


def test_summary_threshold_and_variation():
    rows = []
    for rep, hits in enumerate((6, 9)):
        for m in range(5, 11):
            rows.append({"strategy": "s", "replication": rep, "m": m, "run_status": "completed",
                         "metrics": {"mae": 0.05 if m >= hits else 1.0}})
    summ = summarize(rows, StoppingRule(max_samples=10, metric="mae", threshold=0.1), (8,))
    by = {(s["quantity"], s["m"]): s for s in summ}
    assert by[("samples_to_threshold", None)]["mean"] == 7.5
    assert by[("samples_to_threshold", None)]["variation"] == 3.0
    assert by[("mae", 8)]["mean"] == pytest.approx(0.525)
    assert by[("clustering_failures", None)]["mean"] == 0.0


def test_golden_tolerances():
    e = GoldenEntry("k", 10.0, tol_abs=0.5)
    assert e.accepts(10.5) and not e.accepts(10.6) and not e.accepts(None)
    r = GoldenEntry("k", 10.0, tol_rel=0.1)
    assert r.accepts(9.0) and not r.accepts(8.9) and not r.accepts(float("nan"))
    with pytest.raises(ConfigError):
        GoldenEntry("k", 1.0)
    rep = golden_check({"a": 1.0}, [GoldenEntry("a", 1.0, 0.0), GoldenEntry("b", 1.0, 1.0)])
    assert not rep.passed and [m.key for m in rep.misses] == ["b"]
    assert rep.lines()[1].startswith("MISS b: observed missing")


def test_static_quantities():
    q = static_quantities(["optimum/trid5", "fidelity_gap/forrester/mae", "unrelated/key"])
    assert q["optimum/trid5"] == pytest.approx(-30.0)
    assert q["fidelity_gap/forrester/mae"] == pytest.approx(38.7, rel=0.05)
    assert "unrelated/key" not in q


def test_exit_codes():
    assert exit_code(["completed", "threshold_reached"]) == 0
    assert exit_code(["completed", "clustering_failure"]) == 2
    assert exit_code(["clustering_failure", "error"]) == 1


def test_svg_plot():
    svg = svg_line_plot({"a": ([1, 2, 3], [1.0, 0.1, 0.01])}, "m", "mae", log_y=True)
    assert svg.count("<polyline") == 1 and "0.01" in svg
    assert "no data" in svg_line_plot({}, "m", "mae")
