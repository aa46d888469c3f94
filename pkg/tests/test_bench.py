from __future__ import annotations

import math

import numpy as np
import pytest

from latentprm import bench, cae, mlp
from latentprm.datagen import balanced_samples
from latentprm.geometry import generate_workspace, get_robot, rasterize

POINT = get_robot("point2d")


@pytest.fixture(scope="module")
def models():
    c = cae.build_cae("2DS", 0).frozen()
    return c, mlp.build_mlp("2DS", POINT, c.latent_dim, 0).frozen()


def small_report(models, workers=1):
    c, m = models
    wss = bench.bench_workspaces("2DS", 2, seed=1)
    trials = bench.make_trials(wss, POINT, ["BS", "OB"], 1, 60, seed=1)
    results = bench.run_trials(trials, c, m, reps=2, workers=workers)
    return bench.BenchmarkReport.from_results(results)


def test_improvement_ratio_example():
    assert bench.improvement_ratio(0.03, 0.05) == pytest.approx(0.4)
    assert bench.improvement_ratio(0.05, 0.05) == 0.0
    assert math.isnan(bench.improvement_ratio(1.0, 0.0))


def test_report_schema_and_arms(models, tmp_path):
    rep = small_report(models)
    rep.write(tmp_path / "bench.csv", tmp_path / "summary.csv")
    rows = bench.read_csv(tmp_path / "bench.csv")
    assert list(rows[0]) == bench.REPORT_COLUMNS
    assert len(rows) == 2 * 2 * 2
    assert {r["arm"] for r in rows} == {"with", "without"}
    for r in rows:
        if r["arm"] == "with":
            assert int(r["sampling_exact_calls"]) == 0
        else:
            assert int(r["sampling_exact_calls"]) >= 60 and int(r["sampling_mlp_calls"]) == 0
    summ = bench.read_csv(tmp_path / "summary.csv")
    assert list(summ[0]) == bench.SUMMARY_COLUMNS
    assert {s["sampler"] for s in summ} == {"BS", "OB"}
    assert rep.summary_for("OB")["pairs"] == 2


def non_time(rows):
    return [{k: v for k, v in r.items() if k not in bench.TIME_COLUMNS} for r in rows]


def test_non_time_columns_are_deterministic(models, tmp_path):
    a = small_report(models)
    b = small_report(models, workers=2)
    a.write(tmp_path / "a.csv")
    b.write(tmp_path / "b.csv")
    assert non_time(bench.read_csv(tmp_path / "a.csv")) == non_time(bench.read_csv(tmp_path / "b.csv"))


def test_summary_only_uses_pairs_where_both_arms_succeed(models):
    c, m = models
    ws = generate_workspace("2DS", 5)
    trial = bench.make_trials([ws], POINT, ["BS"], 1, 40, seed=0)[0]
    r1 = bench.paired_timing(trial, c, m, reps=1)
    r2 = bench.paired_timing(trial, c, m, reps=1)
    r1.with_stats.success = r1.without_stats.success = True
    r1.with_stats.t_sampling, r1.without_stats.t_sampling = 0.03, 0.05
    r2.with_stats.success = False
    r2.with_stats.t_sampling, r2.without_stats.t_sampling = 10.0, 0.05
    s = bench.summarize(("2DS", "point2d", "BS"), [r1, r2])
    assert s["pairs"] == 2 and s["pairs_both_success"] == 1
    assert s["mean_sampling_improvement"] == pytest.approx(0.4)


def test_bench_worlds_avoid_corpus_seeds():
    wss = bench.bench_workspaces("2DS", 3, seed=0)
    assert all(ws.seed >= bench.BENCH_SEED_BASE for ws in wss)


def test_untrained_gate_is_at_chance():
    c = cae.build_cae("2DS", 1).frozen()
    m = mlp.build_mlp("2DS", POINT, c.latent_dim, 1).frozen()
    rng = np.random.default_rng(0)
    X, y = [], []
    for seed in range(20):
        ws = generate_workspace("2DS", 9000 + seed)
        s = balanced_samples(POINT, ws, 100, rng)
        X.append(mlp.inputs(cae.encode(c, rasterize(ws)), POINT.normalize(ws.extents, s.configs)))
        y.append(s.labels)
    met = mlp.evaluate(m, np.vstack(X), np.concatenate(y))
    assert met.n == 2000
    assert abs(met.accuracy - 0.5) <= 0.05
