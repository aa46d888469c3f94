"""Paired with/without timing trials and CSV benchmark reports."""

from __future__ import annotations

import csv
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .geometry import RobotModel, Workspace, generate_workspace, get_robot, rasterize
from .planner import PlanSpec, PlanStats, Query, plan, plan_baseline, random_query
from .samplers import SamplerSpec

REPORT_VERSION = 1
BENCH_SEED_BASE = 7_000_000
QUERY_SEPARATION = 0.3

REPORT_COLUMNS = [
    "report_version", "class", "robot", "sampler", "arm", "workspace_seed", "query_index", "seed",
    "success", "t_sampling", "t_total", "sampling_exact_calls", "sampling_mlp_calls", "raw_draws",
    "kept", "edge_checks", "fallback_rounds", "fallback_exact_calls", "roadmap_nodes", "path_nodes",
    "path_length",
]
TIME_COLUMNS = ("t_sampling", "t_total")
SUMMARY_COLUMNS = [
    "report_version", "class", "robot", "sampler", "pairs", "pairs_both_success", "with_success",
    "without_success", "mean_sampling_improvement", "mean_total_improvement",
    "median_t_sampling_with", "median_t_sampling_without", "mean_fallback_rounds_with",
]


def improvement_ratio(t_with: float, t_without: float) -> float:
    """1 - t_with / t_without."""
    if t_without <= 0:
        return math.nan
    return 1.0 - t_with / t_without


@dataclass(frozen=True)
class Trial:
    ws: Workspace
    robot_tag: str
    query: Query
    sampler: str
    n_samples: int
    seed: int
    query_index: int


@dataclass
class PairedResult:
    trial: Trial
    with_stats: PlanStats
    without_stats: PlanStats

    @property
    def t_sampling_with(self) -> float:
        return self.with_stats.t_sampling

    @property
    def t_sampling_without(self) -> float:
        return self.without_stats.t_sampling

    @property
    def t_total_with(self) -> float:
        return self.with_stats.t_total

    @property
    def t_total_without(self) -> float:
        return self.without_stats.t_total


def paired_timing(trial: Trial, cae_model, mlp_model, reps: int = 3) -> PairedResult:
    """Run both arms ``reps`` times, alternating; times are medians, counts from the first rep."""
    robot = get_robot(trial.robot_tag)
    spec = PlanSpec(SamplerSpec(trial.sampler), trial.n_samples, seed=trial.seed)
    grid = rasterize(trial.ws)
    runs_w: list[PlanStats] = []
    runs_o: list[PlanStats] = []
    for _ in range(max(1, reps)):
        runs_w.append(plan(trial.ws, robot, trial.query, cae_model, mlp_model, spec, grid=grid)[1])
        runs_o.append(plan_baseline(trial.ws, robot, trial.query, spec)[1])
    w, o = runs_w[0], runs_o[0]
    for first, runs in ((w, runs_w), (o, runs_o)):
        first.t_sampling = statistics.median(r.t_sampling for r in runs)
        first.t_total = statistics.median(r.t_total for r in runs)
    return PairedResult(trial, w, o)


def bench_workspaces(wclass: str, count: int, seed: int) -> list[Workspace]:
    """Held-out worlds from a seed range disjoint from corpus seeds."""
    return [generate_workspace(wclass, BENCH_SEED_BASE + 1000 * int(seed) + i) for i in range(count)]


def make_trials(workspaces: Sequence[Workspace], robot: RobotModel, samplers: Sequence[str],
                queries_per_ws: int, n_samples: int, seed: int) -> list[Trial]:
    trials = []
    for wi, ws in enumerate(workspaces):
        for qi in range(queries_per_ws):
            qrng = np.random.default_rng([int(seed), wi, qi, 0x9E])
            q = random_query(robot, ws, qrng, min_separation=QUERY_SEPARATION)
            for s in samplers:
                trials.append(Trial(ws, robot.tag, q, s, n_samples, int(seed) * 100_000 + wi * 1000 + qi, qi))
    return trials


def _run_one(args) -> PairedResult:
    trial, cae_model, mlp_model, reps = args
    return paired_timing(trial, cae_model, mlp_model, reps)


def run_trials(trials: Sequence[Trial], cae_model, mlp_model, reps: int = 3, workers: int = 1,
               progress=None) -> list[PairedResult]:
    """Sequential by default for clean timings; ``workers > 1`` runs trials in a process pool."""
    jobs = [(t, cae_model, mlp_model, reps) for t in trials]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_one, jobs))
    out = []
    for i, job in enumerate(jobs):
        out.append(_run_one(job))
        if progress:
            progress(i + 1, len(jobs))
    return out


def _row(r: PairedResult, stats: PlanStats, wclass: str) -> dict:
    return {
        "report_version": REPORT_VERSION,
        "class": wclass,
        "robot": r.trial.robot_tag,
        "sampler": r.trial.sampler,
        "arm": stats.arm,
        "workspace_seed": r.trial.ws.seed,
        "query_index": r.trial.query_index,
        "seed": r.trial.seed,
        "success": int(stats.success),
        "t_sampling": stats.t_sampling,
        "t_total": stats.t_total,
        "sampling_exact_calls": stats.sampling_exact_calls,
        "sampling_mlp_calls": stats.sampling_mlp_calls,
        "raw_draws": stats.raw_draws,
        "kept": stats.kept,
        "edge_checks": stats.edge_checks,
        "fallback_rounds": stats.fallback_rounds,
        "fallback_exact_calls": stats.fallback_exact_calls,
        "roadmap_nodes": stats.roadmap_nodes,
        "path_nodes": stats.path_nodes,
        "path_length": stats.path_length,
    }


@dataclass
class BenchmarkReport:
    rows: list[dict]
    summary: list[dict]

    @classmethod
    def from_results(cls, results: Iterable[PairedResult]) -> "BenchmarkReport":
        rows, groups = [], {}
        for r in results:
            wclass = r.trial.ws.wclass.value
            rows.append(_row(r, r.with_stats, wclass))
            rows.append(_row(r, r.without_stats, wclass))
            groups.setdefault((wclass, r.trial.robot_tag, r.trial.sampler), []).append(r)
        return cls(rows, [summarize(k, v) for k, v in groups.items()])

    def write(self, path: str | Path, summary_path: str | Path | None = None) -> None:
        write_csv(path, REPORT_COLUMNS, self.rows)
        if summary_path is not None:
            write_csv(summary_path, SUMMARY_COLUMNS, self.summary)

    def summary_for(self, sampler: str) -> dict:
        for s in self.summary:
            if s["sampler"] == sampler:
                return s
        raise KeyError(sampler)


def summarize(key: tuple[str, str, str], results: Sequence[PairedResult]) -> dict:
    """Ratios only over pairs where both arms succeeded."""
    both = [r for r in results if r.with_stats.success and r.without_stats.success]
    samp = [improvement_ratio(r.t_sampling_with, r.t_sampling_without) for r in both]
    tot = [improvement_ratio(r.t_total_with, r.t_total_without) for r in both]
    samp = [x for x in samp if math.isfinite(x)]
    tot = [x for x in tot if math.isfinite(x)]
    return {
        "report_version": REPORT_VERSION,
        "class": key[0],
        "robot": key[1],
        "sampler": key[2],
        "pairs": len(results),
        "pairs_both_success": len(both),
        "with_success": sum(r.with_stats.success for r in results),
        "without_success": sum(r.without_stats.success for r in results),
        "mean_sampling_improvement": float(np.mean(samp)) if samp else math.nan,
        "mean_total_improvement": float(np.mean(tot)) if tot else math.nan,
        "median_t_sampling_with": float(np.median([r.t_sampling_with for r in results])),
        "median_t_sampling_without": float(np.median([r.t_sampling_without for r in results])),
        "mean_fallback_rounds_with": float(np.mean([r.with_stats.fallback_rounds for r in results])),
    }


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
