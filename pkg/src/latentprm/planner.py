"""PRM roadmap, lazily validated queries, and the learned-gate planning pipeline."""

from __future__ import annotations

import heapq
import json
import time
from dataclasses import dataclass, field, fields
from enum import IntEnum
import pathlib
from typing import Callable

import numpy as np

from . import cae as cae_mod
from .geometry import RobotModel, Workspace, collide, normalized_distance, rasterize, validate_edge
from .samplers import CSpace, ExactOracle, MlpOracle, SamplerKind, SamplerSpec, run_sampler

DEFAULT_K = 10
FALLBACK_ROUNDS = 20
FALLBACK_BATCH = 50
RAW_SAMPLES = {"2DS": 200, "3DO": 2000, "3DC": 400}


class EdgeState(IntEnum):
    UNCHECKED = 0
    VALID = 1
    INVALID = 2


@dataclass
class Roadmap:
    nodes: np.ndarray
    adj: dict[int, dict[int, float]]
    state: dict[tuple[int, int], EdgeState] = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def edges(self) -> list[tuple[int, int, float]]:
        return [(i, j, w) for i, nb in self.adj.items() for j, w in nb.items() if i < j]

    def n_edges(self) -> int:
        return sum(len(nb) for nb in self.adj.values()) // 2

    def edge_state(self, i: int, j: int) -> EdgeState:
        return self.state.get((min(i, j), max(i, j)), EdgeState.UNCHECKED)

    def set_state(self, i: int, j: int, s: EdgeState) -> None:
        self.state[(min(i, j), max(i, j))] = s

    def add_edge(self, i: int, j: int, w: float) -> None:
        if i == j:
            return
        self.adj.setdefault(i, {})[j] = w
        self.adj.setdefault(j, {})[i] = w


class EdgeValidator:
    """Counting wrapper around the exact straight-line check."""

    def __init__(self, robot: RobotModel, ws: Workspace):
        self.robot = robot
        self.ws = ws
        self.checks = 0

    def __call__(self, q1, q2) -> bool:
        self.checks += 1
        return validate_edge(self.robot, q1, q2, self.ws)


def knn(robot: RobotModel, extents, nodes: np.ndarray, k: int) -> list[list[tuple[float, int]]]:
    """For each node, its k nearest others as (distance, index), ascending; ties by index."""
    out = []
    n = len(nodes)
    for i in range(n):
        d = normalized_distance(robot, extents, nodes[i], nodes)
        d[i] = np.inf
        kk = min(k, n - 1)
        if kk <= 0:
            out.append([])
            continue
        # Stable sort on distance gives deterministic index tie-breaks.
        order = np.argsort(d, kind="stable")[:kk]
        out.append([(float(d[j]), int(j)) for j in order])
    return out


def build_roadmap(samples, k: int, robot: RobotModel, extents, previous: Roadmap | None = None) -> Roadmap:
    """Connect each node to its k nearest neighbors; edges start unchecked.

    When ``previous`` is given its nodes must be a prefix of ``samples``; known
    edge states are carried over.
    """
    nodes = np.atleast_2d(np.asarray(samples, dtype=float))
    if nodes.size == 0:
        raise ValueError("roadmap needs at least one sample")
    rm = Roadmap(nodes, {i: {} for i in range(len(nodes))})
    for i, nbrs in enumerate(knn(robot, extents, nodes, k)):
        for d, j in nbrs:
            if d > 0:
                rm.add_edge(i, j, d)
    if previous is not None:
        rm.state.update(previous.state)
    return rm


@dataclass
class Query:
    start: np.ndarray
    goal: np.ndarray


@dataclass
class Path:
    configs: np.ndarray
    length: float
    exact_verified: bool = False

    def to_dict(self) -> dict:
        return {
            "format": "latentprm.path",
            "version": 1,
            "length": self.length,
            "exact_verified": self.exact_verified,
            "configs": [list(map(float, q)) for q in self.configs],
        }

    def save(self, path: str | pathlib.Path) -> None:
        pathlib.Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | pathlib.Path) -> "Path":
        d = json.loads(pathlib.Path(path).read_text(encoding="utf-8"))
        if d.get("format") != "latentprm.path":
            raise ValueError(f"{path}: not a path document")
        return cls(np.array(d["configs"], dtype=float), float(d["length"]), bool(d["exact_verified"]))


def dijkstra(adj: dict[int, dict[int, float]], src: int, dst: int,
             blocked: Callable[[int, int], bool]) -> list[int] | None:
    """Shortest path over non-blocked edges; heap ties resolve to the smaller node index."""
    dist = {src: 0.0}
    prev: dict[int, int] = {}
    heap = [(0.0, src)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == dst:
            break
        for v in sorted(adj.get(u, {})):
            if v in done or blocked(u, v):
                continue
            nd = d + adj[u][v]
            if nd < dist.get(v, np.inf) or (nd == dist.get(v) and u < prev.get(v, u)):
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    if dst not in done:
        return None
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return path[::-1]


def query(roadmap: Roadmap, q: Query, validator: Callable, robot: RobotModel, extents,
          k: int = DEFAULT_K) -> Path | None:
    """Attach start and goal, then search and lazily validate until a fully valid path appears."""
    start = np.asarray(q.start, dtype=float)
    goal = np.asarray(q.goal, dtype=float)
    if np.array_equal(start, goal):
        if validator(start, goal):
            return Path(start[None, :].copy(), 0.0, True)
        return None
    n = roadmap.n_nodes
    s_idx, g_idx = n, n + 1
    nodes = np.vstack([roadmap.nodes, start, goal])
    adj = {i: dict(nb) for i, nb in roadmap.adj.items()}
    adj[s_idx], adj[g_idx] = {}, {}
    local_state: dict[tuple[int, int], EdgeState] = {}

    def attach(idx: int, qv: np.ndarray):
        d = normalized_distance(robot, extents, qv, roadmap.nodes)
        for j in np.argsort(d, kind="stable")[:k]:
            if d[j] > 0:
                adj[idx][int(j)] = float(d[j])
                adj[int(j)][idx] = float(d[j])

    attach(s_idx, start)
    attach(g_idx, goal)
    dsg = float(normalized_distance(robot, extents, start, goal))
    adj[s_idx][g_idx] = dsg
    adj[g_idx][s_idx] = dsg

    def get(i, j):
        key = (min(i, j), max(i, j))
        if i < n and j < n:
            return roadmap.state.get(key, EdgeState.UNCHECKED)
        return local_state.get(key, EdgeState.UNCHECKED)

    def put(i, j, st):
        key = (min(i, j), max(i, j))
        if i < n and j < n:
            roadmap.state[key] = st
        else:
            local_state[key] = st

    def blocked(i, j):
        return get(i, j) == EdgeState.INVALID

    while True:
        route = dijkstra(adj, s_idx, g_idx, blocked)
        if route is None:
            return None
        ok = True
        for a, b in zip(route, route[1:]):
            st = get(a, b)
            if st == EdgeState.UNCHECKED:
                st = EdgeState.VALID if validator(nodes[a], nodes[b]) else EdgeState.INVALID
                put(a, b, st)
            if st == EdgeState.INVALID:
                ok = False
                break
        if ok:
            length = sum(adj[a][b] for a, b in zip(route, route[1:]))
            return Path(nodes[route].copy(), float(length), False)


@dataclass
class PlanSpec:
    sampler: SamplerSpec = field(default_factory=SamplerSpec)
    n_samples: int = 200
    k: int = DEFAULT_K
    fallback_rounds: int = FALLBACK_ROUNDS
    fallback_batch: int = FALLBACK_BATCH
    seed: int = 0


@dataclass
class PlanStats:
    arm: str
    sampler: str
    seed: int
    success: bool = False
    t_sampling: float = 0.0
    t_total: float = 0.0
    sampling_exact_calls: int = 0
    sampling_mlp_calls: int = 0
    raw_draws: int = 0
    kept: int = 0
    edge_checks: int = 0
    fallback_rounds: int = 0
    fallback_exact_calls: int = 0
    verify_checks: int = 0
    roadmap_nodes: int = 0
    path_nodes: int = 0
    path_length: float = float("nan")
    roadmap: Roadmap | None = field(default=None, repr=False, compare=False)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "roadmap"}


def verify_path(robot: RobotModel, ws: Workspace, path: Path) -> bool:
    """Independent exact re-check of every node and straight segment."""
    if len(path.configs) == 1:
        return not collide(robot, path.configs[0], ws)
    return all(validate_edge(robot, a, b, ws) for a, b in zip(path.configs, path.configs[1:]))


def _sampling_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), 0x5A])


def _fallback_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), 0xFB])


def _complete(ws: Workspace, robot: RobotModel, q: Query, spec: PlanSpec, samples: np.ndarray,
              stats: PlanStats) -> Path | None:
    """Roadmap, query, fallback rounds, and final exact verification (shared by both arms)."""
    extents = ws.extents
    cspace = CSpace(robot, extents)
    validator = EdgeValidator(robot, ws)
    exact = ExactOracle(robot, ws)
    frng = _fallback_rng(spec.seed)
    fb_spec = spec.sampler
    rm = None
    path = None
    nodes = samples
    for round_ in range(spec.fallback_rounds + 1):
        if round_ > 0:
            extra = run_sampler(fb_spec, spec.fallback_batch, frng, exact, cspace).samples
            stats.fallback_rounds = round_
            if len(extra):
                nodes = np.vstack([nodes, extra]) if len(nodes) else extra
        if len(nodes) == 0:
            continue
        rm = build_roadmap(nodes, spec.k, robot, extents, previous=rm)
        path = query(rm, q, validator, robot, extents, spec.k)
        if path is not None:
            break
    stats.fallback_exact_calls = exact.calls
    stats.edge_checks = validator.checks
    stats.roadmap_nodes = len(nodes)
    stats.roadmap = rm
    if path is None:
        return None
    stats.verify_checks = max(len(path.configs) - 1, 1)
    path.exact_verified = verify_path(robot, ws, path)
    if not path.exact_verified:  # pragma: no cover - lazy validation already checked each edge
        return None
    return path


def plan(ws: Workspace, robot: RobotModel, q: Query, cae_model, mlp_model, spec: PlanSpec,
         grid=None) -> tuple[Path | None, PlanStats]:
    """Learned-gate arm: encode, sample through the MLP oracle, then roadmap + exact checks."""
    stats = PlanStats("with", SamplerKind(spec.sampler.kind).value, spec.seed)
    t0 = time.perf_counter()
    if grid is None:
        grid = rasterize(ws)
    z = cae_mod.encode(cae_model, grid)
    gate = MlpOracle(mlp_model, robot, ws.extents, z)
    cspace = CSpace(robot, ws.extents)
    ts = time.perf_counter()
    res = run_sampler(spec.sampler, spec.n_samples, _sampling_rng(spec.seed), gate, cspace)
    samples = res.samples  # already the predicted-valid set
    stats.t_sampling = time.perf_counter() - ts
    stats.sampling_mlp_calls = res.oracle_calls
    stats.raw_draws = res.attempts
    stats.kept = len(samples)
    path = _complete(ws, robot, q, spec, samples, stats)
    stats.t_total = time.perf_counter() - t0
    stats.success = path is not None
    if path is not None:
        stats.path_nodes = len(path.configs)
        stats.path_length = path.length
    return path, stats


def plan_baseline(ws: Workspace, robot: RobotModel, q: Query, spec: PlanSpec) -> tuple[Path | None, PlanStats]:
    """Same pipeline with the exact oracle in the sampling phase."""
    stats = PlanStats("without", SamplerKind(spec.sampler.kind).value, spec.seed)
    t0 = time.perf_counter()
    exact = ExactOracle(robot, ws)
    cspace = CSpace(robot, ws.extents)
    ts = time.perf_counter()
    res = run_sampler(spec.sampler, spec.n_samples, _sampling_rng(spec.seed), exact, cspace)
    stats.t_sampling = time.perf_counter() - ts
    stats.sampling_exact_calls = res.oracle_calls
    stats.raw_draws = res.attempts
    stats.kept = len(res.samples)
    path = _complete(ws, robot, q, spec, res.samples, stats)
    stats.t_total = time.perf_counter() - t0
    stats.success = path is not None
    if path is not None:
        stats.path_nodes = len(path.configs)
        stats.path_length = path.length
    return path, stats


def random_query(robot: RobotModel, ws: Workspace, rng: np.random.Generator, max_tries: int = 10000,
                 min_separation: float = 0.0) -> Query:
    """Start and goal drawn uniformly among exact-valid configurations."""
    cspace = CSpace(robot, ws.extents)
    picks = []
    for _ in range(max_tries):
        qv = cspace.uniform(rng, 1)[0]
        if collide(robot, qv, ws):
            continue
        if picks and float(normalized_distance(robot, ws.extents, picks[0], qv)) < min_separation:
            continue
        picks.append(qv)
        if len(picks) == 2:
            return Query(picks[0], picks[1])
    raise RuntimeError("could not find a collision-free start and goal")
