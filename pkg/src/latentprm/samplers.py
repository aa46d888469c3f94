"""Auxiliary samplers (uniform, obstacle-based, Gaussian, bridge test) over a pluggable oracle.

An oracle maps an ``(n, d)`` array of configurations to an ``(n,)`` boolean
array of validity. The samplers work in batches: every draw in a batch is
forwarded to the oracle in one call. The exact oracle answers configuration by
configuration inside that call; the learned gate evaluates the batch as one
network forward pass. Control flow depends only on the oracle's answers, so
two oracles that agree on every query produce the same attempt sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .geometry import RobotModel, Workspace, collide
from .geometry.robots import wrap_config

OB_STEP = 0.05
OB_MAX_STEPS = 64
OB_BRACKET = 1e-3
DEFAULT_SIGMA = 0.06
ATTEMPTS_PER_SAMPLE = 50


class ExactOracle:
    """Validity from the geometric collision checker, one query per configuration."""

    def __init__(self, robot: RobotModel, ws: Workspace):
        self.robot = robot
        self.ws = ws
        self.calls = 0

    def __call__(self, Q: np.ndarray) -> np.ndarray:
        Q = np.atleast_2d(Q)
        self.calls += len(Q)
        robot, ws = self.robot, self.ws
        return np.fromiter((not collide(robot, q, ws) for q in Q), dtype=bool, count=len(Q))


class MlpOracle:
    """Validity predicted by the learned gate for a fixed workspace code.

    Configurations whose translation DoFs fall outside the sampling range are
    answered invalid without consulting the network.
    """

    def __init__(self, model, robot: RobotModel, extents, z):
        from .mlp import GateEvaluator

        self.model = model
        self.robot = robot
        self.extents = extents
        self.z = np.asarray(z, dtype=np.float64)
        self._gate = GateEvaluator(model, self.z, robot, extents)
        self.calls = 0

    def __call__(self, Q: np.ndarray) -> np.ndarray:
        Q = np.atleast_2d(Q)
        self.calls += len(Q)
        return self._gate(Q)


class RecordingOracle:
    """Wraps an oracle and logs every query batch and answer (for replay checks)."""

    def __init__(self, inner):
        self.inner = inner
        self.log: list[tuple[np.ndarray, np.ndarray]] = []

    @property
    def calls(self) -> int:
        return self.inner.calls

    def __call__(self, Q):
        ans = self.inner(Q)
        self.log.append((np.array(Q, copy=True), np.array(ans, copy=True)))
        return ans


class ReplayOracle:
    """Answers from a recorded log; raises if queried off-script."""

    def __init__(self, log):
        self.log = list(log)
        self.pos = 0
        self.calls = 0

    def __call__(self, Q):
        Q = np.atleast_2d(Q)
        rec_q, rec_a = self.log[self.pos]
        if rec_q.shape != Q.shape or not np.array_equal(rec_q, Q):
            raise AssertionError(f"query {self.pos} diverged from the recorded sequence")
        self.pos += 1
        self.calls += len(Q)
        return rec_a


class SamplerKind(str, Enum):
    BS = "BS"
    OB = "OB"
    G = "G"
    BT = "BT"


@dataclass(frozen=True)
class SamplerSpec:
    kind: SamplerKind = SamplerKind.BS
    sigma: float = DEFAULT_SIGMA
    attempts: int = ATTEMPTS_PER_SAMPLE

    def __post_init__(self):
        object.__setattr__(self, "kind", SamplerKind(self.kind))
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.attempts < 1:
            raise ValueError("attempts must be >= 1")


@dataclass
class SampleResult:
    samples: np.ndarray
    attempts: int = 0
    oracle_calls: int = 0
    exhausted: bool = False
    raw: list[np.ndarray] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.samples)


class CSpace:
    """Uniform sampling and normalized-coordinate arithmetic for one (robot, workspace)."""

    def __init__(self, robot: RobotModel, extents):
        self.robot = robot
        self.extents = tuple(extents)
        self.lo, self.hi = robot.bounds(self.extents)
        self.mask = robot.angle_mask
        self.d = robot.dof

    def uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * rng.random((n, self.d))

    def to_norm(self, Q):
        return self.robot.normalize(self.extents, Q)

    def from_norm(self, U):
        # Translations are left unclipped; leaving the workspace is a collision.
        return wrap_config(self.robot.denormalize(self.extents, U), self.mask)

    def midpoint(self, A, B):
        ua = self.to_norm(A)
        ub = self.to_norm(B)
        delta = ub - ua
        # Shortest arc in normalized angle units: wrap to [-1, 1).
        delta[..., self.mask] = np.mod(delta[..., self.mask] + 1.0, 2.0) - 1.0
        return self.from_norm(ua + 0.5 * delta)


def _empty(d: int) -> np.ndarray:
    return np.zeros((0, d))


def _budget(n: int, spec: SamplerSpec) -> int:
    return n * spec.attempts


def _next_batch(n: int, have: int, attempts: int, budget: int) -> int:
    """Draws for the next round, sized from the yield observed so far (first round: n)."""
    need = n - have
    if attempts == 0:
        m = need
    else:
        rate = max(have / attempts, n / budget)
        m = int(np.ceil(1.2 * need / rate))
    return max(1, min(m, budget - attempts))


def sample_uniform(n: int, rng: np.random.Generator, oracle: Callable, cspace: CSpace,
                   spec: SamplerSpec = SamplerSpec(SamplerKind.BS)) -> SampleResult:
    """Uniform draws, keeping the oracle-valid ones until ``n`` are kept or the budget is spent."""
    kept: list[np.ndarray] = []
    have = 0
    attempts = 0
    budget = _budget(n, spec)
    calls0 = oracle.calls
    raw = []
    while have < n and attempts < budget:
        m = _next_batch(n, have, attempts, budget)
        Q = cspace.uniform(rng, m)
        raw.append(Q)
        attempts += m
        ok = oracle(Q)
        kept.append(Q[ok])
        have += int(ok.sum())
    out = np.vstack(kept)[:n] if kept else _empty(cspace.d)
    return SampleResult(out, attempts, oracle.calls - calls0, have < n, raw)


def _unit_directions(rng: np.random.Generator, m: int, d: int) -> np.ndarray:
    v = rng.standard_normal((m, d))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return v / norms


def sample_obstacle_based(n: int, rng: np.random.Generator, oracle: Callable, cspace: CSpace,
                          spec: SamplerSpec = SamplerSpec(SamplerKind.OB)) -> SampleResult:
    """Seed inside an obstacle, march outward along a random direction, then bisect to the boundary."""
    kept: list[np.ndarray] = []
    have = 0
    attempts = 0
    budget = _budget(n, spec)
    calls0 = oracle.calls
    raw = []
    while have < n and attempts < budget:
        m = _next_batch(n, have, attempts, budget)
        Q = cspace.uniform(rng, m)
        raw.append(Q)
        attempts += m
        seeds = Q[~oracle(Q)]
        if len(seeds) == 0:
            continue
        u_in = cspace.to_norm(seeds)
        dirs = _unit_directions(rng, len(seeds), cspace.d)
        # Bracket [lo_t, hi_t] along each ray: lo_t invalid, hi_t valid once found.
        lo_t = np.zeros(len(seeds))
        hi_t = np.full(len(seeds), np.nan)
        active = np.arange(len(seeds))
        for step in range(1, OB_MAX_STEPS + 1):
            if len(active) == 0:
                break
            t = step * OB_STEP
            cand = cspace.from_norm(u_in[active] + t * dirs[active])
            ok = oracle(cand)
            hi_t[active[ok]] = t
            lo_t[active[~ok]] = t
            active = active[~ok]
        found = np.flatnonzero(~np.isnan(hi_t))
        if len(found) == 0:
            continue
        lo = lo_t[found]
        hi = hi_t[found]
        while np.max(hi - lo) > OB_BRACKET:
            mid = 0.5 * (lo + hi)
            ok = oracle(cspace.from_norm(u_in[found] + mid[:, None] * dirs[found]))
            hi = np.where(ok, mid, hi)
            lo = np.where(ok, lo, mid)
        out = cspace.from_norm(u_in[found] + hi[:, None] * dirs[found])
        kept.append(out)
        have += len(out)
    out = np.vstack(kept)[:n] if kept else _empty(cspace.d)
    return SampleResult(out, attempts, oracle.calls - calls0, have < n, raw)


def sample_gaussian(n: int, rng: np.random.Generator, oracle: Callable, cspace: CSpace,
                    spec: SamplerSpec = SamplerSpec(SamplerKind.G)) -> SampleResult:
    """Pairs (q1, q1 + N(0, sigma^2)); keep the valid member when exactly one is valid."""
    kept: list[np.ndarray] = []
    have = 0
    attempts = 0
    budget = _budget(n, spec)
    calls0 = oracle.calls
    raw = []
    while have < n and attempts < budget:
        m = _next_batch(n, have, attempts, budget)
        Q1 = cspace.uniform(rng, m)
        Q2 = cspace.from_norm(cspace.to_norm(Q1) + spec.sigma * rng.standard_normal(Q1.shape))
        raw.append(Q1)
        attempts += m
        ok = oracle(np.vstack([Q1, Q2]))
        ok1, ok2 = ok[:m], ok[m:]
        pick = np.where(ok1[:, None], Q1, Q2)[ok1 ^ ok2]
        kept.append(pick)
        have += len(pick)
    out = np.vstack(kept)[:n] if kept else _empty(cspace.d)
    return SampleResult(out, attempts, oracle.calls - calls0, have < n, raw)


def sample_bridge(n: int, rng: np.random.Generator, oracle: Callable, cspace: CSpace,
                  spec: SamplerSpec = SamplerSpec(SamplerKind.BT)) -> SampleResult:
    """Invalid q1, invalid q2 = q1 + N(0, (2 sigma)^2); keep a valid midpoint."""
    kept: list[np.ndarray] = []
    have = 0
    attempts = 0
    budget = _budget(n, spec)
    calls0 = oracle.calls
    raw = []
    while have < n and attempts < budget:
        m = _next_batch(n, have, attempts, budget)
        Q1 = cspace.uniform(rng, m)
        raw.append(Q1)
        attempts += m
        Q1 = Q1[~oracle(Q1)]
        if len(Q1) == 0:
            continue
        Q2 = cspace.from_norm(cspace.to_norm(Q1) + 2.0 * spec.sigma * rng.standard_normal(Q1.shape))
        bad2 = ~oracle(Q2)
        Q1, Q2 = Q1[bad2], Q2[bad2]
        if len(Q1) == 0:
            continue
        mid = cspace.midpoint(Q1, Q2)
        pick = mid[oracle(mid)]
        kept.append(pick)
        have += len(pick)
    out = np.vstack(kept)[:n] if kept else _empty(cspace.d)
    return SampleResult(out, attempts, oracle.calls - calls0, have < n, raw)


SAMPLERS = {
    SamplerKind.BS: sample_uniform,
    SamplerKind.OB: sample_obstacle_based,
    SamplerKind.G: sample_gaussian,
    SamplerKind.BT: sample_bridge,
}


def run_sampler(spec: SamplerSpec, n: int, rng: np.random.Generator, oracle: Callable,
                cspace: CSpace) -> SampleResult:
    return SAMPLERS[spec.kind](n, rng, oracle, cspace, spec)


__all__ = [
    "CSpace",
    "ExactOracle",
    "MlpOracle",
    "RecordingOracle",
    "ReplayOracle",
    "SampleResult",
    "SamplerKind",
    "SamplerSpec",
    "run_sampler",
    "sample_bridge",
    "sample_gaussian",
    "sample_obstacle_based",
    "sample_uniform",
]
