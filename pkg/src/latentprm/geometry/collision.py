"""Exact collision oracle, straight-line edge validation and C-space metrics."""

from __future__ import annotations

import math

import numpy as np

from .. import kernels
from .robots import RobotModel, wrap_config
from .workspace import Workspace

# Straight-line local planner resolution: per interpolation step, translations
# move at most TRANS_STEP units and angles at most ANGLE_STEP radians, with at
# least MIN_SEGMENTS segments per edge (normalized step <= 0.1).
TRANS_STEP = 0.1
ANGLE_STEP = 0.05
MIN_SEGMENTS = 10


def scene_for(ws: Workspace, backend=None):
    mod = backend or kernels
    key = ("scene", getattr(mod, "__name__", "default"))
    cache = ws._arrays
    if key not in cache:
        lo, hi = ws.obstacle_arrays()
        cache[key] = mod.Scene(lo, hi, ws.extents3(), ws.dim)
    return cache[key]


def collide(robot: RobotModel, q, ws: Workspace, backend=None) -> bool:
    """True iff a link box touches an obstacle or leaves the workspace."""
    mod = backend or kernels
    if robot.dim != ws.dim:
        raise ValueError(f"robot {robot.tag} is {robot.dim}D, workspace is {ws.dim}D")
    return mod.collides(robot.chain(mod), scene_for(ws, mod), np.asarray(q, dtype=float))


def shortest_delta(robot: RobotModel, q1, q2) -> np.ndarray:
    """q2 - q1 with angle components taken along the shorter arc."""
    d = np.asarray(q2, dtype=float) - np.asarray(q1, dtype=float)
    return wrap_config(d, robot.angle_mask)


def interpolate(robot: RobotModel, q1, q2, t: float) -> np.ndarray:
    q1 = np.asarray(q1, dtype=float)
    return wrap_config(q1 + t * shortest_delta(robot, q1, q2), robot.angle_mask)


def edge_steps(robot: RobotModel, q1, q2, resolution_scale: float = 1.0) -> int:
    """Number of interpolation segments for the straight-line check."""
    d = np.abs(shortest_delta(robot, q1, q2))
    res = np.where(robot.angle_mask, ANGLE_STEP, TRANS_STEP) * resolution_scale
    n = int(math.ceil(float(np.max(d / res)))) if d.size else 0
    return max(n, int(math.ceil(MIN_SEGMENTS / resolution_scale)))


def validate_edge(robot: RobotModel, q1, q2, ws: Workspace, resolution_scale: float = 1.0,
                  backend=None) -> bool:
    """Straight-line local planner: every interpolated configuration, endpoints included, is free."""
    mod = backend or kernels
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    if np.array_equal(q1, q2):
        return not collide(robot, q1, ws, mod)
    n = edge_steps(robot, q1, q2, resolution_scale)
    return mod.edge_free(robot.chain(mod), scene_for(ws, mod), q1, q2,
                         robot.angle_mask.astype(np.uint8), n)


def normalized_distance(robot: RobotModel, extents, q1, q2) -> np.ndarray:
    """Euclidean distance over normalized DoF with shortest-arc angles; broadcasts over rows."""
    d = shortest_delta(robot, q1, q2)
    lo, hi = robot.bounds(extents)
    scale = np.where(robot.angle_mask, 1.0 / math.pi, 2.0 / (hi - lo))
    return np.sqrt(np.sum((d * scale) ** 2, axis=-1))
