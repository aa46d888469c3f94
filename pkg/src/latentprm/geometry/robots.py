"""Robot models as serial chains of box links, and forward kinematics.

Every link is a box whose frame sits at its joint. Link frames compose as
``R_link = R_parent @ fixed_rot @ Rot(axis, q[dof])`` with the frame origin at
``origin`` expressed in the parent frame. The base frame is a translation
followed by an intrinsic Z-Y-X rotation ``Rz(alpha) @ Ry(beta) @ Rx(gamma)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .. import kernels

X_AXIS = (1.0, 0.0, 0.0)
Y_AXIS = (0.0, 1.0, 0.0)
Z_AXIS = (0.0, 0.0, 1.0)
IDENTITY = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
# Ry(-pi/2): maps local +x onto world +z.
POINT_UP = ((0.0, 0.0, -1.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0))

BIG_LINK = (0.4, 0.1, 0.1)
SMALL_LINK = (0.1, 0.1, 0.1)


@dataclass(frozen=True)
class LinkSpec:
    dims: tuple[float, float, float]
    parent: int = -1
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    fixed_rot: tuple = IDENTITY
    axis: tuple[float, float, float] = Z_AXIS
    dof_index: int = -1
    box_center: tuple[float, float, float] | None = None

    @property
    def half(self) -> tuple[float, float, float]:
        return tuple(0.5 * d for d in self.dims)

    @property
    def center(self) -> tuple[float, float, float]:
        # Default: the box extends along local +x from the joint.
        if self.box_center is not None:
            return self.box_center
        return (0.5 * self.dims[0], 0.0, 0.0)


@dataclass(frozen=True)
class OrientedBox:
    center: np.ndarray
    half: np.ndarray
    rotation: np.ndarray

    def corners(self) -> np.ndarray:
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float)
        return self.center + (signs * self.half) @ self.rotation.T

    def long_axis(self) -> np.ndarray:
        return self.rotation[:, int(np.argmax(self.half))]


@dataclass(frozen=True)
class RobotModel:
    tag: str
    kind: str
    dim: int
    links: tuple[LinkSpec, ...]
    # Config index for base x, y, z translation (-1: fixed at base_fixed).
    trans_idx: tuple[int, int, int]
    base_fixed: tuple[float, float, float] = (0.0, 0.0, 0.0)
    # Config index for base alpha, beta, gamma (-1: zero).
    rot_idx: tuple[int, int, int] = (-1, -1, -1)
    _chains: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __getstate__(self):
        # Compiled chain caches are process-local and not picklable.
        return {k: v for k, v in self.__dict__.items() if k != "_chains"}

    def __setstate__(self, state):
        self.__dict__.update(state)
        object.__setattr__(self, "_chains", {})

    @cached_property
    def dof(self) -> int:
        idx = [i for i in self.trans_idx + self.rot_idx if i >= 0]
        idx += [ln.dof_index for ln in self.links if ln.dof_index >= 0]
        return len(idx)

    @cached_property
    def angle_mask(self) -> np.ndarray:
        mask = np.zeros(self.dof, dtype=bool)
        for i in self.rot_idx:
            if i >= 0:
                mask[i] = True
        for ln in self.links:
            if ln.dof_index >= 0:
                mask[ln.dof_index] = True
        mask.flags.writeable = False
        return mask

    @cached_property
    def trans_axes(self) -> dict[int, int]:
        """Config index -> workspace axis for translation DoFs."""
        return {i: k for k, i in enumerate(self.trans_idx) if i >= 0}

    @property
    def joint_count(self) -> int:
        return sum(1 for ln in self.links if ln.dof_index >= 0)

    def chain(self, backend=None):
        mod = backend or kernels
        key = getattr(mod, "__name__", "default")
        if key not in self._chains:
            L = self.links
            self._chains[key] = mod.Chain(
                [ln.parent for ln in L],
                np.array([ln.origin for ln in L], dtype=float),
                np.array([ln.fixed_rot for ln in L], dtype=float),
                np.array([ln.axis for ln in L], dtype=float),
                [ln.dof_index for ln in L],
                np.array([ln.center for ln in L], dtype=float),
                np.array([ln.half for ln in L], dtype=float),
                self.trans_idx,
                self.base_fixed,
                self.rot_idx,
            )
        return self._chains[key]

    def bounds(self, extents) -> tuple[np.ndarray, np.ndarray]:
        """Sampling ranges per DoF: [0, extent] for translations, [-pi, pi) for angles."""
        lo = np.full(self.dof, -math.pi)
        hi = np.full(self.dof, math.pi)
        for i, k in self.trans_axes.items():
            lo[i] = 0.0
            hi[i] = float(extents[k])
        return lo, hi

    def config(self, values) -> np.ndarray:
        """Validate length and wrap angle DoFs to [-pi, pi)."""
        q = np.array(values, dtype=float).reshape(-1)
        if q.size != self.dof:
            raise ValueError(f"{self.tag} expects {self.dof} DoF, got {q.size}")
        return wrap_config(q, self.angle_mask)

    def normalize(self, extents, q) -> np.ndarray:
        """Translations affinely [0, extent] -> [-1, 1]; angles divided by pi. Works on (d,) or (n, d)."""
        q = np.asarray(q, dtype=float)
        lo, hi = self.bounds(extents)
        scale, shift = _norm_coeffs(self, lo, hi)
        return q * scale + shift

    def norm_coeffs(self, extents) -> tuple[np.ndarray, np.ndarray]:
        """(scale, shift) with normalize(q) = q * scale + shift."""
        lo, hi = self.bounds(extents)
        return _norm_coeffs(self, lo, hi)

    def denormalize(self, extents, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        lo, hi = self.bounds(extents)
        scale, shift = _norm_coeffs(self, lo, hi)
        return (u - shift) / scale


def _norm_coeffs(robot: RobotModel, lo, hi):
    scale = np.where(robot.angle_mask, 1.0 / math.pi, 2.0 / (hi - lo))
    shift = np.where(robot.angle_mask, 0.0, -1.0 - 2.0 * lo / (hi - lo))
    return scale, shift


def wrap_config(q: np.ndarray, angle_mask: np.ndarray) -> np.ndarray:
    """Wrap the masked entries of ``q`` (any leading shape) to [-pi, pi)."""
    q = np.array(q, dtype=float, copy=True)
    w = np.mod(q[..., angle_mask] + math.pi, 2.0 * math.pi) - math.pi
    q[..., angle_mask] = w
    return q


def point2d() -> RobotModel:
    return RobotModel(
        tag="point2d",
        kind="Point2D",
        dim=2,
        links=(LinkSpec((0.5, 0.5, 0.5), box_center=(0.0, 0.0, 0.0)),),
        trans_idx=(0, 1, -1),
    )


def boxchain7() -> RobotModel:
    """Two big links joined by one pitch joint; q = (x, y, z, alpha, beta, gamma, j1)."""
    return RobotModel(
        tag="boxchain7",
        kind="BoxChain",
        dim=3,
        links=(
            LinkSpec(BIG_LINK),
            LinkSpec(BIG_LINK, parent=0, origin=(0.4, 0.0, 0.0), axis=Y_AXIS, dof_index=6),
        ),
        trans_idx=(0, 1, 2),
        rot_idx=(3, 4, 5),
    )


def boxchain9() -> RobotModel:
    """Big-small-big-small chain, joints (pitch, yaw, pitch); q = (x, y, z, alpha, beta, gamma, j1, j2, j3)."""
    return RobotModel(
        tag="boxchain9",
        kind="BoxChain",
        dim=3,
        links=(
            LinkSpec(BIG_LINK),
            LinkSpec(SMALL_LINK, parent=0, origin=(0.4, 0.0, 0.0), axis=Y_AXIS, dof_index=6),
            LinkSpec(BIG_LINK, parent=1, origin=(0.1, 0.0, 0.0), axis=Z_AXIS, dof_index=7),
            LinkSpec(SMALL_LINK, parent=2, origin=(0.4, 0.0, 0.0), axis=Y_AXIS, dof_index=8),
        ),
        trans_idx=(0, 1, 2),
        rot_idx=(3, 4, 5),
    )


def boxchain8() -> RobotModel:
    """Office robot: mobile base (x, y, yaw) carrying a 5-link arm; q = (x, y, yaw, j1..j5).

    The arm is mounted on top of the base pointing up; joints alternate between
    the link's long axis (yaw of the upright arm) and its pitch axis.
    """
    arm = (0.4, 0.15, 0.15)
    links = [LinkSpec((1.5, 1.0, 0.5), box_center=(0.0, 0.0, 0.0))]
    axes = (X_AXIS, Y_AXIS, X_AXIS, Y_AXIS, X_AXIS)
    for j, ax in enumerate(axes):
        if j == 0:
            links.append(LinkSpec(arm, parent=0, origin=(0.0, 0.0, 0.25), fixed_rot=POINT_UP,
                                  axis=ax, dof_index=3))
        else:
            links.append(LinkSpec(arm, parent=j, origin=(0.4, 0.0, 0.0), axis=ax, dof_index=3 + j))
    return RobotModel(
        tag="boxchain8",
        kind="BoxChain",
        dim=3,
        links=tuple(links),
        trans_idx=(0, 1, -1),
        base_fixed=(0.0, 0.0, 0.25),
        rot_idx=(2, -1, -1),
    )


ROBOTS = {"point2d": point2d, "boxchain7": boxchain7, "boxchain9": boxchain9, "boxchain8": boxchain8}


def get_robot(tag: str) -> RobotModel:
    try:
        return ROBOTS[tag.lower()]()
    except KeyError:
        raise ValueError(f"unknown robot tag {tag!r}; expected one of {sorted(ROBOTS)}") from None


def forward_kinematics(robot: RobotModel, q) -> list[OrientedBox]:
    """One world-frame OrientedBox per link."""
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.size != robot.dof:
        raise ValueError(f"{robot.tag} expects {robot.dof} DoF, got {q.size}")
    centers, rots = kernels.fk(robot.chain(), q)
    return [
        OrientedBox(centers[i].copy(), np.array(ln.half, dtype=float), rots[i].copy())
        for i, ln in enumerate(robot.links)
    ]
