"""Pure-Python collision kernels.

Mirror of ``_ckernels.pyx``. Used when the compiled extension is missing or
when ``LATENTPRM_PURE_PYTHON=1`` is set. Both backends must agree bit-for-bit
on boolean results; tests run the same cases through each.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi
# Guards cross-product axes against near-parallel edge pairs.
SAT_EPS = 1e-12


def wrap_angle(a: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    a = math.fmod(a + math.pi, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    return a - math.pi


def _axis_rot(ax, ay, az, theta):
    c = math.cos(theta)
    s = math.sin(theta)
    t = 1.0 - c
    return (
        (t * ax * ax + c, t * ax * ay - s * az, t * ax * az + s * ay),
        (t * ax * ay + s * az, t * ay * ay + c, t * ay * az - s * ax),
        (t * ax * az - s * ay, t * ay * az + s * ax, t * az * az + c),
    )


def _matmul(A, B):
    return tuple(
        tuple(A[i][0] * B[0][j] + A[i][1] * B[1][j] + A[i][2] * B[2][j] for j in range(3))
        for i in range(3)
    )


def _matvec(A, v):
    return (
        A[0][0] * v[0] + A[0][1] * v[1] + A[0][2] * v[2],
        A[1][0] * v[0] + A[1][1] * v[1] + A[1][2] * v[2],
        A[2][0] * v[0] + A[2][1] * v[1] + A[2][2] * v[2],
    )


def zyx_euler(alpha: float, beta: float, gamma: float):
    """Rz(alpha) @ Ry(beta) @ Rx(gamma) as nested tuples."""
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    cg, sg = math.cos(gamma), math.sin(gamma)
    return (
        (ca * cb, ca * sb * sg - sa * cg, ca * sb * cg + sa * sg),
        (sa * cb, sa * sb * sg + ca * cg, sa * sb * cg - ca * sg),
        (-sb, cb * sg, cb * cg),
    )


def _tuple3x3(a) -> tuple:
    return tuple(tuple(float(x) for x in row) for row in a)


class Chain:
    """Serial chain of box links in a flat-array layout shared by both backends."""

    def __init__(self, parent, origin, fixed_rot, axis, dof_index, box_center, half,
                 trans_idx, base_fixed, rot_idx):
        self.n_links = len(parent)
        self.parent = [int(p) for p in parent]
        self.origin = [tuple(float(x) for x in o) for o in np.asarray(origin, dtype=float)]
        self.fixed_rot = [_tuple3x3(r) for r in np.asarray(fixed_rot, dtype=float)]
        self.axis = [tuple(float(x) for x in a) for a in np.asarray(axis, dtype=float)]
        self.dof_index = [int(i) for i in dof_index]
        self.box_center = [tuple(float(x) for x in c) for c in np.asarray(box_center, dtype=float)]
        self.half = [tuple(float(x) for x in h) for h in np.asarray(half, dtype=float)]
        self.trans_idx = [int(i) for i in trans_idx]
        self.base_fixed = [float(x) for x in base_fixed]
        self.rot_idx = [int(i) for i in rot_idx]


class Scene:
    """Obstacle AABBs plus workspace extents; ``dim`` is 2 or 3."""

    def __init__(self, obs_min, obs_max, extents, dim):
        self.dim = int(dim)
        self.obs_min = [tuple(float(x) for x in m) for m in np.asarray(obs_min, dtype=float).reshape(-1, 3)]
        self.obs_max = [tuple(float(x) for x in m) for m in np.asarray(obs_max, dtype=float).reshape(-1, 3)]
        self.extents = tuple(float(x) for x in extents)
        self.n_obs = len(self.obs_min)


def _fk_lists(chain: Chain, q):
    base_p = [0.0, 0.0, 0.0]
    for k in range(3):
        i = chain.trans_idx[k]
        base_p[k] = q[i] if i >= 0 else chain.base_fixed[k]
    angles = [q[i] if i >= 0 else 0.0 for i in chain.rot_idx]
    base_R = zyx_euler(angles[0], angles[1], angles[2])
    frames_p = []
    frames_R = []
    centers = []
    rots = []
    for li in range(chain.n_links):
        par = chain.parent[li]
        if par < 0:
            pp, pR = tuple(base_p), base_R
        else:
            pp, pR = frames_p[par], frames_R[par]
        off = _matvec(pR, chain.origin[li])
        p = (pp[0] + off[0], pp[1] + off[1], pp[2] + off[2])
        R = _matmul(pR, chain.fixed_rot[li])
        di = chain.dof_index[li]
        if di >= 0:
            ax = chain.axis[li]
            R = _matmul(R, _axis_rot(ax[0], ax[1], ax[2], q[di]))
        frames_p.append(p)
        frames_R.append(R)
        c = _matvec(R, chain.box_center[li])
        centers.append((p[0] + c[0], p[1] + c[1], p[2] + c[2]))
        rots.append(R)
    return centers, rots


def fk(chain: Chain, q):
    """World-frame link box centers (L,3) and rotations (L,3,3)."""
    centers, rots = _fk_lists(chain, [float(x) for x in q])
    return np.array(centers, dtype=float), np.array(rots, dtype=float)


def _obb_aabb_overlap(c, R, h, bmin, bmax, dim):
    # Closed boxes: a separating axis needs strict inequality.
    a = (0.5 * (bmin[0] + bmax[0]), 0.5 * (bmin[1] + bmax[1]), 0.5 * (bmin[2] + bmax[2]))
    ea = (0.5 * (bmax[0] - bmin[0]), 0.5 * (bmax[1] - bmin[1]), 0.5 * (bmax[2] - bmin[2]))
    t = (c[0] - a[0], c[1] - a[1], c[2] - a[2])
    if dim == 2:
        r00, r01 = abs(R[0][0]), abs(R[0][1])
        r10, r11 = abs(R[1][0]), abs(R[1][1])
        if abs(t[0]) > ea[0] + r00 * h[0] + r01 * h[1]:
            return False
        if abs(t[1]) > ea[1] + r10 * h[0] + r11 * h[1]:
            return False
        for j in range(2):
            tb = t[0] * R[0][j] + t[1] * R[1][j]
            if abs(tb) > h[j] + abs(R[0][j]) * ea[0] + abs(R[1][j]) * ea[1]:
                return False
        return True
    AR = [[abs(R[i][j]) + SAT_EPS for j in range(3)] for i in range(3)]
    for i in range(3):
        if abs(t[i]) > ea[i] + AR[i][0] * h[0] + AR[i][1] * h[1] + AR[i][2] * h[2]:
            return False
    for j in range(3):
        tb = t[0] * R[0][j] + t[1] * R[1][j] + t[2] * R[2][j]
        if abs(tb) > h[j] + AR[0][j] * ea[0] + AR[1][j] * ea[1] + AR[2][j] * ea[2]:
            return False
    # Axes e_i x b_j; R[i][j] is the component of b_j along e_i.
    for i in range(3):
        i1 = (i + 1) % 3
        i2 = (i + 2) % 3
        for j in range(3):
            j1 = (j + 1) % 3
            j2 = (j + 2) % 3
            ra = ea[i1] * AR[i2][j] + ea[i2] * AR[i1][j]
            rb = h[j1] * AR[i][j2] + h[j2] * AR[i][j1]
            d = t[i2] * R[i1][j] - t[i1] * R[i2][j]
            if abs(d) > ra + rb:
                return False
    return True


def obb_aabb_overlap(center, rot, half, bmin, bmax, dim) -> bool:
    """Separating-axis test between one oriented box and one axis-aligned box."""
    return _obb_aabb_overlap(
        tuple(float(x) for x in center), _tuple3x3(rot), tuple(float(x) for x in half),
        tuple(float(x) for x in bmin), tuple(float(x) for x in bmax), int(dim),
    )


def _boxes_collide(scene: Scene, centers, rots, halves) -> bool:
    dim = scene.dim
    ext = scene.extents
    for c, R, h in zip(centers, rots, halves):
        for k in range(dim):
            r = abs(R[k][0]) * h[0] + abs(R[k][1]) * h[1]
            if dim == 3:
                r += abs(R[k][2]) * h[2]
            if c[k] - r < 0.0 or c[k] + r > ext[k]:
                return True
        for m in range(scene.n_obs):
            if _obb_aabb_overlap(c, R, h, scene.obs_min[m], scene.obs_max[m], dim):
                return True
    return False


def collides(chain: Chain, scene: Scene, q) -> bool:
    """Exact collision test for one configuration (obstacles or out of bounds)."""
    centers, rots = _fk_lists(chain, [float(x) for x in q])
    return _boxes_collide(scene, centers, rots, chain.half)


def edge_free(chain: Chain, scene: Scene, q1, q2, angle_mask, nsteps: int) -> bool:
    """True iff every one of ``nsteps + 1`` interpolated configurations is free."""
    a = [float(x) for x in q1]
    b = [float(x) for x in q2]
    d = len(a)
    delta = [0.0] * d
    for i in range(d):
        delta[i] = wrap_angle(b[i] - a[i]) if angle_mask[i] else b[i] - a[i]
    n = max(int(nsteps), 1)
    for s in range(n + 1):
        t = s / n
        q = [0.0] * d
        for i in range(d):
            v = a[i] + t * delta[i]
            q[i] = wrap_angle(v) if angle_mask[i] else v
        if s == n:
            q = b
        centers, rots = _fk_lists(chain, q)
        if _boxes_collide(scene, centers, rots, chain.half):
            return False
    return True


def gate_eval(Q, params, shapes, slopes, acts, tidx, lo, hi):
    """Row-wise dense PReLU stack ending in a logit-difference head; True = predicted valid."""
    Q = np.asarray(Q, dtype=float)
    x = Q
    off = 0
    for (fan_in, fan_out), a, act in zip(np.asarray(shapes), slopes, acts):
        W = params[off: off + fan_in * fan_out].reshape(fan_in, fan_out)
        b = params[off + fan_in * fan_out: off + fan_in * fan_out + fan_out]
        x = x @ W + b
        if act:
            x = np.where(x > 0, x, a * x)
        off += fan_in * fan_out + fan_out
    width = x.shape[1]
    score = x @ params[off: off + width] + params[off + width]
    T = Q[:, np.asarray(tidx, dtype=np.intp)]
    inside = ((T >= lo) & (T <= hi)).all(axis=1)
    return (score >= 0) & inside
