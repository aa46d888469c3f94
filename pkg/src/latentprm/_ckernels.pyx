# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled collision kernels. Same API and arithmetic order as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, fabs, fmod, M_PI

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI
cdef double SAT_EPS = 1e-12
cdef int MAX_LINKS = 16


cdef inline double _wrap(double a) noexcept nogil:
    a = fmod(a + M_PI, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    return a - M_PI


def wrap_angle(double a):
    """Wrap an angle to [-pi, pi)."""
    return _wrap(a)


cdef inline void _axis_rot(double ax, double ay, double az, double theta, double* M) noexcept nogil:
    cdef double c = cos(theta)
    cdef double s = sin(theta)
    cdef double t = 1.0 - c
    M[0] = t * ax * ax + c
    M[1] = t * ax * ay - s * az
    M[2] = t * ax * az + s * ay
    M[3] = t * ax * ay + s * az
    M[4] = t * ay * ay + c
    M[5] = t * ay * az - s * ax
    M[6] = t * ax * az - s * ay
    M[7] = t * ay * az + s * ax
    M[8] = t * az * az + c


cdef inline void _matmul(const double* A, const double* B, double* C) noexcept nogil:
    cdef int i, j
    for i in range(3):
        for j in range(3):
            C[3 * i + j] = A[3 * i] * B[j] + A[3 * i + 1] * B[3 + j] + A[3 * i + 2] * B[6 + j]


cdef inline void _matvec(const double* A, const double* v, double* out) noexcept nogil:
    out[0] = A[0] * v[0] + A[1] * v[1] + A[2] * v[2]
    out[1] = A[3] * v[0] + A[4] * v[1] + A[5] * v[2]
    out[2] = A[6] * v[0] + A[7] * v[1] + A[8] * v[2]


cdef inline void _zyx(double alpha, double beta, double gamma, double* M) noexcept nogil:
    cdef double ca = cos(alpha)
    cdef double sa = sin(alpha)
    cdef double cb = cos(beta)
    cdef double sb = sin(beta)
    cdef double cg = cos(gamma)
    cdef double sg = sin(gamma)
    M[0] = ca * cb
    M[1] = ca * sb * sg - sa * cg
    M[2] = ca * sb * cg + sa * sg
    M[3] = sa * cb
    M[4] = sa * sb * sg + ca * cg
    M[5] = sa * sb * cg - ca * sg
    M[6] = -sb
    M[7] = cb * sg
    M[8] = cb * cg


cdef class Chain:
    """Serial chain of box links in a flat-array layout shared by both backends."""
    cdef public int n_links
    cdef int[::1] parent
    cdef double[:, ::1] origin
    cdef double[:, ::1] fixed_rot
    cdef double[:, ::1] axis
    cdef int[::1] dof_index
    cdef double[:, ::1] box_center
    cdef double[:, ::1] half
    cdef int trans_idx[3]
    cdef double base_fixed[3]
    cdef int rot_idx[3]

    def __init__(self, parent, origin, fixed_rot, axis, dof_index, box_center, half,
                 trans_idx, base_fixed, rot_idx):
        self.n_links = len(parent)
        if self.n_links > MAX_LINKS:
            raise ValueError("too many links")
        self.parent = np.array(parent, dtype=np.int32)
        self.origin = np.array(origin, dtype=np.float64, order='C').reshape(-1, 3)
        self.fixed_rot = np.array(fixed_rot, dtype=np.float64, order='C').reshape(-1, 9)
        self.axis = np.array(axis, dtype=np.float64, order='C').reshape(-1, 3)
        self.dof_index = np.array(dof_index, dtype=np.int32)
        self.box_center = np.array(box_center, dtype=np.float64, order='C').reshape(-1, 3)
        self.half = np.array(half, dtype=np.float64, order='C').reshape(-1, 3)
        for k in range(3):
            self.trans_idx[k] = int(trans_idx[k])
            self.base_fixed[k] = float(base_fixed[k])
            self.rot_idx[k] = int(rot_idx[k])


cdef class Scene:
    """Obstacle AABBs plus workspace extents; ``dim`` is 2 or 3."""
    cdef public int dim
    cdef public int n_obs
    cdef double[:, ::1] obs_min
    cdef double[:, ::1] obs_max
    cdef double extents[3]

    def __init__(self, obs_min, obs_max, extents, dim):
        self.dim = int(dim)
        self.obs_min = np.array(obs_min, dtype=np.float64, order='C').reshape(-1, 3)
        self.obs_max = np.array(obs_max, dtype=np.float64, order='C').reshape(-1, 3)
        self.n_obs = self.obs_min.shape[0]
        for k in range(3):
            self.extents[k] = float(extents[k])


cdef void _fk(Chain chain, const double* q, double* centers, double* rots) noexcept nogil:
    cdef double base_p[3]
    cdef double base_R[9]
    cdef double ang[3]
    cdef double frames_p[16 * 3]
    cdef double frames_R[16 * 9]
    cdef double tmp[9]
    cdef double jr[9]
    cdef double off[3]
    cdef double c[3]
    cdef const double* pp
    cdef const double* pR
    cdef double* R
    cdef double* p
    cdef int k, li, par, di
    for k in range(3):
        if chain.trans_idx[k] >= 0:
            base_p[k] = q[chain.trans_idx[k]]
        else:
            base_p[k] = chain.base_fixed[k]
        if chain.rot_idx[k] >= 0:
            ang[k] = q[chain.rot_idx[k]]
        else:
            ang[k] = 0.0
    _zyx(ang[0], ang[1], ang[2], base_R)
    for li in range(chain.n_links):
        par = chain.parent[li]
        if par < 0:
            pp = base_p
            pR = base_R
        else:
            pp = &frames_p[3 * par]
            pR = &frames_R[9 * par]
        _matvec(pR, &chain.origin[li, 0], off)
        p = &frames_p[3 * li]
        p[0] = pp[0] + off[0]
        p[1] = pp[1] + off[1]
        p[2] = pp[2] + off[2]
        R = &frames_R[9 * li]
        di = chain.dof_index[li]
        if di >= 0:
            _matmul(pR, &chain.fixed_rot[li, 0], tmp)
            _axis_rot(chain.axis[li, 0], chain.axis[li, 1], chain.axis[li, 2], q[di], jr)
            _matmul(tmp, jr, R)
        else:
            _matmul(pR, &chain.fixed_rot[li, 0], R)
        _matvec(R, &chain.box_center[li, 0], c)
        centers[3 * li] = p[0] + c[0]
        centers[3 * li + 1] = p[1] + c[1]
        centers[3 * li + 2] = p[2] + c[2]
        for k in range(9):
            rots[9 * li + k] = R[k]


def fk(Chain chain, q):
    """World-frame link box centers (L,3) and rotations (L,3,3)."""
    cdef const double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    centers = np.empty((chain.n_links, 3), dtype=np.float64)
    rots = np.empty((chain.n_links, 3, 3), dtype=np.float64)
    cdef double[:, ::1] cv = centers
    cdef double[:, :, ::1] rv = rots
    _fk(chain, &qv[0], &cv[0, 0], &rv[0, 0, 0])
    return centers, rots


cdef bint _obb_aabb_overlap(const double* c, const double* R, const double* h,
                            const double* bmin, const double* bmax, int dim) noexcept nogil:
    cdef double a[3]
    cdef double ea[3]
    cdef double t[3]
    cdef double AR[9]
    cdef double tb, ra, rb, d
    cdef int i, j, i1, i2, j1, j2
    for i in range(3):
        a[i] = 0.5 * (bmin[i] + bmax[i])
        ea[i] = 0.5 * (bmax[i] - bmin[i])
        t[i] = c[i] - a[i]
    if dim == 2:
        if fabs(t[0]) > ea[0] + fabs(R[0]) * h[0] + fabs(R[1]) * h[1]:
            return False
        if fabs(t[1]) > ea[1] + fabs(R[3]) * h[0] + fabs(R[4]) * h[1]:
            return False
        for j in range(2):
            tb = t[0] * R[j] + t[1] * R[3 + j]
            if fabs(tb) > h[j] + fabs(R[j]) * ea[0] + fabs(R[3 + j]) * ea[1]:
                return False
        return True
    for i in range(9):
        AR[i] = fabs(R[i]) + SAT_EPS
    for i in range(3):
        if fabs(t[i]) > ea[i] + AR[3 * i] * h[0] + AR[3 * i + 1] * h[1] + AR[3 * i + 2] * h[2]:
            return False
    for j in range(3):
        tb = t[0] * R[j] + t[1] * R[3 + j] + t[2] * R[6 + j]
        if fabs(tb) > h[j] + AR[j] * ea[0] + AR[3 + j] * ea[1] + AR[6 + j] * ea[2]:
            return False
    for i in range(3):
        i1 = (i + 1) % 3
        i2 = (i + 2) % 3
        for j in range(3):
            j1 = (j + 1) % 3
            j2 = (j + 2) % 3
            ra = ea[i1] * AR[3 * i2 + j] + ea[i2] * AR[3 * i1 + j]
            rb = h[j1] * AR[3 * i + j2] + h[j2] * AR[3 * i + j1]
            d = t[i2] * R[3 * i1 + j] - t[i1] * R[3 * i2 + j]
            if fabs(d) > ra + rb:
                return False
    return True


def obb_aabb_overlap(center, rot, half, bmin, bmax, int dim):
    """Separating-axis test between one oriented box and one axis-aligned box."""
    cdef const double[::1] c = np.ascontiguousarray(center, dtype=np.float64)
    cdef const double[::1] R = np.ascontiguousarray(rot, dtype=np.float64).reshape(9)
    cdef double[::1] h = np.array(half, dtype=np.float64, order='C')
    cdef const double[::1] lo = np.ascontiguousarray(bmin, dtype=np.float64)
    cdef const double[::1] hi = np.ascontiguousarray(bmax, dtype=np.float64)
    return bool(_obb_aabb_overlap(&c[0], &R[0], &h[0], &lo[0], &hi[0], dim))


cdef bint _boxes_collide(Scene scene, Chain chain, const double* centers,
                         const double* rots) noexcept nogil:
    cdef int li, k, m
    cdef const double* c
    cdef const double* R
    cdef const double* h
    cdef double r
    cdef int dim = scene.dim
    for li in range(chain.n_links):
        c = &centers[3 * li]
        R = &rots[9 * li]
        h = &chain.half[li, 0]
        for k in range(dim):
            r = fabs(R[3 * k]) * h[0] + fabs(R[3 * k + 1]) * h[1]
            if dim == 3:
                r += fabs(R[3 * k + 2]) * h[2]
            if c[k] - r < 0.0 or c[k] + r > scene.extents[k]:
                return True
        for m in range(scene.n_obs):
            if _obb_aabb_overlap(c, R, h, &scene.obs_min[m, 0], &scene.obs_max[m, 0], dim):
                return True
    return False


def collides(Chain chain, Scene scene, q):
    """Exact collision test for one configuration (obstacles or out of bounds)."""
    cdef const double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double centers[16 * 3]
    cdef double rots[16 * 9]
    _fk(chain, &qv[0], centers, rots)
    return bool(_boxes_collide(scene, chain, centers, rots))


def edge_free(Chain chain, Scene scene, q1, q2, angle_mask, int nsteps):
    """True iff every one of ``nsteps + 1`` interpolated configurations is free."""
    cdef const double[::1] a = np.ascontiguousarray(q1, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(q2, dtype=np.float64)
    cdef const unsigned char[::1] am = np.ascontiguousarray(angle_mask, dtype=np.uint8)
    cdef int d = a.shape[0]
    cdef int n = nsteps if nsteps > 1 else 1
    cdef double[::1] delta = np.empty(d, dtype=np.float64)
    cdef double[::1] q = np.empty(d, dtype=np.float64)
    cdef double centers[16 * 3]
    cdef double rots[16 * 9]
    cdef int i, s
    cdef double t, v
    cdef bint free = True
    with nogil:
        for i in range(d):
            if am[i]:
                delta[i] = _wrap(b[i] - a[i])
            else:
                delta[i] = b[i] - a[i]
        for s in range(n + 1):
            t = (<double>s) / n
            for i in range(d):
                if s == n:
                    q[i] = b[i]
                else:
                    v = a[i] + t * delta[i]
                    q[i] = _wrap(v) if am[i] else v
            _fk(chain, &q[0], centers, rots)
            if _boxes_collide(scene, chain, centers, rots):
                free = False
                break
    return bool(free)


DEF MAX_WIDTH = 1024


def gate_eval(const double[:, ::1] Q, const double[::1] params, const long long[:, ::1] shapes,
              const double[::1] slopes, const int[::1] acts, const long long[::1] tidx,
              const double[::1] lo, const double[::1] hi):
    """Row-wise dense PReLU stack ending in a logit-difference head; True = predicted valid."""
    cdef Py_ssize_t n = Q.shape[0]
    cdef Py_ssize_t L = shapes.shape[0]
    cdef Py_ssize_t nt = tidx.shape[0]
    cdef Py_ssize_t r, l, i, j, off, fan_in, fan_out
    cdef double a0[MAX_WIDTH]
    cdef double a1[MAX_WIDTH]
    cdef double* x
    cdef double* y
    cdef double* t
    cdef double acc, v, slope
    cdef bint inside
    for l in range(L):
        if shapes[l, 0] > MAX_WIDTH or shapes[l, 1] > MAX_WIDTH:
            raise ValueError("layer wider than the compiled gate supports")
    out = np.zeros(n, dtype=np.bool_)
    cdef cnp.npy_bool[::1] res = out
    with nogil:
        for r in range(n):
            inside = True
            for i in range(nt):
                v = Q[r, tidx[i]]
                if v < lo[i] or v > hi[i]:
                    inside = False
                    break
            if not inside:
                continue
            x = a0
            y = a1
            for i in range(shapes[0, 0]):
                x[i] = Q[r, i]
            off = 0
            for l in range(L):
                fan_in = shapes[l, 0]
                fan_out = shapes[l, 1]
                slope = slopes[l]
                for j in range(fan_out):
                    y[j] = params[off + fan_in * fan_out + j]
                for i in range(fan_in):
                    v = x[i]
                    for j in range(fan_out):
                        y[j] += v * params[off + i * fan_out + j]
                if acts[l]:
                    for j in range(fan_out):
                        if not y[j] > 0.0:
                            y[j] = slope * y[j]
                off += fan_in * fan_out + fan_out
                t = x
                x = y
                y = t
            acc = params[off + shapes[L - 1, 1]]
            for j in range(shapes[L - 1, 1]):
                acc += x[j] * params[off + j]
            res[r] = acc >= 0.0
    return out
