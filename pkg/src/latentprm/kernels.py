"""Backend selection for the collision and gate kernels.

The compiled extension is used when it imports cleanly; otherwise the
pure-Python mirror takes over. Set ``LATENTPRM_PURE_PYTHON=1`` to force the
fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("LATENTPRM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _pykernels

Chain = _impl.Chain
Scene = _impl.Scene
fk = _impl.fk
collides = _impl.collides
edge_free = _impl.edge_free
obb_aabb_overlap = _impl.obb_aabb_overlap
wrap_angle = _impl.wrap_angle

# Above this many row-weight products numpy's BLAS beats the compiled loop.
_GATE_BLAS_WORK = 200_000


def gate_eval(Q, params, shapes, slopes, acts, tidx, lo, hi):
    """Evaluate the folded gate on a batch; large batches go through numpy matmul."""
    if len(Q) * len(params) >= _GATE_BLAS_WORK:
        return _pykernels.gate_eval(Q, params, shapes, slopes, acts, tidx, lo, hi)
    return _impl.gate_eval(Q, params, shapes, slopes, acts, tidx, lo, hi)


def backend_module(name: str):
    """Return a specific backend module ('python' or 'cython') regardless of the default."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
