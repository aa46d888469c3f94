"""Occupancy grids: rasterization and the binary grid format."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .workspace import Workspace

GRID_MAGIC = b"LPGRID1\n"
ORDER_TAG = "x-fastest"


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """Cell values in {-1, +1}; flat index = x + n * (y + m * z)."""

    dims: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32).reshape(-1)
        if v.size != int(np.prod(self.dims)):
            raise ValueError(f"grid has {v.size} values, dims {self.dims} need {int(np.prod(self.dims))}")
        if not np.all((v == 1.0) | (v == -1.0)):
            raise ValueError("grid values must be exactly -1 or +1")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __eq__(self, other):
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.values, other.values)

    @property
    def size(self) -> int:
        return self.values.size

    def at(self, *idx: int) -> float:
        flat, stride = 0, 1
        for i, n in zip(idx, self.dims):
            flat += i * stride
            stride *= n
        return float(self.values[flat])

    def as_array(self) -> np.ndarray:
        """Values reshaped to (z, y, x) / (y, x) so C-order flattening is x-fastest."""
        return self.values.reshape(tuple(reversed(self.dims)))

    def to_bytes(self) -> bytes:
        header = json.dumps({"dims": list(self.dims), "order": ORDER_TAG, "dtype": "<f4", "version": 1},
                            sort_keys=True).encode()
        return GRID_MAGIC + len(header).to_bytes(4, "little") + header + self.values.astype("<f4").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "OccupancyGrid":
        if not blob.startswith(GRID_MAGIC):
            raise ValueError("not an occupancy grid file")
        off = len(GRID_MAGIC)
        hlen = int.from_bytes(blob[off: off + 4], "little")
        header = json.loads(blob[off + 4: off + 4 + hlen])
        if header.get("version") != 1 or header.get("order") != ORDER_TAG or header.get("dtype") != "<f4":
            raise ValueError(f"unsupported grid header {header}")
        payload = np.frombuffer(blob[off + 4 + hlen:], dtype="<f4")
        return cls(tuple(header["dims"]), payload.astype(np.float32))

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "OccupancyGrid":
        return cls.from_bytes(Path(path).read_bytes())


def rasterize(ws: Workspace) -> OccupancyGrid:
    """+1 where the unit cell's center lies in (closed) any obstacle, else -1."""
    dims = tuple(int(round(e)) for e in ws.extents)
    if any(abs(d - e) > 1e-9 for d, e in zip(dims, ws.extents)):
        raise ValueError("workspace extents must be integer multiples of the unit cell")
    occ = np.zeros(tuple(reversed(dims)), dtype=bool)
    centers = [np.arange(n) + 0.5 for n in dims]
    for box in ws.obstacles:
        # Per-axis masks of cell centers inside [lo, hi]; reversed to match (z, y, x).
        masks = [(c >= lo) & (c <= hi) for c, lo, hi in zip(centers, box.min, box.max)]
        sl = np.ix_(*reversed(masks))
        occ[sl] = True
    values = np.where(occ.reshape(-1), 1.0, -1.0).astype(np.float32)
    return OccupancyGrid(dims, values)
