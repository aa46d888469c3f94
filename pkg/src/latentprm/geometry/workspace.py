"""Axis-aligned block workspaces and their random generation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np


class WorkspaceClass(str, Enum):
    S2D = "2DS"
    O3D = "3DO"
    C3D = "3DC"

    @classmethod
    def parse(cls, value: "str | WorkspaceClass") -> "WorkspaceClass":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown workspace class {value!r}; expected one of 2DS, 3DO, 3DC") from None

    @property
    def dim(self) -> int:
        return 2 if self is WorkspaceClass.S2D else 3


@dataclass(frozen=True)
class ClassProfile:
    extents: tuple[int, ...]
    count_range: tuple[int, int]
    # Inclusive integer size range per axis for obstacle boxes.
    size_lo: tuple[int, ...]
    size_hi: tuple[int, ...]


PROFILES: dict[WorkspaceClass, ClassProfile] = {
    WorkspaceClass.S2D: ClassProfile((31, 31), (3, 5), (2, 2), (8, 8)),
    WorkspaceClass.O3D: ClassProfile((41, 41, 6), (25, 30), (1, 1, 2), (4, 4, 6)),
    WorkspaceClass.C3D: ClassProfile((11, 11, 11), (110, 125), (1, 1, 1), (1, 1, 1)),
}


@dataclass(frozen=True)
class AxisAlignedBox:
    min: tuple[float, ...]
    max: tuple[float, ...]

    def __post_init__(self):
        if len(self.min) != len(self.max):
            raise ValueError("box corners differ in dimension")
        if any(lo >= hi for lo, hi in zip(self.min, self.max)):
            raise ValueError(f"degenerate box {self.min} -> {self.max}")

    def contains(self, p) -> bool:
        """Closed containment of a point."""
        return all(lo <= x <= hi for lo, x, hi in zip(self.min, p, self.max))


@dataclass(frozen=True)
class Workspace:
    wclass: WorkspaceClass
    extents: tuple[float, ...]
    obstacles: tuple[AxisAlignedBox, ...] = ()
    seed: int | None = None
    _arrays: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        for box in self.obstacles:
            if len(box.min) != len(self.extents):
                raise ValueError("obstacle dimension does not match workspace")
            if any(lo < 0 or hi > e for lo, hi, e in zip(box.min, box.max, self.extents)):
                raise ValueError(f"obstacle {box} leaves workspace extents {self.extents}")

    def __getstate__(self):
        # Kernel scene caches are process-local and not picklable.
        return {k: v for k, v in self.__dict__.items() if k != "_arrays"}

    def __setstate__(self, state):
        self.__dict__.update(state)
        object.__setattr__(self, "_arrays", {})

    @property
    def dim(self) -> int:
        return len(self.extents)

    def obstacle_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Obstacle corners padded to 3D as (M,3) float arrays (z = 0 in 2D)."""
        if "mm" not in self._arrays:
            lo = np.zeros((len(self.obstacles), 3))
            hi = np.zeros((len(self.obstacles), 3))
            for i, box in enumerate(self.obstacles):
                lo[i, : self.dim] = box.min
                hi[i, : self.dim] = box.max
            lo.flags.writeable = False
            hi.flags.writeable = False
            self._arrays["mm"] = (lo, hi)
        return self._arrays["mm"]

    def extents3(self) -> tuple[float, float, float]:
        e = list(self.extents) + [0.0] * (3 - self.dim)
        return (float(e[0]), float(e[1]), float(e[2]))

    def to_dict(self) -> dict:
        return {
            "format": "latentprm.workspace",
            "version": 1,
            "class": self.wclass.value,
            "extents": list(self.extents),
            "seed": self.seed,
            "obstacles": [{"min": list(b.min), "max": list(b.max)} for b in self.obstacles],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Workspace":
        if d.get("format") != "latentprm.workspace":
            raise ValueError("not a workspace document")
        if d.get("version") != 1:
            raise ValueError(f"unsupported workspace version {d.get('version')!r}")
        return cls(
            WorkspaceClass.parse(d["class"]),
            tuple(d["extents"]),
            tuple(AxisAlignedBox(tuple(o["min"]), tuple(o["max"])) for o in d["obstacles"]),
            d.get("seed"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Workspace":
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Workspace":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def empty_workspace(wclass: "str | WorkspaceClass") -> Workspace:
    wclass = WorkspaceClass.parse(wclass)
    return Workspace(wclass, PROFILES[wclass].extents, ())


def generate_workspace(wclass: "str | WorkspaceClass", seed: int) -> Workspace:
    """Random block workspace; a pure function of ``(wclass, seed)``.

    Obstacle sizes and min corners are integers, so every block is exactly
    representable on the unit-cell occupancy grid.
    """
    wclass = WorkspaceClass.parse(wclass)
    prof = PROFILES[wclass]
    rng = np.random.default_rng([int(seed), 0x57A7])
    lo_n, hi_n = prof.count_range
    count = int(rng.integers(lo_n, hi_n + 1))
    boxes = []
    for _ in range(count):
        size = [int(rng.integers(a, b + 1)) for a, b in zip(prof.size_lo, prof.size_hi)]
        corner = [int(rng.integers(0, e - s + 1)) for e, s in zip(prof.extents, size)]
        boxes.append(
            AxisAlignedBox(
                tuple(float(c) for c in corner),
                tuple(float(c + s) for c, s in zip(corner, size)),
            )
        )
    return Workspace(wclass, tuple(float(e) for e in prof.extents), tuple(boxes), int(seed))
