"""Corpus generation and loading: workspaces, grids, balanced labeled samples, manifest."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import (
    OccupancyGrid,
    RobotModel,
    Workspace,
    WorkspaceClass,
    collide,
    generate_workspace,
    get_robot,
    rasterize,
)
from .samplers import CSpace

MANIFEST_FORMAT = "latentprm.corpus"
MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"
UNSEEN_SEED_OFFSET = 1_000_000
MAX_DRAW_FACTOR = 1000

DEFAULT_ROBOT = {
    WorkspaceClass.S2D: "point2d",
    WorkspaceClass.O3D: "boxchain8",
    WorkspaceClass.C3D: "boxchain7",
}


class CorpusError(Exception):
    """Missing files, checksum failures, version or schema mismatches."""


@dataclass(frozen=True)
class CorpusParams:
    train: int
    seen_test: int
    unseen_test: int
    samples_per_workspace: int

    def __post_init__(self):
        for name in ("train", "seen_test", "unseen_test", "samples_per_workspace"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.seen_test > self.train:
            raise ValueError("seen_test draws from the train workspaces and cannot exceed train")

    @classmethod
    def full(cls, wclass: "str | WorkspaceClass") -> "CorpusParams":
        wclass = WorkspaceClass.parse(wclass)
        counts = {
            WorkspaceClass.S2D: (30, 30, 10),
            WorkspaceClass.O3D: (100, 100, 20),
            WorkspaceClass.C3D: (50, 30, 10),
        }[wclass]
        return cls(*counts, 100 if wclass.dim == 2 else 200)


@dataclass
class LabeledSet:
    configs: np.ndarray
    labels: np.ndarray  # 1 valid, 0 invalid

    def __len__(self) -> int:
        return len(self.labels)

    def valid_fraction(self) -> float:
        return float(np.mean(self.labels))


@dataclass
class WorkspaceRecord:
    role: str  # "train" or "unseen"
    index: int
    workspace: Workspace
    grid: OccupancyGrid
    samples: LabeledSet
    test_samples: LabeledSet | None = None  # seen-test set, train role only


@dataclass
class Corpus:
    wclass: WorkspaceClass
    robot: RobotModel
    params: CorpusParams
    seed: int
    train: list[WorkspaceRecord] = field(default_factory=list)
    unseen: list[WorkspaceRecord] = field(default_factory=list)
    manifest: dict = field(default_factory=dict)

    @property
    def seen(self) -> list[WorkspaceRecord]:
        return self.train[: self.params.seen_test]


def workspace_seeds(seed: int, params: CorpusParams) -> tuple[list[int], list[int]]:
    base = int(seed) * 2 * UNSEEN_SEED_OFFSET
    if params.train >= UNSEEN_SEED_OFFSET or params.unseen_test >= UNSEEN_SEED_OFFSET:
        raise ValueError("too many workspaces for the seed layout")
    train = [base + i for i in range(params.train)]
    unseen = [base + UNSEEN_SEED_OFFSET + i for i in range(params.unseen_test)]
    return train, unseen


def balanced_samples(robot: RobotModel, ws: Workspace, n: int, rng: np.random.Generator,
                     max_draws: int | None = None) -> LabeledSet:
    """Uniform draws labeled by the exact oracle, kept until each class fills its half."""
    n_valid = (n + 1) // 2
    n_invalid = n - n_valid
    cspace = CSpace(robot, ws.extents)
    max_draws = max_draws or MAX_DRAW_FACTOR * n
    kept_q: list[np.ndarray] = []
    kept_y: list[int] = []
    nv = ni = draws = 0
    while nv < n_valid or ni < n_invalid:
        if draws >= max_draws:
            raise CorpusError(
                f"workspace seed {ws.seed}: could not balance labels ({nv} valid, {ni} invalid "
                f"after {draws} draws)")
        batch = cspace.uniform(rng, max(n, 16))
        for q in batch:
            draws += 1
            valid = not collide(robot, q, ws)
            if valid and nv < n_valid:
                nv += 1
            elif not valid and ni < n_invalid:
                ni += 1
            else:
                continue
            kept_q.append(q)
            kept_y.append(1 if valid else 0)
            if nv >= n_valid and ni >= n_invalid:
                break
    return LabeledSet(np.array(kept_q), np.array(kept_y, dtype=np.int64))


def _sample_rng(seed: int, ws_seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(ws_seed), int(stream), 0x5EED])


def _make_record(args) -> WorkspaceRecord:
    wclass, robot_tag, params, seed, role, index, ws_seed = args
    robot = get_robot(robot_tag)
    ws = generate_workspace(wclass, ws_seed)
    grid = rasterize(ws)
    n = params.samples_per_workspace
    samples = balanced_samples(robot, ws, n, _sample_rng(seed, ws_seed, 0))
    test = None
    if role == "train" and index < params.seen_test:
        test = balanced_samples(robot, ws, n, _sample_rng(seed, ws_seed, 1))
    return WorkspaceRecord(role, index, ws, grid, samples, test)


# Serialization helpers ------------------------------------------------------

def samples_to_csv(robot: RobotModel, s: LabeledSet) -> bytes:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"q{i}" for i in range(robot.dof)] + ["label"])
    for q, y in zip(s.configs, s.labels):
        w.writerow([repr(float(v)) for v in q] + [int(y)])
    return buf.getvalue().encode("utf-8")


def samples_from_csv(blob: bytes, dof: int, source: str) -> LabeledSet:
    rows = list(csv.reader(io.StringIO(blob.decode("utf-8"))))
    if not rows or len(rows[0]) != dof + 1 or rows[0][-1] != "label":
        raise CorpusError(f"{source}: header does not match a {dof}-DoF sample file")
    body = rows[1:]
    try:
        Q = np.array([[float(v) for v in r[:dof]] for r in body], dtype=float).reshape(len(body), dof)
        y = np.array([int(r[dof]) for r in body], dtype=np.int64)
    except (ValueError, IndexError) as exc:
        raise CorpusError(f"{source}: malformed row ({exc})") from None
    if np.any((y != 0) & (y != 1)):
        raise CorpusError(f"{source}: labels must be 0 or 1")
    return LabeledSet(Q, y)


def _sha256(blob: bytes) -> str:
    return hashlib.sha256(blob).hexdigest()


def _atomic_write(path: Path, blob: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except OSError as exc:
        raise CorpusError(f"{path}: write failed ({exc.strerror or exc})") from exc


def _grid_bytes(grid: OccupancyGrid) -> bytes:
    return grid.to_bytes()


def _workspace_bytes(ws: Workspace) -> bytes:
    return (json.dumps(ws.to_dict(), sort_keys=True, indent=1) + "\n").encode("utf-8")


def generate_corpus(wclass: "str | WorkspaceClass", robot: "str | RobotModel | None",
                    params: CorpusParams, seed: int, out_dir: str | Path | None = None,
                    workers: int = 1) -> Corpus:
    """Build the corpus in memory; when ``out_dir`` is given, also persist it with a manifest."""
    wclass = WorkspaceClass.parse(wclass)
    if robot is None:
        robot = DEFAULT_ROBOT[wclass]
    robot = get_robot(robot) if isinstance(robot, str) else robot
    if robot.dim != wclass.dim:
        raise ValueError(f"robot {robot.tag} is {robot.dim}D but class {wclass.value} is {wclass.dim}D")
    train_seeds, unseen_seeds = workspace_seeds(seed, params)
    jobs = [(wclass, robot.tag, params, seed, "train", i, s) for i, s in enumerate(train_seeds)]
    jobs += [(wclass, robot.tag, params, seed, "unseen", i, s) for i, s in enumerate(unseen_seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_make_record, jobs))
    else:
        records = [_make_record(j) for j in jobs]
    corpus = Corpus(wclass, robot, params, int(seed),
                    [r for r in records if r.role == "train"],
                    [r for r in records if r.role == "unseen"])
    corpus.manifest = _manifest(corpus, train_seeds, unseen_seeds, out_dir)
    return corpus


def _manifest(corpus: Corpus, train_seeds, unseen_seeds, out_dir) -> dict:
    out = Path(out_dir) if out_dir is not None else None
    entries = []
    for rec in corpus.train + corpus.unseen:
        stem = f"{rec.role}_{rec.index:04d}"
        blobs = {
            "workspace": (f"workspaces/{stem}.json", _workspace_bytes(rec.workspace)),
            "grid": (f"grids/{stem}.bin", _grid_bytes(rec.grid)),
            "samples": (f"samples/{stem}.csv", samples_to_csv(corpus.robot, rec.samples)),
        }
        if rec.test_samples is not None:
            blobs["test_samples"] = (f"samples/{rec.role}_test_{rec.index:04d}.csv",
                                     samples_to_csv(corpus.robot, rec.test_samples))
        entry = {"role": rec.role, "index": rec.index, "seed": rec.workspace.seed, "files": {}}
        for key, (rel, blob) in blobs.items():
            entry["files"][key] = {"path": rel, "sha256": _sha256(blob)}
            if out is not None:
                _atomic_write(out / rel, blob)
        entries.append(entry)
    p = corpus.params
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "class": corpus.wclass.value,
        "robot": corpus.robot.tag,
        "seed": corpus.seed,
        "counts": {
            "train": p.train,
            "seen_test": p.seen_test,
            "unseen_test": p.unseen_test,
            "samples_per_workspace": p.samples_per_workspace,
        },
        "seeds": {"train": list(train_seeds), "unseen": list(unseen_seeds)},
        "entries": entries,
    }
    if out is not None:
        _atomic_write(out / MANIFEST_NAME, (json.dumps(manifest, indent=1, sort_keys=True) + "\n").encode())
    return manifest


def _read_checked(root: Path, spec: dict) -> bytes:
    path = root / spec["path"]
    try:
        blob = path.read_bytes()
    except FileNotFoundError:
        raise CorpusError(f"{path}: missing file") from None
    except OSError as exc:
        raise CorpusError(f"{path}: read failed ({exc.strerror or exc})") from exc
    if _sha256(blob) != spec["sha256"]:
        raise CorpusError(f"{path}: checksum mismatch")
    return blob


def read_manifest(path: str | Path) -> tuple[dict, Path]:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CorpusError(f"{path}: missing manifest") from None
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}: manifest is not valid JSON ({exc.msg})") from None
    if manifest.get("format") != MANIFEST_FORMAT:
        raise CorpusError(f"{path}: not a corpus manifest")
    if manifest.get("version") != MANIFEST_VERSION:
        raise CorpusError(f"{path}: manifest version {manifest.get('version')} != {MANIFEST_VERSION}")
    return manifest, path.parent


def load_corpus(path: str | Path) -> Corpus:
    """Load and verify a persisted corpus (manifest file or its directory)."""
    manifest, root = read_manifest(path)
    try:
        wclass = WorkspaceClass.parse(manifest["class"])
        robot = get_robot(manifest["robot"])
        params = CorpusParams(**manifest["counts"])
        train_seeds = manifest["seeds"]["train"]
        unseen_seeds = manifest["seeds"]["unseen"]
        entries = manifest["entries"]
    except (KeyError, ValueError, TypeError) as exc:
        raise CorpusError(f"{root / MANIFEST_NAME}: invalid manifest ({exc})") from None
    if set(train_seeds) & set(unseen_seeds):
        raise CorpusError(f"{root / MANIFEST_NAME}: train and unseen seeds overlap")
    corpus = Corpus(wclass, robot, params, int(manifest["seed"]), manifest=manifest)
    for e in entries:
        files = e["files"]
        ws_blob = _read_checked(root, files["workspace"])
        try:
            ws = Workspace.from_dict(json.loads(ws_blob))
        except (ValueError, KeyError) as exc:
            raise CorpusError(f"{root / files['workspace']['path']}: {exc}") from None
        if ws.wclass != wclass:
            raise CorpusError(f"{root / files['workspace']['path']}: class {ws.wclass.value} != {wclass.value}")
        try:
            grid = OccupancyGrid.from_bytes(_read_checked(root, files["grid"]))
        except ValueError as exc:
            raise CorpusError(f"{root / files['grid']['path']}: {exc}") from None
        s = samples_from_csv(_read_checked(root, files["samples"]), robot.dof, files["samples"]["path"])
        t = None
        if "test_samples" in files:
            t = samples_from_csv(_read_checked(root, files["test_samples"]), robot.dof,
                                 files["test_samples"]["path"])
        rec = WorkspaceRecord(e["role"], int(e["index"]), ws, grid, s, t)
        (corpus.train if rec.role == "train" else corpus.unseen).append(rec)
    if len(corpus.train) != params.train or len(corpus.unseen) != params.unseen_test:
        raise CorpusError(f"{root / MANIFEST_NAME}: entry counts do not match declared counts")
    return corpus
