"""Glue between a corpus and the two learned models: datasets, training, evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import cae as cae_mod
from . import mlp as mlp_mod
from .datagen import Corpus, WorkspaceRecord

SPLITS = ("train", "seen", "unseen")


def split_records(corpus: Corpus, split: str) -> list[WorkspaceRecord]:
    if split == "train":
        return corpus.train
    if split == "seen":
        return corpus.seen
    if split == "unseen":
        return corpus.unseen
    raise ValueError(f"unknown split {split!r}")


def split_samples(rec: WorkspaceRecord, split: str):
    """Seen-test uses the held-out sample set drawn on a training workspace."""
    if split == "seen":
        if rec.test_samples is None:
            raise ValueError(f"workspace {rec.index} has no seen-test samples")
        return rec.test_samples
    return rec.samples


def mlp_dataset(corpus: Corpus, cae_model, split: str) -> tuple[np.ndarray, np.ndarray]:
    """Rows of (latent code, normalized configuration) and their labels."""
    X, y = [], []
    for rec in split_records(corpus, split):
        s = split_samples(rec, split)
        z = cae_mod.encode(cae_model, rec.grid)
        X.append(mlp_mod.inputs(z, corpus.robot.normalize(rec.workspace.extents, s.configs)))
        y.append(s.labels)
    return np.vstack(X), np.concatenate(y)


def cae_accuracies(cae_model, records: Sequence[WorkspaceRecord]) -> np.ndarray:
    return np.array([cae_mod.reconstruction_accuracy(cae_model, r.grid) for r in records])


def cae_accuracy(cae_model, records: Sequence[WorkspaceRecord]) -> float:
    return float(np.mean(cae_accuracies(cae_model, records)))


def _sample_var(x: np.ndarray) -> float:
    return float(np.var(x, ddof=1)) if len(x) > 1 else 0.0


@dataclass(frozen=True)
class CaeEval:
    seen: float
    unseen: float
    n_seen: int
    n_unseen: int
    seen_var: float = 0.0
    unseen_var: float = 0.0


def evaluate_cae(corpus: Corpus, cae_model) -> CaeEval:
    """Seen = the training grids themselves; unseen = held-out workspaces. Variances are across grids."""
    a = cae_accuracies(cae_model, corpus.train)
    b = cae_accuracies(cae_model, corpus.unseen)
    return CaeEval(float(a.mean()), float(b.mean()), len(a), len(b), _sample_var(a), _sample_var(b))


def evaluate_mlp(corpus: Corpus, cae_model, mlp_model) -> dict[str, mlp_mod.Metrics]:
    return {s: mlp_mod.evaluate(mlp_model, *mlp_dataset(corpus, cae_model, s)) for s in ("seen", "unseen")}


def mlp_accuracy_spread(corpus: Corpus, cae_model, mlp_model, split: str) -> float:
    """Standard deviation of per-workspace accuracy within a split."""
    accs = []
    for rec in split_records(corpus, split):
        s = split_samples(rec, split)
        q = corpus.robot.normalize(rec.workspace.extents, s.configs)
        X = mlp_mod.inputs(cae_mod.encode(cae_model, rec.grid), q)
        accs.append(mlp_mod.evaluate(mlp_model, X, s.labels).accuracy)
    return float(np.std(accs, ddof=1)) if len(accs) > 1 else 0.0


def train_cae_on(corpus: Corpus, preset, seed: int | None = None):
    seed = preset.seed if seed is None else seed
    model = cae_mod.build_cae(corpus.wclass, seed, preset.cae_arch)
    return cae_mod.train_cae(model, [r.grid for r in corpus.train], preset.cae_train.replace(seed=seed),
                             progress_every=max(1, preset.cae_train.epochs // 10))


def train_mlp_on(corpus: Corpus, cae_model, preset, seed: int | None = None):
    seed = preset.seed if seed is None else seed
    X, y = mlp_dataset(corpus, cae_model, "train")
    cfg = preset.mlp_train.replace(seed=seed)
    model = mlp_mod.build_mlp(corpus.wclass, corpus.robot, cae_model.latent_dim, seed, dropout=cfg.dropout)
    return mlp_mod.train_mlp(model, X, y, cfg)
