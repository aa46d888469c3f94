"""Workspace autoencoder: per-class architectures, training, encoding, scoring."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import nn
from .geometry import OccupancyGrid, WorkspaceClass

log = logging.getLogger(__name__)

# Encoder layer widths, input grid cells first, latent last. Decoders mirror these.
ARCHITECTURES: dict[str, list[int]] = {
    "2DS": [961, 512, 256, 128, 64, 32, 12],
    "3DO": [10086, 5043, 3125, 1600, 800, 400, 200, 100, 50],
    "3DC": [1331, 1000, 800, 600, 400, 200, 100, 50],
    # Desk-scale 3DO: same grid and latent, narrower hidden stack.
    "3DO-desk": [10086, 1024, 512, 256, 128, 100, 50],
}


@dataclass
class CaeModel:
    wclass: WorkspaceClass
    encoder: nn.Network
    decoder: nn.Network
    arch: str = ""

    @property
    def latent_dim(self) -> int:
        return self.encoder.out_dim

    @property
    def cells(self) -> int:
        return self.encoder.in_dim

    def tags(self, part: str) -> dict:
        return {"kind": "cae", "part": part, "class": self.wclass.value, "arch": self.arch}

    def save(self, stem: str | Path) -> tuple[Path, Path]:
        """Write encoder and decoder to ``<stem>.encoder.lpw`` and ``<stem>.decoder.lpw``."""
        stem = Path(stem)
        enc = stem.with_name(stem.name + ".encoder.lpw")
        dec = stem.with_name(stem.name + ".decoder.lpw")
        nn.save_network(enc, self.encoder, self.tags("encoder"))
        nn.save_network(dec, self.decoder, self.tags("decoder"))
        return enc, dec

    @classmethod
    def load(cls, stem: str | Path) -> "CaeModel":
        stem = Path(stem)
        enc, etags = nn.load_network(stem.with_name(stem.name + ".encoder.lpw"))
        dec, dtags = nn.load_network(stem.with_name(stem.name + ".decoder.lpw"))
        if etags.get("kind") != "cae" or dtags.get("class") != etags.get("class"):
            raise nn.WeightFormatError(f"{stem}: encoder/decoder tags do not match")
        return cls(WorkspaceClass.parse(etags["class"]), enc, dec, etags.get("arch", ""))

    def frozen(self) -> "CaeModel":
        """float32 copy used for inference and serialization."""
        return CaeModel(self.wclass, self.encoder.astype(np.float32), self.decoder.astype(np.float32), self.arch)


def build_cae(wclass: "str | WorkspaceClass", seed: int = 0, arch: str | None = None) -> CaeModel:
    """PReLU hidden layers, linear output layer, decoder mirrored from the encoder."""
    wclass = WorkspaceClass.parse(wclass)
    arch = arch or wclass.value
    dims = ARCHITECTURES[arch]
    rng = np.random.default_rng([int(seed), 0xCAE])
    encoder = nn.init_network(dims, rng)
    decoder = nn.init_network(list(reversed(dims)), rng)
    return CaeModel(wclass, encoder, decoder, arch)


def grids_matrix(model: CaeModel, grids: Sequence[OccupancyGrid]) -> np.ndarray:
    if len(grids) == 0:
        raise ValueError("empty training set")
    for g in grids:
        if g.size != model.cells:
            raise ValueError(f"grid with {g.size} cells does not fit a {model.cells}-cell encoder")
    return np.stack([g.values for g in grids]).astype(np.float64)


def train_cae(model: CaeModel, grids: Sequence[OccupancyGrid], cfg: nn.TrainConfig,
              progress_every: int = 0) -> tuple[CaeModel, list[float]]:
    """Adagrad on the reconstruction objective; returns the float32 model and per-epoch mean loss."""
    X = grids_matrix(model, grids)
    enc = model.encoder.astype(np.float64)
    dec = model.decoder.astype(np.float64)
    opt = nn.Adagrad([enc, dec], lr=cfg.lr, eps=cfg.eps)
    history: list[float] = []
    for epoch in range(cfg.epochs):
        losses, sizes = [], []
        for idx in nn.epoch_batches(len(X), cfg.batch_size, cfg.seed, epoch):
            loss, ge, gd = nn.cae_loss_and_grads(X[idx], enc, dec, cfg.lam)
            opt.step([ge, gd])
            losses.append(loss)
            sizes.append(len(idx))
        history.append(float(np.average(losses, weights=sizes)))
        if not np.isfinite(history[-1]):
            raise FloatingPointError(f"CAE loss diverged at epoch {epoch}")
        if progress_every and (epoch % progress_every == 0 or epoch == cfg.epochs - 1):
            log.info("cae epoch %d loss %.4f", epoch, history[-1])
    trained = CaeModel(model.wclass, enc, dec, model.arch).frozen()
    return trained, history


def encode(model: CaeModel, grid: OccupancyGrid | np.ndarray) -> np.ndarray:
    """Latent code (float64 vector) of one grid, eval mode."""
    x = grid.values if isinstance(grid, OccupancyGrid) else np.asarray(grid)
    if x.shape[-1] != model.cells:
        raise ValueError(f"grid with {x.shape[-1]} cells does not fit a {model.cells}-cell encoder")
    return np.asarray(model.encoder.forward(x), dtype=np.float64)


def decode(model: CaeModel, z) -> np.ndarray:
    return np.asarray(model.decoder.forward(np.asarray(z)), dtype=np.float64)


def threshold(recon) -> np.ndarray:
    """Map reconstructions to {-1, +1}; ties at 0 go to +1."""
    return np.where(np.asarray(recon) >= 0, 1.0, -1.0)


def reconstruction_accuracy(model: CaeModel, grid: OccupancyGrid | np.ndarray) -> float:
    x = grid.values if isinstance(grid, OccupancyGrid) else np.asarray(grid)
    recon = threshold(decode(model, encode(model, x)))
    return float(np.mean(recon == x))


def write_loss_history(path: str | Path, history: Sequence[float]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "mean_loss"])
        for i, loss in enumerate(history):
            w.writerow([i + 1, repr(float(loss))])
