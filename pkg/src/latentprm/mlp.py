"""The learned validity gate: (latent code, normalized configuration) -> valid / invalid."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels, nn
from .geometry import RobotModel, WorkspaceClass

VALID = 1
INVALID = 0

HIDDEN_WIDTHS = {
    2: [6, 4],
    3: [50, 40, 30, 20, 10, 5],
}


@dataclass
class MlpModel:
    wclass: WorkspaceClass
    robot_tag: str
    net: nn.Network

    @property
    def in_dim(self) -> int:
        return self.net.in_dim

    def tags(self) -> dict:
        return {"kind": "mlp", "class": self.wclass.value, "robot": self.robot_tag}

    def save(self, path: str | Path) -> None:
        nn.save_network(path, self.net, self.tags())

    @classmethod
    def load(cls, path: str | Path) -> "MlpModel":
        net, tags = nn.load_network(path)
        if tags.get("kind") != "mlp":
            raise nn.WeightFormatError(f"{path}: not an MLP weight file")
        return cls(WorkspaceClass.parse(tags["class"]), tags["robot"], net)

    def frozen(self) -> "MlpModel":
        return MlpModel(self.wclass, self.robot_tag, self.net.astype(np.float32))


def build_mlp(wclass: "str | WorkspaceClass", robot: RobotModel, latent_dim: int, seed: int = 0,
              dropout: float = 0.5) -> MlpModel:
    """Hidden layers are linear -> PReLU -> dropout; the 2-logit output layer is linear."""
    wclass = WorkspaceClass.parse(wclass)
    hidden = HIDDEN_WIDTHS[wclass.dim]
    dims = [latent_dim + robot.dof] + hidden + [2]
    n = len(dims) - 1
    rng = np.random.default_rng([int(seed), 0x31F])
    net = nn.init_network(dims, rng, activations=[True] * (n - 1) + [False],
                          dropouts=[dropout] * (n - 1) + [0.0])
    return MlpModel(wclass, robot.tag, net)


def normalize_config(robot: RobotModel, extents, q) -> np.ndarray:
    """Translations [0, extent] -> [-1, 1], angles / pi."""
    return robot.normalize(extents, q)


def inputs(z, q_norm) -> np.ndarray:
    """Concatenate a latent code (m,) with one (d,) or many (n, d) normalized configurations."""
    z = np.asarray(z, dtype=float)
    q = np.asarray(q_norm, dtype=float)
    if q.ndim == 1:
        return np.concatenate([z, q])
    return np.hstack([np.broadcast_to(z, (q.shape[0], z.size)), q])


def train_mlp(model: MlpModel, X: np.ndarray, y: np.ndarray, cfg: nn.TrainConfig):
    """Cross-entropy with Adagrad and train-mode dropout; returns (float32 model, per-epoch loss).

    ``X`` rows are ``inputs(z, q_norm)``; ``y`` is 1 for valid, 0 for invalid.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=int)
    if X.shape[0] == 0:
        raise ValueError("empty training data")
    if X.shape[1] != model.in_dim:
        raise ValueError(f"input width {X.shape[1]} != model input {model.in_dim}")
    net = model.net.astype(np.float64)
    for ln in net.layers[:-1]:
        ln.dropout = cfg.dropout
    opt = nn.Adagrad([net], lr=cfg.lr, eps=cfg.eps)
    history: list[float] = []
    for epoch in range(cfg.epochs):
        drop_rng = np.random.default_rng([int(cfg.seed), int(epoch), 0xD40])
        losses, sizes = [], []
        for idx in nn.epoch_batches(len(X), cfg.batch_size, cfg.seed, epoch):
            loss, grads = nn.cross_entropy_and_grads(net, X[idx], y[idx], train=True, rng=drop_rng)
            opt.step([grads])
            losses.append(loss)
            sizes.append(len(idx))
        history.append(float(np.average(losses, weights=sizes)))
        if not math.isfinite(history[-1]):
            raise FloatingPointError(f"MLP loss diverged at epoch {epoch}")
    return MlpModel(model.wclass, model.robot_tag, net).frozen(), history


def predict_proba(model: MlpModel, X) -> np.ndarray:
    """p_valid per input row (eval mode)."""
    logits = np.asarray(model.net.forward(X), dtype=np.float64)
    return nn.softmax(logits)[..., VALID]


def predict(model: MlpModel, z, q_norm) -> tuple[float, bool]:
    """(p_valid, label) for a single configuration; label is valid iff p_valid >= 0.5."""
    x = inputs(z, q_norm)
    if x.ndim != 1 or x.size != model.in_dim:
        raise ValueError(f"input width {x.size} != model input {model.in_dim}")
    p = float(predict_proba(model, x))
    return p, p >= 0.5


def predict_batch(model: MlpModel, z, Q_norm) -> np.ndarray:
    """Boolean validity labels for many configurations in one workspace."""
    return predict_proba(model, inputs(z, Q_norm)) >= 0.5


class GateEvaluator:
    """Batched validity decisions for one workspace code, tuned for many small calls.

    The fixed latent code and the configuration normalization are folded into
    the first layer, and the 2-logit head is reduced to the sign of the logit
    difference (p_valid >= 0.5 exactly when logit_valid >= logit_invalid).
    Rows whose translation DoFs leave the sampling range are answered invalid.
    """

    def __init__(self, model: MlpModel, z, robot: RobotModel, extents, backend=None):
        layers = model.net.layers
        if len(layers) < 2:
            raise ValueError("gate needs at least one hidden layer")
        m = model.in_dim - robot.dof
        z = np.asarray(z, dtype=np.float64)
        if z.size != m:
            raise ValueError(f"latent width {z.size} != model latent width {m}")
        lo, hi = robot.bounds(extents)
        scale, shift = robot.norm_coeffs(extents)
        W0 = layers[0].W.astype(np.float64)
        Wz, Wq = W0[:, :m], W0[:, m:]
        Ws = [Wq * scale] + [ln.W.astype(np.float64) for ln in layers[1:-1]]
        bs = [Wz @ z + Wq @ shift + layers[0].b.astype(np.float64)]
        bs += [ln.b.astype(np.float64) for ln in layers[1:-1]]
        parts = []
        for W, b in zip(Ws, bs):
            parts += [W.T.ravel(), b]  # (in, out) row-major, then bias
        Wl = layers[-1].W.astype(np.float64)
        bl = layers[-1].b.astype(np.float64)
        parts += [Wl[VALID] - Wl[INVALID], [bl[VALID] - bl[INVALID]]]
        self.params = np.ascontiguousarray(np.concatenate(parts))
        self.shapes = np.array([[W.shape[1], W.shape[0]] for W in Ws], dtype=np.int64)
        self.slopes = np.array([float(ln.slope) for ln in layers[:-1]], dtype=np.float64)
        self.acts = np.array([int(bool(ln.activation)) for ln in layers[:-1]], dtype=np.int32)
        self.tidx = np.array(sorted(robot.trans_axes), dtype=np.int64)
        self.lo = np.ascontiguousarray(lo[self.tidx])
        self.hi = np.ascontiguousarray(hi[self.tidx])
        self._eval = (backend or kernels).gate_eval

    def __call__(self, Q) -> np.ndarray:
        Q = np.ascontiguousarray(np.atleast_2d(Q), dtype=np.float64)
        return self._eval(Q, self.params, self.shapes, self.slopes, self.acts, self.tidx, self.lo, self.hi)


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    tpr: float
    tnr: float
    n: int

    def as_row(self) -> list:
        return [self.accuracy, self.tpr, self.tnr, self.n]


def confusion(pred_valid, true_valid) -> Metrics:
    """Positive class = valid. A rate is NaN when its class is absent."""
    p = np.asarray(pred_valid, dtype=bool)
    t = np.asarray(true_valid, dtype=bool)
    if p.size == 0:
        raise ValueError("empty evaluation set")
    tp = int(np.sum(p & t))
    tn = int(np.sum(~p & ~t))
    fn = int(np.sum(~p & t))
    fp = int(np.sum(p & ~t))
    tpr = tp / (tp + fn) if tp + fn else math.nan
    tnr = tn / (tn + fp) if tn + fp else math.nan
    return Metrics((tp + tn) / p.size, tpr, tnr, int(p.size))


def evaluate(model: MlpModel, X, y) -> Metrics:
    return confusion(predict_proba(model, X) >= 0.5, np.asarray(y) == VALID)
