"""Minimal dense network stack.

Layers are affine maps with an optional PReLU (one learnable slope per layer)
and optional inverted dropout. Batches are row-major: ``X`` has shape
``(batch, in_dim)``. Training runs in float64; serialized weights and
inference use float32.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

WEIGHT_MAGIC = b"LPWT1\n"
WEIGHT_FORMAT_VERSION = 1
PRELU_INIT = 0.25


class WeightFormatError(ValueError):
    pass


@dataclass
class DenseLayer:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    slope: np.ndarray = field(default_factory=lambda: np.array(PRELU_INIT))
    activation: bool = True
    dropout: float = 0.0

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    def arrays(self) -> dict[str, np.ndarray]:
        return {"W": self.W, "b": self.b, "slope": self.slope}


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]
    pre: list[np.ndarray]
    masks: list[np.ndarray | None]
    output: np.ndarray


class Network:
    """Ordered stack of dense layers."""

    def __init__(self, layers: Sequence[DenseLayer]):
        self.layers = list(layers)
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError(f"layer dims do not chain: {a.out_dim} -> {b.in_dim}")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def dims(self) -> list[int]:
        return [self.in_dim] + [ln.out_dim for ln in self.layers]

    @property
    def dtype(self):
        return self.layers[0].W.dtype

    def parameter_count(self) -> int:
        return sum(ln.W.size + ln.b.size + 1 for ln in self.layers)

    def flops_per_sample(self) -> int:
        """Multiply-adds plus activation work for one input row."""
        total = 0
        for ln in self.layers:
            total += 2 * ln.W.size + ln.out_dim
            if ln.activation:
                total += 2 * ln.out_dim
        return total

    def forward(self, X, train: bool = False, rng: np.random.Generator | None = None,
                keep_cache: bool = False):
        """Run the stack. Returns the output, or ``(output, cache)`` when ``keep_cache``.

        Dropout is applied only with ``train=True`` (and requires ``rng``);
        survivors are scaled by ``1 / (1 - p)`` so eval needs no rescaling.
        """
        x = np.asarray(X, dtype=self.dtype)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.in_dim:
            raise ValueError(f"input width {x.shape[1]} != network input {self.in_dim}")
        inputs, pre, masks = [], [], []
        for ln in self.layers:
            if keep_cache:
                inputs.append(x)
            z = x @ ln.W.T + ln.b
            if keep_cache:
                pre.append(z)
            if ln.activation:
                x = np.where(z > 0, z, ln.slope * z)
            else:
                x = z
            mask = None
            if train and ln.dropout > 0:
                if rng is None:
                    raise ValueError("train-mode dropout needs an rng")
                keep = rng.random(x.shape) >= ln.dropout
                mask = keep.astype(x.dtype) / (1.0 - ln.dropout)
                x = x * mask
            masks.append(mask)
        out = x[0] if squeeze else x
        if keep_cache:
            return out, ForwardCache(inputs, pre, masks, x)
        return out

    def __call__(self, X):
        return self.forward(X)

    def backward(self, cache: ForwardCache, d_out: np.ndarray) -> list[dict[str, np.ndarray]]:
        """Gradients of a scalar loss given dLoss/dOutput; dropout masks stay as cached."""
        grads: list[dict[str, np.ndarray]] = [None] * len(self.layers)  # type: ignore[list-item]
        g = np.asarray(d_out, dtype=self.dtype)
        if g.ndim == 1:
            g = g[None, :]
        for i in range(len(self.layers) - 1, -1, -1):
            ln = self.layers[i]
            if cache.masks[i] is not None:
                g = g * cache.masks[i]
            z = cache.pre[i]
            if ln.activation:
                neg = z <= 0
                d_slope = np.sum(g * np.where(neg, z, 0.0))
                g = np.where(neg, ln.slope * g, g)
            else:
                d_slope = 0.0
            dW = g.T @ cache.inputs[i]
            db = g.sum(axis=0)
            grads[i] = {"W": dW, "b": db, "slope": np.asarray(d_slope, dtype=self.dtype)}
            if i > 0:
                g = g @ ln.W
        return grads

    def astype(self, dtype) -> "Network":
        return Network([
            DenseLayer(ln.W.astype(dtype), ln.b.astype(dtype), np.asarray(ln.slope, dtype=dtype),
                       ln.activation, ln.dropout)
            for ln in self.layers
        ])

    def copy(self) -> "Network":
        return self.astype(self.dtype)

    def inverse_layout(self) -> list[int]:
        return list(reversed(self.dims))


def init_network(dims: Sequence[int], rng: np.random.Generator, activations: Sequence[bool] | None = None,
                 dropouts: Sequence[float] | None = None) -> Network:
    """Uniform(+-sqrt(6 / fan_in)) weights, zero biases, PReLU slopes 0.25."""
    n = len(dims) - 1
    activations = list(activations) if activations is not None else [True] * (n - 1) + [False]
    dropouts = list(dropouts) if dropouts is not None else [0.0] * n
    layers = []
    for i in range(n):
        fan_in, fan_out = dims[i], dims[i + 1]
        bound = math.sqrt(6.0 / fan_in)
        W = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(DenseLayer(W, np.zeros(fan_out), np.array(PRELU_INIT), bool(activations[i]),
                                 float(dropouts[i])))
    return Network(layers)


# ---------------------------------------------------------------- losses

def reconstruction_loss(X, recon, encoder: Network, lam: float) -> float:
    """Mean squared-norm reconstruction error plus lam * sum of squared encoder weights."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    err = np.asarray(recon, dtype=float) - X
    data = float(np.sum(err * err)) / X.shape[0]
    return data + lam * weight_penalty(encoder)


def weight_penalty(net: Network) -> float:
    return float(sum(np.sum(ln.W * ln.W) for ln in net.layers))


def cae_loss(X, encoder: Network, decoder: Network, lam: float) -> float:
    """Eval-mode autoencoder objective over a batch."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("cae_loss needs a nonempty (batch, cells) array")
    return reconstruction_loss(X, decoder.forward(encoder.forward(X)), encoder, lam)


def cae_loss_and_grads(X, encoder: Network, decoder: Network, lam: float):
    """Loss and gradients for encoder and decoder (CAE layers carry no dropout)."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    z, enc_cache = encoder.forward(X, keep_cache=True)
    recon, dec_cache = decoder.forward(z, keep_cache=True)
    loss = reconstruction_loss(X, recon, encoder, lam)
    d_recon = 2.0 * (recon - X) / X.shape[0]
    dec_grads = decoder.backward(dec_cache, d_recon)
    d_z = _input_grad(decoder, dec_cache, d_recon)
    enc_grads = encoder.backward(enc_cache, d_z)
    for ln, g in zip(encoder.layers, enc_grads):
        g["W"] = g["W"] + 2.0 * lam * ln.W
    return loss, enc_grads, dec_grads


def _input_grad(net: Network, cache: ForwardCache, d_out: np.ndarray) -> np.ndarray:
    g = np.asarray(d_out, dtype=net.dtype)
    for i in range(len(net.layers) - 1, -1, -1):
        ln = net.layers[i]
        if cache.masks[i] is not None:
            g = g * cache.masks[i]
        if ln.activation:
            g = np.where(cache.pre[i] <= 0, ln.slope * g, g)
        g = g @ ln.W
    return g


def log_softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=float)
    m = np.max(z, axis=-1, keepdims=True)
    shifted = z - m
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def softmax(logits) -> np.ndarray:
    return np.exp(log_softmax(logits))


def cross_entropy(logits, label) -> float:
    """-log softmax(logits)[label] for one sample, or the batch mean for (B, 2) logits."""
    z = np.asarray(logits, dtype=float)
    if z.ndim == 1:
        return float(-log_softmax(z)[int(label)])
    y = np.asarray(label, dtype=int)
    return float(-np.mean(log_softmax(z)[np.arange(len(y)), y]))


def cross_entropy_and_grads(net: Network, X, y, train: bool = False, rng=None):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    logits, cache = net.forward(X, train=train, rng=rng, keep_cache=True)
    lsm = log_softmax(logits)
    loss = float(-np.mean(lsm[np.arange(len(y)), y]))
    d = np.exp(lsm)
    d[np.arange(len(y)), y] -= 1.0
    d /= len(y)
    return loss, net.backward(cache, d)


# ---------------------------------------------------------------- optimizer

class Adagrad:
    """state += g**2; param -= lr * g / (sqrt(state) + eps)."""

    def __init__(self, nets: Iterable[Network], lr: float = 0.1, eps: float = 1e-10):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.nets = list(nets)
        self.lr = lr
        self.eps = eps
        self.state = [[{k: np.zeros_like(v, dtype=float) for k, v in ln.arrays().items()}
                       for ln in net.layers] for net in self.nets]

    def step(self, grads_per_net: Sequence[Sequence[dict[str, np.ndarray]]]) -> None:
        for net, net_state, net_grads in zip(self.nets, self.state, grads_per_net):
            for ln, st, g in zip(net.layers, net_state, net_grads):
                for key in ("W", "b", "slope"):
                    adagrad_update(getattr(ln, key), g[key], st[key], self.lr, self.eps)


def adagrad_update(param: np.ndarray, grad, accum: np.ndarray, lr: float, eps: float = 1e-10) -> None:
    """In-place elementwise Adagrad update of ``param`` and its accumulator."""
    g = np.asarray(grad, dtype=float)
    if g.ndim == 0:
        accum += g * g
        param -= lr * g / (np.sqrt(accum) + eps)
        return
    tmp = np.multiply(g, g)
    accum += tmp
    np.sqrt(accum, out=tmp)
    tmp += eps
    np.divide(g, tmp, out=tmp)
    tmp *= lr
    param -= tmp


# ---------------------------------------------------------------- training helpers

@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.1
    lam: float = 0.001
    dropout: float = 0.5
    epochs: int = 200
    batch_size: int = 64
    seed: int = 0
    eps: float = 1e-10

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")

    def replace(self, **kw) -> "TrainConfig":
        return dataclasses.replace(self, **kw)


def epoch_batches(n: int, batch_size: int, seed: int, epoch: int) -> list[np.ndarray]:
    """Index minibatches for one epoch, shuffled by an epoch-indexed seeded RNG."""
    order = np.random.default_rng([int(seed), int(epoch), 0xB47C]).permutation(n)
    return [order[i: i + batch_size] for i in range(0, n, batch_size)]


# ---------------------------------------------------------------- weight files

def network_to_bytes(net: Network, tags: dict | None = None) -> bytes:
    payload = b"".join(
        np.asarray(ln.W, dtype="<f4").tobytes() + np.asarray(ln.b, dtype="<f4").tobytes()
        for ln in net.layers
    )
    header = {
        "format_version": WEIGHT_FORMAT_VERSION,
        "tags": tags or {},
        "layers": [
            {
                "in": ln.in_dim,
                "out": ln.out_dim,
                "slope": float(np.float32(ln.slope)),
                "dropout": ln.dropout,
                "activation": ln.activation,
            }
            for ln in net.layers
        ],
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }
    hb = json.dumps(header, sort_keys=True).encode()
    return WEIGHT_MAGIC + len(hb).to_bytes(4, "little") + hb + payload


def network_from_bytes(blob: bytes, source: str = "<bytes>") -> tuple[Network, dict]:
    if not blob.startswith(WEIGHT_MAGIC):
        raise WeightFormatError(f"{source}: not a weight file")
    off = len(WEIGHT_MAGIC)
    hlen = int.from_bytes(blob[off: off + 4], "little")
    header = json.loads(blob[off + 4: off + 4 + hlen])
    if header.get("format_version") != WEIGHT_FORMAT_VERSION:
        raise WeightFormatError(f"{source}: unsupported weight format {header.get('format_version')!r}")
    payload = blob[off + 4 + hlen:]
    if hashlib.sha256(payload).hexdigest() != header["payload_sha256"]:
        raise WeightFormatError(f"{source}: weight payload checksum mismatch")
    flat = np.frombuffer(payload, dtype="<f4")
    layers, pos = [], 0
    for spec in header["layers"]:
        nw = spec["out"] * spec["in"]
        W = flat[pos: pos + nw].reshape(spec["out"], spec["in"]).astype(np.float32)
        pos += nw
        b = flat[pos: pos + spec["out"]].astype(np.float32)
        pos += spec["out"]
        layers.append(DenseLayer(W, b, np.array(spec["slope"], dtype=np.float32),
                                 bool(spec["activation"]), float(spec["dropout"])))
    if pos != flat.size:
        raise WeightFormatError(f"{source}: payload size does not match header")
    return Network(layers), header["tags"]


def save_network(path: str | Path, net: Network, tags: dict | None = None) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(network_to_bytes(net, tags))
    tmp.replace(path)


def load_network(path: str | Path) -> tuple[Network, dict]:
    path = Path(path)
    return network_from_bytes(path.read_bytes(), str(path))
