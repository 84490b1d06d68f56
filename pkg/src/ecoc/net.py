"""Minimal feedforward network and SGD trainer.

Hidden layers are affine + rectifier; the output layer is affine with
identity activation, so the classification head (distance decoder, or plain
softmax for the one-hot baseline) owns all output nonlinearity.  Everything
is deterministic for a fixed seed: initialization, shuffling, and batch
order, so two identical runs produce bitwise-identical metrics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._util import atomic_write, fmt_float
from .codes import CodeKind, CodeMatrix
from .datasets import Dataset
from .decoder import batch_loss_grad, decoding_matrix, predict_batch

GRAD_ACTIVE_EPS = 1e-8

_MODEL_MAGIC = b"ECOCNET\x01"


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged at epoch {epoch} (non-finite loss)")
        self.epoch = epoch


@dataclass
class NetParams:
    """Per-layer (weight, bias) pairs; weight shape (out, in), bias (out,)."""

    layers: list[tuple[np.ndarray, np.ndarray]]

    @property
    def layer_sizes(self) -> list[int]:
        """Unit counts from input to output."""
        return [self.layers[0][0].shape[1]] + [w.shape[0] for w, _ in self.layers]


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for :func:`train`.

    ``lr_decay_epoch`` applies a one-time learning-rate cut: from that epoch
    on, the rate is ``learning_rate * lr_decay_factor``.  ``head`` picks the
    loss: ``"decoder"`` for the distance head, ``"softmax"`` for the plain
    cross-entropy baseline, ``"auto"`` for softmax on one-hot codes and the
    decoder otherwise.  ``momentum`` is an extension point, default off.
    """

    epochs: int
    batch_size: int
    learning_rate: float
    lr_decay_epoch: int | None = None
    lr_decay_factor: float = 0.1
    seed: int = 0
    shuffle: bool = True
    head: str = "auto"
    momentum: float = 0.0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0 < self.lr_decay_factor <= 1:
            raise ValueError(
                f"lr_decay_factor must be in (0, 1], got {self.lr_decay_factor}"
            )
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.head not in ("auto", "decoder", "softmax"):
            raise ValueError(f"head must be auto, decoder, or softmax, got {self.head!r}")


@dataclass(frozen=True)
class MetricsRow:
    """One metrics line: per-epoch, per-split.

    ``grad_nonzero_ratio`` is a training-batch quantity (fraction of
    output-layer coordinates whose batch update vector exceeds 1e-8 in
    absolute value, averaged over the epoch's batches); eval rows carry None.
    """

    epoch: int
    split: str
    loss: float
    accuracy: float
    grad_nonzero_ratio: float | None = None


def init(layer_sizes: list[int], seed: int = 0) -> NetParams:
    """Gaussian init: weights ~ N(0, 1/fan_in), biases zero."""
    if len(layer_sizes) < 2:
        raise ValueError(f"need at least input and output sizes, got {layer_sizes}")
    if any(s < 1 for s in layer_sizes):
        raise ValueError(f"layer sizes must be >= 1, got {layer_sizes}")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        w = rng.standard_normal((fan_out, fan_in)) / np.sqrt(fan_in)
        layers.append((w, np.zeros(fan_out)))
    return NetParams(layers)


def _forward_batch(p: NetParams, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Batch forward pass; cache holds the input to each layer."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != p.layers[0][0].shape[1]:
        raise ValueError(
            f"input shape {a.shape} does not match net input size "
            f"{p.layers[0][0].shape[1]}"
        )
    cache = []
    for i, (w, b) in enumerate(p.layers):
        cache.append(a)
        a = a @ w.T + b
        if i < len(p.layers) - 1:
            a = np.maximum(a, 0.0)
    return a, cache


def _backward_batch(
    p: NetParams, cache: list[np.ndarray], grad_z: np.ndarray
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Mean parameter gradients for a batch of per-sample output gradients."""
    grad_z = np.asarray(grad_z, dtype=np.float64)
    batch = grad_z.shape[0]
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(p.layers)  # type: ignore[list-item]
    delta = grad_z
    for i in range(len(p.layers) - 1, -1, -1):
        w, _ = p.layers[i]
        a = cache[i]
        grads[i] = (delta.T @ a / batch, delta.mean(axis=0))
        if i > 0:
            delta = delta @ w
            # rectifier gate: the cached input to layer i is the rectified
            # output of layer i-1, zero exactly where the unit was off
            delta = delta * (cache[i] > 0)
    return grads


def net_forward(p: NetParams, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Single-sample forward pass; returns (z, cache for net_backward)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a feature vector, got shape {x.shape}")
    z, cache = _forward_batch(p, x[None, :])
    return z[0], cache


def net_outputs(p: NetParams, x: np.ndarray) -> np.ndarray:
    """Batch forward pass returning only the outputs, one row per sample."""
    z, _ = _forward_batch(p, x)
    return z


def net_backward(
    p: NetParams, cache: list[np.ndarray], grad_z: np.ndarray
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Parameter gradients for one sample, given d loss / d z."""
    grad_z = np.asarray(grad_z, dtype=np.float64)
    if grad_z.ndim != 1:
        raise ValueError(f"expected an output gradient vector, got shape {grad_z.shape}")
    return _backward_batch(p, cache, grad_z[None, :])


def _softmax_ce_batch(
    z: np.ndarray, ys: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Plain softmax cross-entropy on raw outputs (one-hot baseline head).

    Returns (losses, probs, grads) like the decoder's batch op.
    """
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    probs = e / e.sum(axis=1, keepdims=True)
    idx = np.arange(z.shape[0])
    losses = -np.log(probs[idx, ys])
    grads = probs.copy()
    grads[idx, ys] -= 1.0
    return losses, probs, grads


def _resolve_head(cfg: TrainConfig, code: CodeMatrix) -> str:
    if cfg.head != "auto":
        return cfg.head
    return "softmax" if code.kind is CodeKind.ONE_HOT else "decoder"


def _instrument_vectors(
    head: str, z: np.ndarray, ys: np.ndarray, probs: np.ndarray, grads: np.ndarray
) -> np.ndarray:
    """Per-sample output-layer update vectors whose support is counted.

    For the decoder head this is the true loss gradient (dense in general).
    For the softmax baseline it is the hard label/prediction mismatch
    ``e_pred - e_true``: at most two active coordinates per sample, and the
    zero vector once the sample is classified correctly.
    """
    if head == "decoder":
        return grads
    preds = z.argmax(axis=1)
    out = np.zeros_like(probs)
    idx = np.arange(z.shape[0])
    out[idx, preds] += 1.0
    out[idx, ys] -= 1.0
    return out


def _epoch_metrics(
    p: NetParams, x: np.ndarray, ys: np.ndarray, head: str, code: CodeMatrix
) -> tuple[float, float]:
    """Full-pass mean loss and accuracy under the trained head."""
    z, _ = _forward_batch(p, x)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if head == "decoder":
            losses, _, _ = batch_loss_grad(z, code, ys)
            preds = predict_batch(z, decoding_matrix(code))
        else:
            losses, _, _ = _softmax_ce_batch(z, ys)
            preds = z.argmax(axis=1)
    return float(losses.mean()), float((preds == ys).mean())


def train(
    p: NetParams,
    dataset: Dataset,
    code: CodeMatrix,
    cfg: TrainConfig,
    eval_set: Dataset | None = None,
) -> tuple[NetParams, list[MetricsRow]]:
    """Mini-batch SGD on the mean head loss.

    Per epoch: shuffle (keyed to (seed, epoch)), step over batches, then a
    full evaluation pass on the training set and, when given, the eval set.
    Emits one MetricsRow per epoch per split.  Raises
    :class:`TrainingDivergedError` as soon as any loss goes non-finite.
    """
    if dataset.n != code.n:
        raise ValueError(
            f"dataset has {dataset.n} classes but code has {code.n} codewords"
        )
    out_size = p.layers[-1][0].shape[0]
    head = _resolve_head(cfg, code)
    expected = code.n if head == "softmax" else code.k
    if out_size != expected:
        raise ValueError(
            f"net output size {out_size} does not match {head} head size {expected}"
        )

    x = dataset.features
    ys = dataset.labels
    samples = x.shape[0]
    velocity = [
        (np.zeros_like(w), np.zeros_like(b)) for w, b in p.layers
    ]
    rows: list[MetricsRow] = []

    for epoch in range(cfg.epochs):
        lr = cfg.learning_rate
        if cfg.lr_decay_epoch is not None and epoch >= cfg.lr_decay_epoch:
            lr *= cfg.lr_decay_factor
        if cfg.shuffle:
            order = np.random.default_rng([cfg.seed, epoch]).permutation(samples)
        else:
            order = np.arange(samples)

        ratio_sum = 0.0
        batches = 0
        for start in range(0, samples, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = x[idx], ys[idx]
            z, cache = _forward_batch(p, xb)
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                if head == "decoder":
                    losses, probs, grads = batch_loss_grad(z, code, yb)
                else:
                    losses, probs, grads = _softmax_ce_batch(z, yb)
            batch_loss = losses.mean()
            if not np.isfinite(batch_loss):
                raise TrainingDivergedError(epoch)

            active = _instrument_vectors(head, z, yb, probs, grads)
            batch_vector = active.mean(axis=0)
            ratio_sum += float(
                (np.abs(batch_vector) > GRAD_ACTIVE_EPS).mean()
            )
            batches += 1

            param_grads = _backward_batch(p, cache, grads)
            new_layers = []
            new_velocity = []
            for (w, b), (gw, gb), (vw, vb) in zip(p.layers, param_grads, velocity):
                vw = cfg.momentum * vw - lr * gw
                vb = cfg.momentum * vb - lr * gb
                new_layers.append((w + vw, b + vb))
                new_velocity.append((vw, vb))
            velocity = new_velocity
            p = NetParams(new_layers)

        train_loss, train_acc = _epoch_metrics(p, x, ys, head, code)
        if not np.isfinite(train_loss):
            raise TrainingDivergedError(epoch)
        rows.append(
            MetricsRow(epoch, "train", train_loss, train_acc, ratio_sum / batches)
        )
        if eval_set is not None:
            eval_loss, eval_acc = _epoch_metrics(
                p, eval_set.features, eval_set.labels, head, code
            )
            if not np.isfinite(eval_loss):
                raise TrainingDivergedError(epoch)
            rows.append(MetricsRow(epoch, "eval", eval_loss, eval_acc, None))
    return p, rows


def save_metrics(rows: list[MetricsRow], path: str) -> None:
    """Write the metrics CSV: header epoch,split,loss,accuracy,grad_nonzero_ratio."""
    with atomic_write(path) as fh:
        fh.write("epoch,split,loss,accuracy,grad_nonzero_ratio\n")
        for r in rows:
            ratio = "" if r.grad_nonzero_ratio is None else fmt_float(r.grad_nonzero_ratio)
            fh.write(
                f"{r.epoch},{r.split},{fmt_float(r.loss)},{fmt_float(r.accuracy)},{ratio}\n"
            )


def save_model(p: NetParams, path: str) -> None:
    """Versioned little-endian dump: magic, layer sizes, float64 parameters."""
    sizes = np.asarray(p.layer_sizes, dtype="<u4")
    with atomic_write(path, binary=True) as fh:
        fh.write(_MODEL_MAGIC)
        fh.write(np.asarray([sizes.size], dtype="<u4").tobytes())
        fh.write(sizes.tobytes())
        for w, b in p.layers:
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_model(path: str) -> NetParams:
    """Read a model written by :func:`save_model`."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(_MODEL_MAGIC):
        raise ValueError(f"{path}: not a model file (bad magic)")
    off = len(_MODEL_MAGIC)
    (count,) = np.frombuffer(blob, dtype="<u4", count=1, offset=off)
    off += 4
    sizes = np.frombuffer(blob, dtype="<u4", count=int(count), offset=off).astype(int)
    off += 4 * int(count)
    if len(sizes) < 2:
        raise ValueError(f"{path}: model needs at least 2 layer sizes")
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = np.frombuffer(blob, dtype="<f8", count=fan_out * fan_in, offset=off)
        off += 8 * fan_out * fan_in
        b = np.frombuffer(blob, dtype="<f8", count=fan_out, offset=off)
        off += 8 * fan_out
        layers.append((w.reshape(fan_out, fan_in).copy(), b.copy()))
    if off != len(blob):
        raise ValueError(f"{path}: trailing bytes after parameters")
    return NetParams(layers)
