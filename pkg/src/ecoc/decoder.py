"""Distance-decoder classification head.

The network output ``z`` is L2-normalized to ``u``, scored against every
codeword by negative half squared Euclidean distance, and pushed through a
softmax; cross-entropy against the true class gives the loss.  Prediction
is the nearest codeword, which is exactly the argmax of those scores.

The backward pass is analytic.  With ``g = probs - e_y`` (``e_y`` the true
class indicator) and ``M`` the effective decoding matrix, the distance and
softmax stages give ``d loss / d u = M^T g`` (the ``u``-proportional parts
cancel because ``g`` sums to zero), and the normalization stage projects out
the radial direction and rescales:

    grad_z = (a - (u . a) u) / ||z||,   a = M^T g

so ``grad_z . z = 0`` always; scaling ``z`` never changes the loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import CodeMatrix

EPS_NORM = 1e-12

_PREDICT_CHUNK = 1024


@dataclass(frozen=True)
class DecoderLossResult:
    """Loss, class probabilities, and (optionally) the gradient w.r.t. z."""

    loss: float
    probs: np.ndarray
    grad_z: np.ndarray | None = None


def normalize(z: np.ndarray) -> np.ndarray:
    """Return z / ||z||_2.  Rejects (near-)zero vectors."""
    z = np.asarray(z, dtype=np.float64)
    norm = np.linalg.norm(z)
    if norm <= EPS_NORM:
        raise ValueError("cannot normalize a zero vector")
    return z / norm


def decoding_matrix(code: CodeMatrix) -> np.ndarray:
    """The codeword matrix the decoder actually measures distances against.

    Rows are L2-normalized when the code's ``normalize_rows`` option is on,
    so each class can reach the same best score.
    """
    if not code.normalize_rows:
        return code.values
    norms = np.linalg.norm(code.values, axis=1)
    if (norms <= EPS_NORM).any():
        bad = np.flatnonzero(norms <= EPS_NORM)
        raise ValueError(f"zero-norm codewords cannot be normalized: rows {bad.tolist()}")
    return code.values / norms[:, None]


def distances(u: np.ndarray, code: CodeMatrix) -> np.ndarray:
    """Score vector D with D_i = -0.5 * ||m_i - u||^2 for codeword rows m_i."""
    u = np.asarray(u, dtype=np.float64)
    m = decoding_matrix(code)
    if u.shape != (m.shape[1],):
        raise ValueError(f"output length {u.shape} does not match code bits {m.shape[1]}")
    return -0.5 * ((m - u) ** 2).sum(axis=1)


def decoder_softmax(d: np.ndarray) -> np.ndarray:
    """Max-shifted softmax over the score vector."""
    d = np.asarray(d, dtype=np.float64)
    shifted = d - d.max()
    e = np.exp(shifted)
    return e / e.sum()


def forward(z: np.ndarray, code: CodeMatrix, y: int) -> DecoderLossResult:
    """Loss and probabilities for one sample (grad_z left unset)."""
    if not 0 <= y < code.n:
        raise ValueError(f"label {y} out of range for {code.n} classes")
    probs = decoder_softmax(distances(normalize(z), code))
    return DecoderLossResult(loss=float(-np.log(probs[y])), probs=probs)


def backward(
    z: np.ndarray, code: CodeMatrix, y: int, probs: np.ndarray
) -> np.ndarray:
    """Gradient of the loss w.r.t. z, given forward's probs for the same z."""
    z = np.asarray(z, dtype=np.float64)
    m = decoding_matrix(code)
    norm = np.linalg.norm(z)
    if norm <= EPS_NORM:
        raise ValueError("cannot normalize a zero vector")
    u = z / norm
    g = probs.copy()
    g[y] -= 1.0
    a = m.T @ g
    return (a - (u @ a) * u) / norm


def predict(z: np.ndarray, code: CodeMatrix) -> int:
    """Nearest-codeword class; ties go to the smallest class id."""
    return int(np.argmax(distances(normalize(z), code)))


def _scores(z: np.ndarray, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample score matrix D (s x n) against decoding rows, plus ||z||."""
    norms = np.linalg.norm(z, axis=1)
    if (norms <= EPS_NORM).any():
        raise ValueError("cannot normalize a zero vector")
    u = z / norms[:, None]
    d = -0.5 * ((u[:, None, :] - m[None, :, :]) ** 2).sum(axis=2)
    return d, norms


def batch_loss_grad(
    z: np.ndarray, code: CodeMatrix, ys: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized forward+backward over a batch.

    Returns (losses, probs, grads): per-sample loss (s,), probabilities
    (s, n), and loss gradients w.r.t. each z row (s, k).  Matches the
    single-sample operations row by row.
    """
    z = np.asarray(z, dtype=np.float64)
    ys = np.asarray(ys)
    m = decoding_matrix(code)
    if z.ndim != 2 or z.shape[1] != m.shape[1]:
        raise ValueError(f"batch shape {z.shape} does not match code bits {m.shape[1]}")
    if ys.shape != (z.shape[0],):
        raise ValueError("labels must match batch size")
    if ys.size and (ys.min() < 0 or ys.max() >= code.n):
        raise ValueError(f"labels out of range for {code.n} classes")
    d, norms = _scores(z, m)
    u = z / norms[:, None]
    shifted = d - d.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    probs = e / e.sum(axis=1, keepdims=True)
    idx = np.arange(z.shape[0])
    losses = -np.log(probs[idx, ys])
    g = probs.copy()
    g[idx, ys] -= 1.0
    a = g @ m
    radial = (a * u).sum(axis=1)
    grads = (a - radial[:, None] * u) / norms[:, None]
    return losses, probs, grads


def predict_batch(z: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Nearest-codeword class per row of z, against decoding rows m.

    Takes the decoding matrix directly so callers can evaluate truncated
    codes; pass ``decoding_matrix(code)`` for the standard full-code path.
    """
    z = np.asarray(z, dtype=np.float64)
    preds = np.empty(z.shape[0], dtype=np.int64)
    for start in range(0, z.shape[0], _PREDICT_CHUNK):
        chunk = z[start : start + _PREDICT_CHUNK]
        d, _ = _scores(chunk, m)
        preds[start : start + chunk.shape[0]] = d.argmax(axis=1)
    return preds
