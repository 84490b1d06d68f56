"""Post-training analyses: confusion counts, code/attribute correlation,
bit ablation, and the gradient-sparsity ratio.

Bit ablation measures how much class information the first ``j`` code
coordinates carry: the trained net's output is truncated to its first ``j``
entries (re-normalized), scored against the first ``j`` columns of the
decoding matrix, and accuracy is recorded per ``j``.  No retraining is
involved, so the curve isolates the code's information content.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._util import atomic_write, fmt_float
from .codes import CodeMatrix
from .datasets import Dataset
from .decoder import decoding_matrix, predict_batch
from .net import NetParams, net_outputs


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[i][j] = samples of true class i predicted as class j."""

    counts: np.ndarray

    @property
    def accuracy(self) -> float:
        total = self.counts.sum()
        if total == 0:
            raise ValueError("confusion matrix has no samples")
        return float(np.trace(self.counts) / total)


def confusion(preds: np.ndarray, labels: np.ndarray, n: int) -> ConfusionMatrix:
    """Count (true, predicted) pairs into an n x n grid."""
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape or preds.ndim != 1:
        raise ValueError("preds and labels must be equal-length vectors")
    for name, ids in (("pred", preds), ("label", labels)):
        if ids.size and (ids.min() < 0 or ids.max() >= n):
            raise ValueError(f"{name} ids must lie in [0, {n})")
    counts = np.zeros((n, n), dtype=np.int64)
    np.add.at(counts, (labels, preds), 1)
    return ConfusionMatrix(counts)


def pcc(xs: np.ndarray, ys: np.ndarray) -> float:
    """Pearson correlation coefficient; rejects constant inputs."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size < 2:
        raise ValueError("need two equal-length vectors of size >= 2")
    xc = xs - xs.mean()
    yc = ys - ys.mean()
    sx = np.sqrt(xc @ xc)
    sy = np.sqrt(yc @ yc)
    if sx <= 0 or sy <= 0:
        raise ValueError("correlation undefined for a zero-variance input")
    return float(np.clip(xc @ yc / (sx * sy), -1.0, 1.0))


def attribute_correlation(
    code: CodeMatrix,
    attributes: np.ndarray,
    names: tuple[str, ...] | None = None,
) -> list[tuple[int, str, float]]:
    """Correlate every code bit with every per-class binary attribute.

    Returns (bit, attribute, r) triples grouped by bit (bits numbered from
    1), attributes sorted by |r| descending within each bit.  Constant
    columns on either side are skipped with a warning, since their
    correlation is undefined.
    """
    attributes = np.asarray(attributes, dtype=np.float64)
    if attributes.ndim != 2 or attributes.shape[0] != code.n:
        raise ValueError(
            f"attribute rows {attributes.shape} must match code classes {code.n}"
        )
    if names is None:
        names = tuple(f"attr{i}" for i in range(attributes.shape[1]))
    if len(names) != attributes.shape[1]:
        raise ValueError("attribute names must match attribute columns")

    constant_attrs = [a for a in range(attributes.shape[1]) if np.ptp(attributes[:, a]) == 0]
    for a in constant_attrs:
        warnings.warn(f"skipping zero-variance attribute {names[a]!r}", stacklevel=2)

    table: list[tuple[int, str, float]] = []
    for bit in range(code.k):
        column = code.values[:, bit]
        if np.ptp(column) == 0:
            warnings.warn(f"skipping zero-variance code bit {bit + 1}", stacklevel=2)
            continue
        scored = [
            (bit + 1, names[a], pcc(column, attributes[:, a]))
            for a in range(attributes.shape[1])
            if a not in constant_attrs
        ]
        scored.sort(key=lambda row: -abs(row[2]))
        table.extend(scored)
    return table


def bit_ablation(
    p: NetParams, dataset: Dataset, code: CodeMatrix, js: list[int]
) -> list[tuple[int, float]]:
    """Accuracy using only the first j output coordinates, for each j.

    The truncated output vector is re-normalized; decoding rows are
    truncated without re-normalization.  j = k reproduces the full model's
    predictions exactly.
    """
    for j in js:
        if not 1 <= j <= code.k:
            raise ValueError(f"prefix length {j} outside 1..{code.k}")
    z = net_outputs(p, dataset.features)
    if z.shape[1] != code.k:
        raise ValueError(
            f"net output size {z.shape[1]} does not match code bits {code.k}"
        )
    m = decoding_matrix(code)
    out = []
    for j in js:
        preds = predict_batch(z[:, :j], m[:, :j])
        out.append((j, float((preds == dataset.labels).mean())))
    return out


def sparsity_ratio(batch_size: int, n: int) -> float:
    """Fraction of output units a mini-batch can update at most: bs / n."""
    if batch_size < 1 or n < 1:
        raise ValueError("batch_size and n must both be >= 1")
    return batch_size / n


def save_confusion_csv(cm: ConfusionMatrix, path: str) -> None:
    """Grid CSV: header row of predicted ids, then one row per true class."""
    n = cm.counts.shape[0]
    with atomic_write(path) as fh:
        fh.write("true\\pred," + ",".join(str(j) for j in range(n)) + "\n")
        for i, row in enumerate(cm.counts):
            fh.write(str(i) + "," + ",".join(str(int(v)) for v in row) + "\n")


def save_correlation_csv(table: list[tuple[int, str, float]], path: str) -> None:
    """Rows of bit,attribute,r."""
    with atomic_write(path) as fh:
        fh.write("bit,attribute,r\n")
        for bit, name, r in table:
            fh.write(f"{bit},{name},{fmt_float(r)}\n")


def save_ablation_csv(pairs: list[tuple[int, float]], path: str) -> None:
    """Rows of bits,accuracy."""
    with atomic_write(path) as fh:
        fh.write("bits,accuracy\n")
        for j, acc in pairs:
            fh.write(f"{j},{fmt_float(acc)}\n")
