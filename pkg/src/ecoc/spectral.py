"""Data-based codes from the spectral decomposition of a class-similarity graph.

Pipeline: class-mean features -> cosine similarity graph -> symmetric
normalized Laplacian -> eigenvectors by ascending eigenvalue.  Eigenvector
``j`` relaxes the ``j``-th cheapest normalized-cut bi-partition of the
classes, so the first code bits separate the coarsest class clusters and
later bits refine them.  Values are kept raw rather than thresholded; the
decoder reads them as partition likelihoods.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import atomic_write, fmt_float
from .codes import Binarization, CodeKind, CodeMatrix


class ConvergenceError(RuntimeError):
    """Eigensolver failed to converge within the sweep budget."""


@dataclass(frozen=True)
class SimilarityGraph:
    """Symmetric non-negative class-similarity matrix with zero diagonal.

    Every node must have strictly positive degree (row sum), since the
    normalized Laplacian rescales by inverse square-root degrees.
    """

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be square, got shape {w.shape}")
        if w.shape[0] < 2:
            raise ValueError(f"need at least 2 classes, got n={w.shape[0]}")
        if not np.isfinite(w).all():
            raise ValueError("similarity weights must be finite")
        if not np.array_equal(w, w.T):
            raise ValueError("similarity weights must be exactly symmetric")
        if (w < 0).any():
            raise ValueError("similarity weights must be non-negative")
        if np.diag(w).any():
            raise ValueError("similarity diagonal must be zero")
        if (w.sum(axis=1) <= 0).any():
            isolated = np.flatnonzero(w.sum(axis=1) <= 0)
            raise ValueError(f"nodes with zero degree: {isolated.tolist()}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues sorted ascending; column i of eigenvectors pairs with
    eigenvalue i and has unit L2 norm."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def similarity_from_class_means(
    features: np.ndarray, labels: np.ndarray, n: int
) -> SimilarityGraph:
    """Cosine similarity of per-class mean features, mapped to [0, 1].

    ``weights[i][j] = (1 + cos(mean_i, mean_j)) / 2`` off the diagonal, zero
    on it.  Every class 0..n-1 needs at least one sample and a nonzero mean.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if features.ndim != 2 or features.shape[0] != labels.shape[0]:
        raise ValueError("features must be (samples, dims) matching labels")
    means = np.empty((n, features.shape[1]))
    for c in range(n):
        mask = labels == c
        if not mask.any():
            raise ValueError(f"class {c} has no samples")
        means[c] = features[mask].mean(axis=0)
    norms = np.linalg.norm(means, axis=1)
    if (norms <= 1e-12).any():
        bad = np.flatnonzero(norms <= 1e-12)
        raise ValueError(f"zero-norm class means for classes {bad.tolist()}")
    unit = means / norms[:, None]
    cos = unit @ unit.T
    cos = (cos + cos.T) / 2  # elementwise-exact symmetry
    w = np.maximum((1.0 + cos) / 2, 0.0)
    np.fill_diagonal(w, 0.0)
    return SimilarityGraph(w)


def normalized_laplacian(g: SimilarityGraph) -> np.ndarray:
    """Symmetric normalized Laplacian  I - D^{-1/2} W D^{-1/2}.

    Positive semidefinite with eigenvalues in [0, 2]; the smallest
    eigenvalue is 0 (eigenvector proportional to sqrt of degrees).
    """
    degrees = g.weights.sum(axis=1)
    if (degrees <= 0).any():
        raise ValueError("zero-degree node makes the Laplacian singular")
    inv_sqrt = 1.0 / np.sqrt(degrees)
    # W_ij / (s_i * s_j) with commutative products keeps exact symmetry.
    lap = np.eye(g.n) - g.weights * np.outer(inv_sqrt, inv_sqrt)
    return lap


def symmetric_eigen(a: np.ndarray, tol: float = 1e-10) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Pivots run in row-major order over the strict upper triangle; each
    rotation zeroes one off-diagonal pair.  Converged when the off-diagonal
    Frobenius norm falls to ``tol`` times the Frobenius norm of the input;
    raises :class:`ConvergenceError` after 100 sweeps without reaching it.
    Eigenvalues are returned ascending (stable order for ties).
    """
    a = np.array(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("matrix entries must be finite")
    if np.abs(a - a.T).max(initial=0.0) > 1e-12:
        raise ValueError("matrix is not symmetric within 1e-12")
    n = a.shape[0]
    if n == 1:
        return EigenDecomposition(a[0].copy(), np.ones((1, 1)))

    norm = np.linalg.norm(a)
    stop = tol * norm
    v = np.eye(n)

    def off_diagonal_norm() -> float:
        off = a - np.diag(np.diag(a))
        return float(np.linalg.norm(off))

    for _ in range(100):
        if off_diagonal_norm() <= stop:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                sign = 1.0 if theta >= 0 else -1.0
                t = sign / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                app, aqq = a[p, p], a[q, q]
                # rotate rows/columns p and q wholesale, then restore the
                # pivot block with the exact compact updates
                ap = a[p].copy()
                aq = a[q].copy()
                a[p] = c * ap - s * aq
                a[q] = s * ap + c * aq
                a[:, p] = a[p]
                a[:, q] = a[q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise ConvergenceError(
            f"Jacobi sweeps did not reach off-diagonal norm {stop:g} in 100 sweeps"
        )

    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues, kind="stable")
    return EigenDecomposition(eigenvalues[order], v[:, order])


def spectral_code(g: SimilarityGraph, k: int, tol: float = 1e-10) -> CodeMatrix:
    """Code whose column j is Laplacian eigenvector j+1 (ascending eigenvalue).

    Eigenvector 0 (constant partition, eigenvalue 0) is skipped, so at most
    ``n - 1`` bits are available.  Values are kept raw.  Each eigenvector is
    flipped, if needed, so its first entry with magnitude above 1e-12 is
    positive; the sign is otherwise arbitrary.
    """
    if k < 1:
        raise ValueError(f"need at least 1 code bit, got k={k}")
    if k > g.n - 1:
        raise ValueError(f"spectral code supports at most n-1={g.n - 1} bits, got k={k}")
    eig = symmetric_eigen(normalized_laplacian(g), tol=tol)
    columns = eig.eigenvectors[:, 1 : k + 1].copy()
    for j in range(k):
        col = columns[:, j]
        nonzero = np.flatnonzero(np.abs(col) > 1e-12)
        if nonzero.size and col[nonzero[0]] < 0:
            columns[:, j] = -col
    return CodeMatrix(columns, kind=CodeKind.SPECTRAL, binarization=Binarization.RAW)


def save_similarity_csv(g: SimilarityGraph, path: str) -> None:
    """Write the weight matrix, one row per line."""
    with atomic_write(path) as fh:
        for row in g.weights:
            fh.write(",".join(fmt_float(v) for v in row) + "\n")


def load_similarity_csv(path: str) -> SimilarityGraph:
    """Read a similarity matrix; tolerate asymmetry up to 1e-9 by averaging."""
    with open(path, "r", newline="") as fh:
        lines = fh.read().splitlines()
    rows = []
    for i, line in enumerate(lines):
        parts = line.split(",")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise ValueError(f"{path}:{i + 1}: non-numeric similarity value") from None
    if not rows:
        raise ValueError(f"{path}: empty similarity file")
    w = np.array(rows, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"{path}: expected a square matrix, got shape {w.shape}")
    if np.abs(w - w.T).max(initial=0.0) > 1e-9:
        raise ValueError(f"{path}: matrix asymmetric beyond 1e-9")
    w = (w + w.T) / 2
    if np.abs(np.diag(w)).max(initial=0.0) > 1e-9:
        raise ValueError(f"{path}: diagonal entries must be zero")
    np.fill_diagonal(w, 0.0)
    return SimilarityGraph(w)
