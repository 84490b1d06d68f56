"""Code-matrix construction: one-hot, Gaussian, dense random, plus binarization.

A code matrix assigns each of ``n`` classes a length-``k`` codeword (one row
per class).  Training targets the codeword instead of a one-hot indicator,
which lets ``k`` be far smaller than ``n``.  Generators here cover the
data-independent strategies; data-dependent spectral codes live in
:mod:`ecoc.spectral`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

import numpy as np

from ._util import atomic_write, fmt_float


class CodeKind(Enum):
    """How a code matrix was constructed (also its CSV token)."""

    ONE_HOT = "onehot"
    GAUSSIAN = "gaussian"
    DENSE_RANDOM = "dense"
    SPECTRAL = "spectral"


class Binarization(Enum):
    """Thresholding applied to the code values, if any."""

    RAW = "raw"
    ZERO = "zero"
    MEDIAN = "median"


class CodeGenerationError(RuntimeError):
    """No acceptable code matrix could be produced."""


class BinarizationCollisionError(ValueError):
    """Thresholding collapsed two codewords into the same row."""


def _derive_normalize_rows(kind: CodeKind, binarization: Binarization) -> bool:
    # Raw spectral/gaussian rows have uneven norms; unit rows keep the best
    # attainable distance score equal across classes.  Binary and one-hot
    # rows are left as stored.
    return binarization is Binarization.RAW and kind in (
        CodeKind.SPECTRAL,
        CodeKind.GAUSSIAN,
    )


@dataclass(frozen=True)
class CodeMatrix:
    """An ``n x k`` real matrix whose row ``i`` is the codeword of class ``i``.

    Parameters
    ----------
    values : ndarray
        Shape ``(n, k)``, finite, float64.
    kind : CodeKind
        Construction strategy.
    binarization : Binarization
        ``RAW`` for real-valued codes, else the thresholding that produced
        the ``{-1, +1}`` entries.
    normalize_rows : bool, optional
        Whether the decoder should L2-normalize rows before measuring
        distances.  Defaults to on for raw spectral/gaussian codes and off
        otherwise.

    Notes
    -----
    Generators in this package guarantee pairwise-distinct rows (two classes
    sharing a codeword are indistinguishable); the constructor itself does
    not enforce it, because a deliberately short spectral code can assign one
    value per cluster rather than per class.
    """

    values: np.ndarray
    kind: CodeKind = CodeKind.GAUSSIAN
    binarization: Binarization = Binarization.RAW
    normalize_rows: bool | None = field(default=None)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"code values must be 2-d, got shape {values.shape}")
        n, k = values.shape
        if n < 2:
            raise ValueError(f"need at least 2 classes, got n={n}")
        if k < 1:
            raise ValueError(f"need at least 1 code bit, got k={k}")
        if not np.isfinite(values).all():
            raise ValueError("code values must be finite")
        if self.kind is CodeKind.ONE_HOT:
            if k != n:
                raise ValueError(f"one-hot code must be square, got {n}x{k}")
            if not np.isin(values, (0.0, 1.0)).all():
                raise ValueError("one-hot code values must be 0 or 1")
            if not np.array_equal(values.sum(axis=1), np.ones(n)):
                raise ValueError("each one-hot row must contain exactly one 1")
        if self.binarization is not Binarization.RAW:
            if not np.isin(values, (-1.0, 1.0)).all():
                raise ValueError("binarized code values must be -1 or +1")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.normalize_rows is None:
            object.__setattr__(
                self,
                "normalize_rows",
                _derive_normalize_rows(self.kind, self.binarization),
            )

    @property
    def n(self) -> int:
        """Number of classes (rows)."""
        return self.values.shape[0]

    @property
    def k(self) -> int:
        """Number of code bits (columns)."""
        return self.values.shape[1]


def one_hot(n: int) -> CodeMatrix:
    """Identity-pattern code: class ``i`` maps to indicator vector ``e_i``.

    Requires ``n >= 2``.
    """
    if n < 2:
        raise ValueError(f"need at least 2 classes, got n={n}")
    return CodeMatrix(np.eye(n), kind=CodeKind.ONE_HOT, binarization=Binarization.RAW)


def _rows_distinct(values: np.ndarray) -> bool:
    return np.unique(values, axis=0).shape[0] == values.shape[0]


def gaussian_code(n: int, k: int, seed: int = 0) -> CodeMatrix:
    """Code with i.i.d. standard-normal entries.

    Deterministic for a fixed ``seed``.  On the (measure-zero) event of
    duplicate rows the seed is incremented, up to 10 retries.
    """
    if n < 2:
        raise ValueError(f"need at least 2 classes, got n={n}")
    if k < 1:
        raise ValueError(f"need at least 1 code bit, got k={k}")
    for attempt in range(11):
        rng = np.random.default_rng(seed + attempt)
        values = rng.standard_normal((n, k))
        if _rows_distinct(values):
            return CodeMatrix(values, kind=CodeKind.GAUSSIAN)
    raise CodeGenerationError(
        f"duplicate rows persisted for seeds {seed}..{seed + 10} (n={n}, k={k})"
    )


def dense_candidate_stream(
    n: int, k: int, candidates: int, seed: int = 0
) -> Iterator[np.ndarray]:
    """Yield the deterministic candidate sequence used by dense_random_code.

    Each candidate is an ``n x k`` matrix of ``{-1, +1}`` entries, each +1
    with probability 0.5.  Exposed so the selection can be re-audited
    against the exact list the generator saw.
    """
    rng = np.random.default_rng(seed)
    for _ in range(candidates):
        yield (rng.integers(0, 2, size=(n, k)) * 2 - 1).astype(np.float64)


def _min_row_hamming(values: np.ndarray) -> int:
    """Minimum pairwise Hamming distance between sign patterns of rows."""
    signs = np.sign(values)
    n = signs.shape[0]
    iu = np.triu_indices(n, k=1)
    disagree = (signs[iu[0]] != signs[iu[1]]).sum(axis=1)
    return int(disagree.min())


def _max_abs_pair_cosine(vectors: np.ndarray) -> float:
    """Largest |cosine| over distinct pairs of the given row vectors.

    Zero-norm vectors contribute 0 (no direction, no correlation).  The
    denominator is sqrt of the product of squared norms, which is exact for
    integer-valued codes, so binary anticorrelated rows score exactly 1.
    """
    m = vectors.shape[0]
    if m < 2:
        return 0.0
    gram = vectors @ vectors.T
    sq = np.diag(gram).copy()
    denom = np.sqrt(np.outer(sq, sq))
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where(denom > 1e-30, gram / np.where(denom > 0, denom, 1.0), 0.0)
    iu = np.triu_indices(m, k=1)
    return float(np.abs(cos[iu]).max())


def dense_random_code(
    n: int, k: int, candidates: int = 10000, seed: int = 0
) -> CodeMatrix:
    """Best-of-``candidates`` random ``{-1, +1}`` code.

    Selection maximizes the minimum pairwise row Hamming distance; ties are
    broken by the smaller maximum absolute column-pair correlation, then by
    candidate index.  Candidates with duplicate rows are discarded; if none
    survive, raises :class:`CodeGenerationError`.
    """
    if n < 2:
        raise ValueError(f"need at least 2 classes, got n={n}")
    if k < 1:
        raise ValueError(f"need at least 1 code bit, got k={k}")
    if candidates < 1:
        raise ValueError(f"need at least 1 candidate, got {candidates}")

    hammings = [
        _min_row_hamming(c) for c in dense_candidate_stream(n, k, candidates, seed)
    ]
    best_h = max(hammings)
    if best_h < 1:
        raise CodeGenerationError(
            f"no candidate out of {candidates} had distinct rows (n={n}, k={k})"
        )

    # Second deterministic pass: column correlations only for the ties.
    best: tuple[float, int] | None = None
    best_values: np.ndarray | None = None
    for idx, cand in enumerate(dense_candidate_stream(n, k, candidates, seed)):
        if hammings[idx] != best_h:
            continue
        corr = _max_abs_pair_cosine(cand.T)
        if best is None or (corr, idx) < best:
            best = (corr, idx)
            best_values = cand
    assert best_values is not None
    return CodeMatrix(best_values, kind=CodeKind.DENSE_RANDOM)


def default_code_length(n: int) -> int:
    """Recommended bit count for ``n`` classes: floor(10 * log2(n))."""
    if n < 2:
        raise ValueError(f"need at least 2 classes, got n={n}")
    return math.floor(10 * math.log2(n))


def binarize(code: CodeMatrix, strategy: Binarization) -> CodeMatrix:
    """Threshold a real-valued code to ``{-1, +1}``.

    ``ZERO``: value > 0 maps to +1, else -1.  ``MEDIAN``: per-row threshold
    at that row's median, value >= median maps to +1 (ties included).
    Raises :class:`BinarizationCollisionError` if two rows end up identical,
    and rejects one-hot codes (their 0/1 rows are already categorical).
    """
    if strategy not in (Binarization.ZERO, Binarization.MEDIAN):
        raise ValueError(f"binarize strategy must be zero or median, got {strategy}")
    if code.kind is CodeKind.ONE_HOT:
        raise ValueError("one-hot codes cannot be binarized; use them raw")
    if strategy is Binarization.ZERO:
        values = np.where(code.values > 0, 1.0, -1.0)
    else:
        medians = np.median(code.values, axis=1, keepdims=True)
        values = np.where(code.values >= medians, 1.0, -1.0)
    if not _rows_distinct(values):
        raise BinarizationCollisionError(
            f"{strategy.value} thresholding collapsed two codewords; "
            "use raw values or more bits"
        )
    return CodeMatrix(values, kind=code.kind, binarization=strategy)


@dataclass(frozen=True)
class CodeMetrics:
    """Separation and balance statistics of a code matrix."""

    min_row_hamming: int
    max_abs_row_corr: float
    max_abs_col_corr: float
    column_balance: np.ndarray


def code_metrics(code: CodeMatrix) -> CodeMetrics:
    """Measure row separation, row/column correlation, and column balance.

    Hamming distance counts sign disagreements (entry sign in {-1, 0, +1}),
    so it is exact for binary codes and a sign-pattern summary otherwise.
    Correlations are uncentered (cosine); a constant row such as ``(+1, +1)``
    still correlates perfectly with its negation.
    """
    return CodeMetrics(
        min_row_hamming=_min_row_hamming(code.values),
        max_abs_row_corr=_max_abs_pair_cosine(code.values),
        max_abs_col_corr=_max_abs_pair_cosine(code.values.T),
        column_balance=code.values.mean(axis=0),
    )


def save_code_csv(code: CodeMatrix, path: str) -> None:
    """Write a code matrix as CSV: header ``n,k,kind,binarization``, then rows.

    Values use shortest round-trip decimal formatting, so binary codes are
    restored bit-exactly.
    """
    with atomic_write(path) as fh:
        fh.write(
            f"{code.n},{code.k},{code.kind.value},{code.binarization.value}\n"
        )
        for row in code.values:
            fh.write(",".join(fmt_float(v) for v in row) + "\n")


def load_code_csv(path: str) -> CodeMatrix:
    """Read a code matrix written by :func:`save_code_csv`."""
    with open(path, "r", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty code file")
    header = lines[0].split(",")
    if len(header) != 4:
        raise ValueError(
            f"{path}:1: expected header 'n,k,kind,binarization', got {lines[0]!r}"
        )
    try:
        n, k = int(header[0]), int(header[1])
        kind = CodeKind(header[2])
        binarization = Binarization(header[3])
    except ValueError as exc:
        raise ValueError(f"{path}:1: bad header: {exc}") from None
    body = lines[1:]
    if len(body) != n:
        raise ValueError(f"{path}: expected {n} codeword rows, found {len(body)}")
    values = np.empty((n, k))
    for i, line in enumerate(body):
        parts = line.split(",")
        if len(parts) != k:
            raise ValueError(
                f"{path}:{i + 2}: expected {k} values, found {len(parts)}"
            )
        try:
            values[i] = [float(p) for p in parts]
        except ValueError:
            raise ValueError(f"{path}:{i + 2}: non-numeric code value") from None
    return CodeMatrix(values, kind=kind, binarization=binarization)
