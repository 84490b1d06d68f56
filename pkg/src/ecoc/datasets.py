"""Synthetic hierarchical datasets and plain-CSV dataset I/O.

The generator plants a balanced class tree in feature space: each level of
the tree shifts its subtree's center by a fresh random direction whose
magnitude halves per level, so coarse splits are geometrically wider than
fine ones.  Every internal tree node also defines a binary per-class
attribute (does this class descend from the node's first child?), giving a
ground-truth table for code/attribute correlation studies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import atomic_write, fmt_float


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with integer labels and an optional per-class attribute table."""

    features: np.ndarray
    labels: np.ndarray
    n: int
    attributes: np.ndarray | None = None
    attribute_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise ValueError(f"features must be 2-d, got shape {features.shape}")
        if labels.shape != (features.shape[0],):
            raise ValueError("labels must be one id per feature row")
        if not np.isfinite(features).all():
            raise ValueError("feature values must be finite")
        if self.n < 1:
            raise ValueError(f"class count must be >= 1, got {self.n}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.n):
            raise ValueError(f"labels must lie in [0, {self.n})")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        if self.attributes is not None:
            attrs = np.asarray(self.attributes, dtype=np.float64)
            if attrs.ndim != 2 or attrs.shape[0] != self.n:
                raise ValueError(
                    f"attributes must have one row per class, got shape {attrs.shape}"
                )
            if not np.isin(attrs, (0.0, 1.0)).all():
                raise ValueError("attribute entries must be 0 or 1")
            object.__setattr__(self, "attributes", attrs)
            if self.attribute_names is not None:
                names = tuple(self.attribute_names)
                if len(names) != attrs.shape[1]:
                    raise ValueError("attribute names must match attribute columns")
                object.__setattr__(self, "attribute_names", names)

    @property
    def samples(self) -> int:
        return self.features.shape[0]


def synth_hierarchical(
    depth: int,
    branching: int,
    samples_per_class: int,
    class_sep: float,
    noise_sigma: float,
    p: int,
    seed: int = 0,
) -> Dataset:
    """Balanced class tree with branching^depth leaf classes.

    Class centers follow a random tree walk: a node at tree depth d >= 1
    offsets its parent's center by ``class_sep * 2**-(d-1)`` in a fresh
    random unit direction, so the top split is the widest.  Samples add
    i.i.d. ``N(0, noise_sigma^2)`` per coordinate.  One attribute column per
    internal node (breadth-first order), set to 1 for classes descending
    from that node's first child.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if branching < 2:
        raise ValueError(f"branching must be >= 2, got {branching}")
    if p < depth:
        raise ValueError(f"feature dim must be >= depth, got p={p} depth={depth}")
    if samples_per_class < 1:
        raise ValueError(f"samples_per_class must be >= 1, got {samples_per_class}")
    if class_sep < 0 or noise_sigma < 0:
        raise ValueError("class_sep and noise_sigma must be non-negative")

    rng = np.random.default_rng(seed)

    def unit_direction() -> np.ndarray:
        while True:
            v = rng.standard_normal(p)
            norm = np.linalg.norm(v)
            if norm > 1e-12:
                return v / norm

    # Breadth-first walk; a node is (path tuple, center).
    level = [((), np.zeros(p))]
    internal_paths: list[tuple[int, ...]] = []
    for d in range(1, depth + 1):
        internal_paths.extend(path for path, _ in level)
        magnitude = class_sep * 2.0 ** -(d - 1)
        nxt = []
        for path, center in level:
            for child in range(branching):
                nxt.append((path + (child,), center + magnitude * unit_direction()))
        level = nxt

    leaves = level
    n = branching**depth
    assert len(leaves) == n

    features = np.empty((n * samples_per_class, p))
    labels = np.repeat(np.arange(n), samples_per_class)
    for c, (_, center) in enumerate(leaves):
        block = slice(c * samples_per_class, (c + 1) * samples_per_class)
        noise = rng.standard_normal((samples_per_class, p)) * noise_sigma
        features[block] = center + noise

    attributes = np.zeros((n, len(internal_paths)))
    names = []
    for j, path in enumerate(internal_paths):
        names.append("node-" + ".".join(map(str, path)) if path else "node-root")
        first_child = path + (0,)
        for c, (leaf_path, _) in enumerate(leaves):
            if leaf_path[: len(first_child)] == first_child:
                attributes[c, j] = 1.0
    return Dataset(
        features, labels, n, attributes=attributes, attribute_names=tuple(names)
    )


def save_csv(dataset: Dataset, path: str) -> None:
    """One sample per line: integer label, then the feature values."""
    with atomic_write(path) as fh:
        for label, row in zip(dataset.labels, dataset.features):
            fh.write(str(int(label)) + "," + ",".join(fmt_float(v) for v in row) + "\n")


def load_csv(path: str, n: int | None = None) -> Dataset:
    """Read a dataset CSV (label-first rows).

    ``n`` declares the class count; omitted, it is inferred as max label + 1.
    Malformed rows raise ValueError naming the line.
    """
    with open(path, "r", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty dataset file")
    labels = []
    rows = []
    width = None
    for i, line in enumerate(lines):
        parts = line.split(",")
        if len(parts) < 2:
            raise ValueError(f"{path}:{i + 1}: need a label and at least one feature")
        if width is None:
            width = len(parts)
        elif len(parts) != width:
            raise ValueError(
                f"{path}:{i + 1}: expected {width} columns, found {len(parts)}"
            )
        try:
            label = int(parts[0])
        except ValueError:
            raise ValueError(f"{path}:{i + 1}: label must be an integer") from None
        try:
            rows.append([float(v) for v in parts[1:]])
        except ValueError:
            raise ValueError(f"{path}:{i + 1}: non-numeric feature value") from None
        labels.append(label)
    labels_arr = np.asarray(labels, dtype=np.int64)
    if labels_arr.min() < 0:
        bad = int(np.flatnonzero(labels_arr < 0)[0])
        raise ValueError(f"{path}:{bad + 1}: negative label")
    if n is None:
        n = int(labels_arr.max()) + 1
    elif labels_arr.max() >= n:
        bad = int(np.flatnonzero(labels_arr >= n)[0])
        raise ValueError(f"{path}:{bad + 1}: label >= declared class count {n}")
    return Dataset(np.asarray(rows), labels_arr, n)


def save_attributes_csv(dataset: Dataset, path: str) -> None:
    """Attribute table CSV: header of attribute names, then one 0/1 row per class."""
    if dataset.attributes is None:
        raise ValueError("dataset has no attribute table")
    names = dataset.attribute_names
    if names is None:
        names = tuple(f"attr{i}" for i in range(dataset.attributes.shape[1]))
    with atomic_write(path) as fh:
        fh.write(",".join(names) + "\n")
        for row in dataset.attributes:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def load_attributes_csv(path: str) -> tuple[tuple[str, ...], np.ndarray]:
    """Read an attribute table; returns (names, n x a matrix of 0/1)."""
    with open(path, "r", newline="") as fh:
        lines = fh.read().splitlines()
    if len(lines) < 2:
        raise ValueError(f"{path}: need a header and at least one class row")
    names = tuple(lines[0].split(","))
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(names):
            raise ValueError(
                f"{path}:{i}: expected {len(names)} columns, found {len(parts)}"
            )
        try:
            row = [float(v) for v in parts]
        except ValueError:
            raise ValueError(f"{path}:{i}: non-numeric attribute value") from None
        if any(v not in (0.0, 1.0) for v in row):
            raise ValueError(f"{path}:{i}: attribute entries must be 0 or 1")
        rows.append(row)
    return names, np.asarray(rows)


def with_attributes(
    dataset: Dataset, attributes: np.ndarray, names: tuple[str, ...] | None = None
) -> Dataset:
    """Copy of the dataset with the given per-class attribute table attached."""
    return Dataset(
        dataset.features,
        dataset.labels,
        dataset.n,
        attributes=attributes,
        attribute_names=names,
    )


def split(dataset: Dataset, train_fraction: float, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Stratified train/eval split, deterministic per seed.

    Each class keeps at least one sample on both sides, so every class needs
    at least 2 samples.
    """
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    train_idx: list[np.ndarray] = []
    eval_idx: list[np.ndarray] = []
    for c in range(dataset.n):
        members = np.flatnonzero(dataset.labels == c)
        if members.size < 2:
            raise ValueError(
                f"class {c} has {members.size} sample(s); need >= 2 to appear in both splits"
            )
        perm = members[rng.permutation(members.size)]
        take = int(np.floor(train_fraction * members.size + 0.5))
        take = min(max(take, 1), members.size - 1)
        train_idx.append(np.sort(perm[:take]))
        eval_idx.append(np.sort(perm[take:]))
    tr = np.concatenate(train_idx)
    ev = np.concatenate(eval_idx)

    def subset(idx: np.ndarray) -> Dataset:
        return Dataset(
            dataset.features[idx],
            dataset.labels[idx],
            dataset.n,
            attributes=dataset.attributes,
            attribute_names=dataset.attribute_names,
        )

    return subset(tr), subset(ev)
