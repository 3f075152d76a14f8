"""Dataset loading, scaling, splitting and the synthetic grid mixture."""

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .errors import EmptyFile, LengthMismatch, ParseError
from .gmm import GmmParams


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    labels: Optional[np.ndarray] = None
    feature_names: Optional[Tuple[str, ...]] = None
    name: str = ""
    classes: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (X.shape[0],):
                raise LengthMismatch(f"{X.shape[0]} rows but {labels.size} labels")
            if labels.size and labels.min() < 0:
                raise ValueError("labels must be nonnegative")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]

    def take(self, rows):
        rows = np.asarray(rows)
        return replace(self, X=self.X[rows],
                       labels=None if self.labels is None else self.labels[rows])


def _remap(raw_labels):
    """Map raw label strings to 0..C-1 in sorted (numeric if possible) order."""
    uniq = set(raw_labels)
    try:
        order = sorted(uniq, key=float)
    except ValueError:
        order = sorted(uniq)
    index = {lab: i for i, lab in enumerate(order)}
    return np.array([index[lab] for lab in raw_labels], dtype=np.int64), tuple(order)


def load_sparse_labeled(path, dim=None, name=None):
    """Read ``label idx:val idx:val ...`` lines (1-based indices) into a dense Dataset."""
    path = Path(path)
    raw_labels, rows = [], []
    max_index = 0
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            entries = {}
            for tok in parts[1:]:
                idx, sep, val = tok.partition(":")
                try:
                    j = int(idx)
                    v = float(val)
                except ValueError:
                    raise ParseError(f"bad feature token {tok!r}", lineno) from None
                if not sep or j < 1:
                    raise ParseError(f"bad feature token {tok!r}", lineno)
                if j in entries:
                    raise ParseError(f"feature {j} repeated", lineno)
                entries[j] = v
                max_index = max(max_index, j)
            try:
                float(parts[0])
            except ValueError:
                raise ParseError(f"label {parts[0]!r} is not numeric", lineno) from None
            raw_labels.append(parts[0])
            rows.append(entries)
    if not rows:
        raise EmptyFile(f"{path} contains no samples")
    d = max_index if dim is None else int(dim)
    if d < max_index:
        raise ParseError(f"feature index {max_index} exceeds requested dim {d}")
    X = np.zeros((len(rows), d))
    for i, entries in enumerate(rows):
        for j, v in entries.items():
            X[i, j - 1] = v
    labels, classes = _remap(raw_labels)
    return Dataset(X, labels, name=name or path.stem, classes=classes)


def load_csv(path, name=None):
    """Dense CSV with a header row; a column named ``label`` holds class labels."""
    path = Path(path)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path} is empty") from None
        body = [row for row in reader if row]
    if not body:
        raise EmptyFile(f"{path} contains no samples")
    label_col = header.index("label") if "label" in header else None
    feat_cols = [i for i in range(len(header)) if i != label_col]
    X = np.empty((len(body), len(feat_cols)))
    raw_labels = []
    for r, row in enumerate(body):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", r + 2)
        try:
            X[r] = [float(row[i]) for i in feat_cols]
        except ValueError as exc:
            raise ParseError(str(exc), r + 2) from None
        if label_col is not None:
            raw_labels.append(row[label_col])
    labels, classes = _remap(raw_labels) if label_col is not None else (None, None)
    return Dataset(X, labels, feature_names=tuple(header[i] for i in feat_cols),
                   name=name or path.stem, classes=classes)


def load_dataset(path, dim=None):
    """Dispatch on extension: ``.csv`` is dense CSV, anything else is sparse text."""
    if str(path).endswith(".csv"):
        return load_csv(path)
    return load_sparse_labeled(path, dim=dim)


def write_csv(data, path):
    names = data.feature_names or tuple(f"x{j + 1}" for j in range(data.dim))
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(list(names) + (["label"] if data.labels is not None else []))
        for i in range(data.n):
            row = [repr(float(v)) for v in data.X[i]]
            if data.labels is not None:
                row.append(int(data.labels[i]))
            w.writerow(row)


def write_sparse_labeled(data, path, labels=None):
    """Write the sparse text format; zero entries are omitted."""
    labels = data.labels if labels is None else labels
    with open(path, "w") as f:
        for i in range(data.n):
            feats = " ".join(f"{j + 1}:{v!r}" for j, v in enumerate(data.X[i].tolist()) if v != 0.0)
            lab = data.classes[labels[i]] if data.classes else str(labels[i])
            f.write(f"{lab} {feats}".rstrip() + "\n")


def minmax_scale(data):
    """Scale every feature of ``data`` to [0, 1].

    Returns the scaled dataset and the ``(d, 2)`` array of per-feature
    ``(min, max)`` pairs, to be reused on test data via :func:`apply_minmax`.
    """
    if data.n < 1:
        raise ValueError("cannot scale an empty dataset")
    ranges = np.stack([data.X.min(axis=0), data.X.max(axis=0)], axis=1)
    return apply_minmax(data, ranges), ranges


def apply_minmax(data, ranges):
    """Affine map with given ``(min, max)`` pairs; constant features go to 0, no clipping."""
    lo, hi = ranges[:, 0], ranges[:, 1]
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    X = np.where(span > 0, (data.X - lo) / safe, 0.0)
    return replace(data, X=X)


def train_test_split(data, test_fraction, rng):
    """Shuffle, then put the first ``ceil(n (1 - f))`` rows in the train part."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    if data.n < 2:
        raise ValueError("need at least two rows to split")
    perm = rng.permutation(data.n)
    cut = math.ceil(data.n * (1.0 - test_fraction) - 1e-9)
    cut = min(max(cut, 1), data.n - 1)
    return data.take(perm[:cut]), data.take(perm[cut:])


def subsample(data, keep_fraction, rng):
    """Uniform sample without replacement of ``round(f n)`` rows (at least one).

    Draws at different fractions are independent; a smaller subsample is
    not guaranteed to be nested in a larger one.
    """
    if not 0 < keep_fraction <= 1:
        raise ValueError("keep_fraction must lie in (0, 1]")
    m = max(1, int(math.floor(keep_fraction * data.n + 0.5)))
    return data.take(rng.permutation(data.n)[:m])


def make_grid_gmm(side=5, spacing=2.0, sigma=0.1, dim=2):
    """Equal-weight mixture with means on a centred ``side x side`` lattice."""
    if dim != 2:
        raise ValueError("the grid mixture is two-dimensional")
    if side < 1:
        raise ValueError("side must be >= 1")
    ticks = (np.arange(side) - (side - 1) / 2.0) * spacing
    means = np.array([[a, b] for a in ticks for b in ticks])
    K = side * side
    covs = np.repeat((sigma ** 2 * np.eye(2))[None], K, axis=0)
    return GmmParams(np.full(K, 1.0 / K), means, covs)
