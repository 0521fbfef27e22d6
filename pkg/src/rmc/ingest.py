"""Loading, preprocessing and synthetic generation of relational datasets.

File formats
------------
``matrix-market``
    Coordinate (or array) Matrix Market file holding ``R12`` as stored: rows
    are type-1 objects (features), columns are samples.  Sample labels may be
    supplied in a separate text file, one integer per line.
``dense-csv``
    Comma-separated numbers, one row of ``R12`` per line, no header.
``labeled-csv``
    One *sample* per line: feature values followed by an integer class label
    in the last column.  The matrix is transposed on load so that samples
    become the columns of ``R12``.

Lines that are empty or start with ``#`` are skipped in both CSV formats.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from rmc.core import RelationalData

FORMATS = ("matrix-market", "dense-csv", "labeled-csv")


class DataFormatError(ValueError):
    """Malformed input file or invalid matrix content."""


@dataclass(frozen=True)
class Dataset:
    matrix: RelationalData
    truth_labels: np.ndarray | None = None
    name: str = "dataset"
    feature_labels: np.ndarray | None = None

    def __post_init__(self):
        if self.truth_labels is not None:
            labels = np.asarray(self.truth_labels, dtype=np.int64)
            if labels.shape != (self.matrix.n2,):
                raise DataFormatError(f"{labels.size} labels for {self.matrix.n2} samples")
            object.__setattr__(self, "truth_labels", labels)
        if self.feature_labels is not None:
            labels = np.asarray(self.feature_labels, dtype=np.int64)
            if labels.shape != (self.matrix.n1,):
                raise DataFormatError(f"{labels.size} feature labels for {self.matrix.n1} features")
            object.__setattr__(self, "feature_labels", labels)

    @property
    def r12(self):
        return self.matrix.r12

    def with_matrix(self, r12, keep_rows=None) -> "Dataset":
        feature_labels = self.feature_labels
        if keep_rows is not None and feature_labels is not None:
            feature_labels = feature_labels[keep_rows]
        return replace(self, matrix=RelationalData(r12), feature_labels=feature_labels)


@dataclass(frozen=True)
class GenePreprocessSpec:
    """Clamp-and-filter thresholds for expression data.

    Values are clamped into ``[floor, ceiling]``; a gene is kept when
    ``max / min > max_min_ratio`` and ``max - min > max_minus_min``
    (``combine="or"`` keeps genes passing either test).
    """

    floor: float
    ceiling: float
    max_min_ratio: float
    max_minus_min: float
    combine: str = "and"

    def __post_init__(self):
        if not self.floor < self.ceiling:
            raise ValueError("floor must be below ceiling")
        if self.combine not in ("and", "or"):
            raise ValueError("combine must be 'and' or 'or'")


LEUKEMIA2 = GenePreprocessSpec(floor=100, ceiling=16000, max_min_ratio=25, max_minus_min=500)
LUNG_CANCER = GenePreprocessSpec(floor=0, ceiling=16000, max_min_ratio=5, max_minus_min=500)


def _check_nonnegative(r12, offset=(0, 0), transposed=False):
    if sp.issparse(r12):
        coo = r12.tocoo()
        bad = np.flatnonzero(coo.data < 0)
        if bad.size:
            i, j = int(coo.row[bad[0]]), int(coo.col[bad[0]])
            raise DataFormatError(f"negative entry {coo.data[bad[0]]} at row {i + 1}, column {j + 1}")
        return
    bad = np.argwhere(r12 < 0)
    if bad.size:
        i, j = (int(v) for v in bad[0])
        if transposed:
            i, j = j, i
        raise DataFormatError(f"negative entry {r12[bad[0][0], bad[0][1]]} at row {i + 1}, column {j + 1}")


def _read_csv_rows(path: Path) -> list:
    rows = []
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(csv.reader(fh), start=1):
            if not raw or not "".join(raw).strip() or raw[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((lineno, [float(v) for v in raw]))
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    width = len(rows[0][1])
    for lineno, vals in rows:
        if len(vals) != width:
            raise DataFormatError(f"{path}:{lineno}: expected {width} fields, found {len(vals)}")
    return rows


def load_labels(path) -> np.ndarray:
    labels = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                labels.append(int(line))
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: label {line!r} is not an integer") from None
    return np.array(labels, dtype=np.int64)


def load_matrix(path, format: str = "matrix-market", labels_path=None, name: str | None = None) -> Dataset:
    """Read a relational matrix (and optional sample labels) into a :class:`Dataset`."""
    path = Path(path)
    if format not in FORMATS:
        raise DataFormatError(f"unknown format {format!r}; expected one of {FORMATS}")
    labels = None
    if format == "matrix-market":
        try:
            r12 = scipy.io.mmread(str(path))
        except (ValueError, IndexError, OSError) as exc:
            raise DataFormatError(f"{path}: {exc}") from None
        r12 = sp.csr_matrix(r12) if sp.issparse(r12) else np.asarray(r12, dtype=np.float64)
        _check_nonnegative(r12)
    else:
        rows = _read_csv_rows(path)
        data = np.array([vals for _, vals in rows])
        if format == "labeled-csv":
            raw = data[:, -1]
            if not np.all(raw == np.round(raw)):
                lineno = rows[int(np.flatnonzero(raw != np.round(raw))[0])][0]
                raise DataFormatError(f"{path}:{lineno}: class label must be an integer")
            labels = raw.astype(np.int64)
            _check_nonnegative(data[:, :-1], transposed=True)
            r12 = np.ascontiguousarray(data[:, :-1].T)
        else:
            _check_nonnegative(data)
            r12 = data
    if labels_path is not None:
        labels = load_labels(labels_path)
    return Dataset(RelationalData(r12), labels, name or path.stem)


def save_matrix(d: Dataset, path, format: str = "matrix-market", labels_path=None) -> None:
    """Write a dataset in one of the supported formats (the inverse of :func:`load_matrix`)."""
    path = Path(path)
    r12 = d.matrix.r12
    if format == "matrix-market":
        mat = sp.coo_matrix(r12)
        scipy.io.mmwrite(str(path), mat, precision=17)
        if labels_path is not None and d.truth_labels is not None:
            np.savetxt(labels_path, d.truth_labels, fmt="%d")
    elif format == "dense-csv":
        np.savetxt(path, d.matrix.dense(), delimiter=",", fmt="%.17g")
    elif format == "labeled-csv":
        if d.truth_labels is None:
            raise DataFormatError("labeled-csv needs truth labels")
        dense = d.matrix.dense().T
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row, lab in zip(dense, d.truth_labels):
                writer.writerow([repr(float(v)) for v in row] + [int(lab)])
    else:
        raise DataFormatError(f"unknown format {format!r}")


def unit_normalize(d: Dataset, axis: str = "samples") -> Dataset:
    """Scale every sample (column) or feature (row) vector to unit Euclidean length.

    All-zero vectors are left as they are, with a warning.
    """
    if axis not in ("samples", "features"):
        raise ValueError("axis must be 'samples' or 'features'")
    r12 = d.matrix.r12
    ax = 0 if axis == "samples" else 1
    if sp.issparse(r12):
        norms = np.sqrt(np.asarray(r12.multiply(r12).sum(axis=ax)).ravel())
    else:
        norms = np.linalg.norm(r12, axis=ax)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        warnings.warn(f"{zero.size} all-zero {axis} left unnormalized", RuntimeWarning, stacklevel=2)
    scale = 1.0 / np.where(norms == 0, 1.0, norms)
    if sp.issparse(r12):
        out = r12 @ sp.diags(scale) if ax == 0 else sp.diags(scale) @ r12
        out = sp.csr_matrix(out)
    else:
        out = r12 * scale[None, :] if ax == 0 else r12 * scale[:, None]
    return d.with_matrix(out)


def word_mi_scores(counts) -> np.ndarray:
    """Per-word contribution ``sum_d p(w,d) log(p(w,d) / (p(w) p(d)))`` to I(W; D)."""
    x = sp.csr_matrix(counts, dtype=np.float64) if sp.issparse(counts) else np.asarray(counts, dtype=np.float64)
    total = x.sum()
    if total <= 0:
        raise ValueError("count matrix is empty")
    pw = np.asarray(x.sum(axis=1)).ravel() / total
    pd = np.asarray(x.sum(axis=0)).ravel() / total
    if sp.issparse(x):
        coo = x.tocoo()
        keep = coo.data > 0
        rows, cols, p = coo.row[keep], coo.col[keep], coo.data[keep] / total
    else:
        rows, cols = np.nonzero(x > 0)
        p = x[rows, cols] / total
    terms = p * np.log(p / (pw[rows] * pd[cols]))
    return np.bincount(rows, weights=terms, minlength=x.shape[0])


def select_words_by_mi(d: Dataset, m: int) -> Dataset:
    """Keep the ``m`` rows (words) contributing most to the word-document mutual information.

    Equal scores are broken by the lower row index; retained rows keep their
    original order.
    """
    n1 = d.matrix.n1
    if m > n1:
        raise ValueError(f"cannot keep {m} of {n1} words")
    scores = word_mi_scores(d.matrix.r12)
    order = np.lexsort((np.arange(n1), -scores))
    keep = np.sort(order[:m])
    r12 = d.matrix.r12[keep]
    return d.with_matrix(r12, keep_rows=keep)


def gene_preprocess(d: Dataset, spec: GenePreprocessSpec) -> Dataset:
    """Clamp expression values and drop genes (rows) with too little variation."""
    x = np.clip(d.matrix.dense(), spec.floor, spec.ceiling)
    hi = x.max(axis=1)
    lo = x.min(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(lo > 0, hi / np.where(lo > 0, lo, 1.0), np.where(hi > 0, np.inf, 1.0))
    ratio_ok = ratio > spec.max_min_ratio
    range_ok = (hi - lo) > spec.max_minus_min
    keep_mask = ratio_ok & range_ok if spec.combine == "and" else ratio_ok | range_ok
    keep = np.flatnonzero(keep_mask)
    if keep.size < 2:
        raise ValueError(f"only {keep.size} genes survive preprocessing")
    return d.with_matrix(x[keep], keep_rows=keep)


def planted_coclusters(
    n1: int,
    n2: int,
    c1: int,
    c2: int,
    noise: float = 0.1,
    seed: int = 0,
    kind: str = "bernoulli",
    shuffle: bool = True,
) -> Dataset:
    """Synthetic ``R12`` with planted co-clusters.

    Feature cluster i and sample cluster j are linked when ``i % c2 == j``
    (``i == j`` for square layouts).  ``bernoulli``: linked blocks are 1, the
    rest 0, then each entry is flipped with probability ``noise``.
    ``gaussian``: linked blocks have mean 1, others 0, plus ``|N(0, noise)|``
    noise.  Rows and columns are shuffled unless ``shuffle`` is False.
    """
    if c1 > n1 or c2 > n2:
        raise ValueError("more clusters than objects")
    rng = np.random.default_rng(seed)
    feat = np.arange(n1) * c1 // n1
    samp = np.arange(n2) * c2 // n2
    if shuffle:
        feat = rng.permutation(feat)
        samp = rng.permutation(samp)
    linked = (feat[:, None] % c2) == samp[None, :]
    if kind == "bernoulli":
        flip = rng.uniform(size=(n1, n2)) < noise
        r12 = np.where(flip, ~linked, linked).astype(np.float64)
    elif kind == "gaussian":
        r12 = linked.astype(np.float64) + np.abs(rng.normal(0.0, noise, (n1, n2)))
    else:
        raise ValueError(f"unknown noise kind {kind!r}")
    # keep every object non-empty so unit normalization is defined
    for i in np.flatnonzero(r12.sum(axis=1) == 0):
        r12[i, rng.integers(n2)] = 1.0
    for j in np.flatnonzero(r12.sum(axis=0) == 0):
        r12[rng.integers(n1), j] = 1.0
    name = f"planted_{n1}x{n2}_{c1}x{c2}_{kind}{noise:g}_s{seed}"
    return Dataset(RelationalData(r12), samp, name, feature_labels=feat)
