"""Dataset ingestion: CSV parsing, min-max normalization, synthetic experiment
generators, and the IDX image/label binary format.

A :class:`Dataset` always carries float targets shaped ``(K, O)``; for
classification sources it additionally keeps the integer labels, and the float
targets are their one-hot encoding.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

__all__ = [
    "Dataset",
    "CSVSchema",
    "NormalizationRecord",
    "load_csv",
    "normalize_minmax",
    "apply_normalization",
    "denormalize",
    "synthetic",
    "load_idx",
    "one_hot",
]


@dataclass(frozen=True)
class NormalizationRecord:
    """Per-feature affine map used to send raw features into [0, 1]."""

    mins: np.ndarray
    maxs: np.ndarray


@dataclass
class Dataset:
    """Inputs in [0,1]^D plus targets; labels present for classification data."""

    inputs: np.ndarray
    targets: np.ndarray
    labels: np.ndarray | None = None
    feature_names: list[str] = field(default_factory=list)
    normalization: NormalizationRecord | None = None

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        self.targets = np.asarray(self.targets, dtype=float)
        if self.targets.ndim == 1:
            self.targets = self.targets[:, None]
        if len(self.inputs) == 0:
            raise DataError("dataset is empty")
        if len(self.targets) != len(self.inputs):
            raise DataError(
                f"{len(self.inputs)} input rows but {len(self.targets)} target rows"
            )
        if not self.feature_names:
            self.feature_names = [f"x{d + 1}" for d in range(self.inputs.shape[1])]

    @property
    def K(self) -> int:
        return self.inputs.shape[0]

    @property
    def D(self) -> int:
        return self.inputs.shape[1]

    @property
    def O(self) -> int:
        return self.targets.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(
            inputs=self.inputs[idx],
            targets=self.targets[idx],
            labels=None if self.labels is None else self.labels[idx],
            feature_names=list(self.feature_names),
            normalization=self.normalization,
        )


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    """One-hot encode integer labels to shape ``(K, n_classes)``."""
    labels = np.asarray(labels, dtype=int)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise DataError(f"labels outside 0..{n_classes - 1}")
    out = np.zeros((labels.shape[0], n_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


@dataclass(frozen=True)
class CSVSchema:
    """Column layout: ``n_features`` leading feature columns, then either
    ``n_targets`` numeric target columns or a single trailing label column."""

    n_features: int
    n_targets: int = 1
    label_column: bool = False
    has_header: bool | None = None  # None: autodetect from the first row


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def load_csv(path, schema: CSVSchema) -> Dataset:
    """Parse a comma-separated file against the declared schema.

    Malformed rows are rejected with their (1-based) line numbers.
    """
    n_cols = schema.n_features + (1 if schema.label_column else schema.n_targets)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [(i + 1, r) for i, r in enumerate(rows) if r]
    if not rows:
        raise DataError(f"{path}: file is empty")
    has_header = schema.has_header
    if has_header is None:
        has_header = not all(_is_float(c) for c in rows[0][1][: schema.n_features])
    names = []
    if has_header:
        header = rows.pop(0)[1]
        if len(header) != n_cols:
            raise DataError(
                f"{path}: header has {len(header)} columns, schema expects {n_cols}"
            )
        names = [c.strip() for c in header[: schema.n_features]]
    if not rows:
        raise DataError(f"{path}: no data rows")
    X = np.empty((len(rows), schema.n_features))
    labels = None
    label_names: dict[str, int] = {}
    if schema.label_column:
        labels = np.empty(len(rows), dtype=int)
        targets = None
    else:
        targets = np.empty((len(rows), schema.n_targets))
    for k, (lineno, row) in enumerate(rows):
        if len(row) != n_cols:
            raise DataError(
                f"{path}:{lineno}: expected {n_cols} columns, found {len(row)}"
            )
        try:
            X[k] = [float(c) for c in row[: schema.n_features]]
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: non-numeric feature value") from exc
        if schema.label_column:
            lab = row[-1].strip()
            if _is_float(lab) and float(lab) == int(float(lab)):
                labels[k] = int(float(lab))
            else:
                labels[k] = label_names.setdefault(lab, len(label_names))
        else:
            try:
                targets[k] = [float(c) for c in row[schema.n_features :]]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-numeric target value") from exc
    if schema.label_column:
        n_classes = int(labels.max()) + 1
        targets = one_hot(labels, n_classes)
    return Dataset(inputs=X, targets=targets, labels=labels, feature_names=names)


def normalize_minmax(dataset: Dataset) -> tuple[Dataset, NormalizationRecord]:
    """Affinely map every feature onto [0, 1]; the record allows inversion and
    the transformation of unseen points."""
    mins = dataset.inputs.min(axis=0)
    maxs = dataset.inputs.max(axis=0)
    if np.any(maxs <= mins):
        bad = int(np.argmax(maxs <= mins))
        raise DataError(
            f"feature {dataset.feature_names[bad]!r} is constant; cannot normalize"
        )
    rec = NormalizationRecord(mins=mins, maxs=maxs)
    X = (dataset.inputs - mins) / (maxs - mins)
    out = Dataset(
        inputs=X,
        targets=dataset.targets.copy(),
        labels=None if dataset.labels is None else dataset.labels.copy(),
        feature_names=list(dataset.feature_names),
        normalization=rec,
    )
    return out, rec


def apply_normalization(
    record: NormalizationRecord, X: np.ndarray
) -> tuple[np.ndarray, int]:
    """Transform unseen points with a stored record.

    Values outside the recorded range are clamped into [0, 1]; the second
    return value counts the clamped entries.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = (X - record.mins) / (record.maxs - record.mins)
    clamped = int(np.count_nonzero((Z < 0.0) | (Z > 1.0)))
    return np.clip(Z, 0.0, 1.0), clamped


def denormalize(record: NormalizationRecord, Z: np.ndarray) -> np.ndarray:
    """Inverse of the stored min-max map."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    return record.mins + Z * (record.maxs - record.mins)


# -- synthetic experiment generators ---------------------------------------


def _exp1(K: int, rng: np.random.Generator) -> Dataset:
    x = rng.uniform(0.0, 1.0, size=(K, 1))
    y = np.cos(20.0 * np.pi * x[:, 0])
    return Dataset(inputs=x, targets=y)


def _exp2(K: int, rng: np.random.Generator) -> Dataset:
    # natural domain [-1, 1]^4; inputs are rescaled to [0, 1]^4, targets kept
    z = rng.uniform(-1.0, 1.0, size=(K, 4))
    y = (
        z[:, 0]
        + z[:, 1] ** 2
        + z[:, 2] ** 3
        + np.exp(z[:, 3])
        + z[:, 0] * z[:, 1]
        + z[:, 2] * z[:, 3]
    )
    return Dataset(inputs=(z + 1.0) / 2.0, targets=y)


_SYNTHETIC = {"exp1": _exp1, "exp2": _exp2}


def synthetic(name: str, K_train: int, K_test: int, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded train/test pair for a named synthetic regression target."""
    if name not in _SYNTHETIC:
        raise DataError(f"unknown synthetic dataset {name!r}; available: exp1, exp2")
    if K_train < 1 or K_test < 1:
        raise DataError("sample counts must be >= 1")
    rng = np.random.default_rng(seed)
    gen = _SYNTHETIC[name]
    return gen(K_train, rng), gen(K_test, rng)


# -- IDX binary format ------------------------------------------------------

_IDX_IMAGES_MAGIC = 0x00000803
_IDX_LABELS_MAGIC = 0x00000801


def _read_exact(fh, n: int, path) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise DataError(f"{path}: truncated file (wanted {n} bytes, got {len(buf)})")
    return buf


def load_idx(images_path, labels_path) -> Dataset:
    """Load an IDX image/label file pair (big-endian, bytes scaled by 1/255)."""
    with open(images_path, "rb") as fh:
        magic, n, rows, cols = struct.unpack(">IIII", _read_exact(fh, 16, images_path))
        if magic != _IDX_IMAGES_MAGIC:
            raise DataError(f"{images_path}: bad magic 0x{magic:08x}")
        payload = _read_exact(fh, n * rows * cols, images_path)
    X = np.frombuffer(payload, dtype=np.uint8).reshape(n, rows * cols)
    with open(labels_path, "rb") as fh:
        magic, n_lab = struct.unpack(">II", _read_exact(fh, 8, labels_path))
        if magic != _IDX_LABELS_MAGIC:
            raise DataError(f"{labels_path}: bad magic 0x{magic:08x}")
        lab = np.frombuffer(_read_exact(fh, n_lab, labels_path), dtype=np.uint8)
    if n_lab != n:
        raise DataError(f"image count {n} does not match label count {n_lab}")
    labels = lab.astype(int)
    n_classes = int(labels.max()) + 1 if labels.size else 0
    return Dataset(
        inputs=X.astype(float) / 255.0,
        targets=one_hot(labels, max(n_classes, 10)),
        labels=labels,
    )
