"""Dataset container, normalization, splitting, and CSV persistence.

A DataMatrix couples an n x m observation block with its channel names
and optional per-row class labels.  Labels use the compact coding
Normal=0, FaultA=1, FaultB=2, FaultC=3; the legacy coding found in older
measurement exports (4=normal, 3=A, 2=B, 1=C) is supported through an
explicit, reversible remap rather than magic numbers downstream.

CSV files carry one header row (channel names, plus a final ``label``
column when labels are present), comma-separated decimal reals rendered
with 17 significant digits, and LF line endings; that rendering makes a
write -> read round trip reproduce every finite double bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .errors import DataFormatError, InvalidInputError
from .numerics import derive_seed, make_rng

# Floor for zero-variance channels; keeps the column contract stable
# instead of dropping degenerate channels.
STD_FLOOR = 1e-12


class ClassCode(IntEnum):
    """Observation class labels."""

    NORMAL = 0
    FAULT_A = 1
    FAULT_B = 2
    FAULT_C = 3


# Reversible remap to the legacy export coding (4=normal, 3=A, 2=B, 1=C).
_TO_LEGACY = {0: 4, 1: 3, 2: 2, 3: 1}
_FROM_LEGACY = {v: k for k, v in _TO_LEGACY.items()}


def to_legacy_label(code: ClassCode | int) -> int:
    """Maps a class code to the legacy 4/3/2/1 label convention."""
    return _TO_LEGACY[int(code)]


def from_legacy_label(legacy: int) -> ClassCode:
    """Inverse of to_legacy_label."""
    if legacy not in _FROM_LEGACY:
        raise InvalidInputError(f"unknown legacy label {legacy}")
    return ClassCode(_FROM_LEGACY[legacy])


@dataclass(frozen=True)
class DataMatrix:
    """n x m observations with channel names and optional class labels."""

    observations: np.ndarray
    channel_names: tuple
    labels: np.ndarray | None = None

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=np.float64)
        if obs.ndim != 2:
            raise InvalidInputError(f"observations must be 2-D, got {obs.shape}")
        if not np.all(np.isfinite(obs)):
            raise InvalidInputError("observations contain non-finite entries")
        names = tuple(str(n) for n in self.channel_names)
        if len(names) != obs.shape[1]:
            raise InvalidInputError(
                f"{len(names)} channel names for {obs.shape[1]} columns"
            )
        labels = self.labels
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int64)
            if labels.shape != (obs.shape[0],):
                raise InvalidInputError(
                    f"label count {labels.shape} does not match {obs.shape[0]} rows"
                )
            bad = set(np.unique(labels)) - {int(c) for c in ClassCode}
            if bad:
                raise InvalidInputError(f"labels outside 0..3: {sorted(bad)}")
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "labels", labels)

    @property
    def n_rows(self) -> int:
        return self.observations.shape[0]

    @property
    def n_channels(self) -> int:
        return self.observations.shape[1]

    def take_rows(self, index) -> "DataMatrix":
        """New DataMatrix holding the given rows (labels follow)."""
        idx = np.asarray(index, dtype=np.intp)
        labels = None if self.labels is None else self.labels[idx]
        return DataMatrix(self.observations[idx], self.channel_names, labels)

    def class_rows(self, code: ClassCode | int) -> np.ndarray:
        """Row indices carrying the given label."""
        if self.labels is None:
            raise InvalidInputError("data has no labels")
        return np.nonzero(self.labels == int(code))[0]

    def present_classes(self) -> list:
        if self.labels is None:
            raise InvalidInputError("data has no labels")
        return [ClassCode(int(c)) for c in np.unique(self.labels)]


def stack(parts) -> DataMatrix:
    """Vertically concatenates DataMatrix parts with matching channels."""
    parts = list(parts)
    if not parts:
        raise InvalidInputError("nothing to stack")
    names = parts[0].channel_names
    for p in parts[1:]:
        if p.channel_names != names:
            raise InvalidInputError("conflicting channel names across parts")
    have_labels = [p.labels is not None for p in parts]
    if any(have_labels) != all(have_labels):
        raise InvalidInputError("cannot stack labeled with unlabeled parts")
    obs = np.vstack([p.observations for p in parts])
    labels = np.concatenate([p.labels for p in parts]) if all(have_labels) else None
    return DataMatrix(obs, names, labels)


@dataclass(frozen=True)
class Normalizer:
    """Per-channel means and sample standard deviations (divisor n-1)."""

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        stds = np.asarray(self.stds, dtype=np.float64)
        if means.ndim != 1 or stds.shape != means.shape:
            raise InvalidInputError("means and stds must be matching 1-D vectors")
        if np.any(stds <= 0.0):
            raise InvalidInputError("stds must be strictly positive")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)


def normalize_fit(x: DataMatrix) -> Normalizer:
    """Column means and sample stds of x, stds floored at 1e-12.

    Raises:
        InvalidInputError: if x has fewer than 2 rows.
    """
    if x.n_rows < 2:
        raise InvalidInputError(f"need at least 2 rows to fit, got {x.n_rows}")
    means = x.observations.mean(axis=0)
    stds = x.observations.std(axis=0, ddof=1)
    stds = np.maximum(stds, STD_FLOOR)
    return Normalizer(means=means, stds=stds)


def normalize_apply(norm: Normalizer, x: DataMatrix) -> DataMatrix:
    """Applies (value - mean) / std column-wise; names and labels pass through."""
    if norm.means.shape[0] != x.n_channels:
        raise InvalidInputError(
            f"normalizer has {norm.means.shape[0]} columns, data has {x.n_channels}"
        )
    z = (x.observations - norm.means) / norm.stds
    return replace(x, observations=z)


def split(x: DataMatrix, spec: dict, seed: int):
    """Stratified train/test split with per-class counts.

    Args:
        x: Labeled data.
        spec: Mapping class code -> (train_count, test_count).
        seed: Base seed; each class shuffles on its own derived stream.

    Returns:
        (train, test) DataMatrix pair; rows grouped by ascending class
        code, original row order kept inside each group.

    Raises:
        InvalidInputError: if a class has fewer rows than requested.
    """
    if x.labels is None:
        raise InvalidInputError("split requires labeled data")
    train_idx = []
    test_idx = []
    for code in sorted(spec, key=int):
        n_train, n_test = spec[code]
        rows = x.class_rows(code)
        if rows.size < n_train + n_test:
            raise InvalidInputError(
                f"class {ClassCode(int(code)).name} has {rows.size} rows, "
                f"need {n_train + n_test}"
            )
        rng = make_rng(derive_seed(seed, "split", int(code)))
        perm = rng.permutation(rows.size)
        chosen = rows[perm]
        train_idx.append(np.sort(chosen[:n_train]))
        test_idx.append(np.sort(chosen[n_train : n_train + n_test]))
    return (
        x.take_rows(np.concatenate(train_idx)),
        x.take_rows(np.concatenate(test_idx)),
    )


def format_float(v: float) -> str:
    """17-significant-digit rendering; parses back to the same double."""
    return format(float(v), ".17g")


def write_csv(x: DataMatrix, path) -> None:
    """Writes x as comma-separated text with LF endings."""
    lines = []
    header = list(x.channel_names)
    if x.labels is not None:
        header.append("label")
    lines.append(",".join(header))
    for i in range(x.n_rows):
        fields = [format_float(v) for v in x.observations[i]]
        if x.labels is not None:
            fields.append(str(int(x.labels[i])))
        lines.append(",".join(fields))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> DataMatrix:
    """Reads a DataMatrix written by write_csv.

    Raises:
        DataFormatError: on malformed headers or rows, with line number.
    """
    with open(path, encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw or not raw[0].strip():
        raise DataFormatError(path, 1, "missing header row")
    header = raw[0].split(",")
    has_labels = header[-1] == "label"
    names = header[:-1] if has_labels else header
    if not names or any(not n for n in names):
        raise DataFormatError(path, 1, "empty channel name in header")
    m = len(names)
    width = m + (1 if has_labels else 0)
    rows = []
    labels = []
    for line_no, line in enumerate(raw[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != width:
            raise DataFormatError(
                path, line_no, f"expected {width} fields, found {len(fields)}"
            )
        try:
            rows.append([float(f) for f in fields[:m]])
        except ValueError as exc:
            raise DataFormatError(path, line_no, f"bad real value: {exc}") from None
        if has_labels:
            try:
                labels.append(int(fields[m]))
            except ValueError:
                raise DataFormatError(
                    path, line_no, f"bad label {fields[m]!r}"
                ) from None
    if not rows:
        raise DataFormatError(path, max(2, len(raw)), "no data rows")
    obs = np.array(rows, dtype=np.float64)
    try:
        return DataMatrix(obs, tuple(names), np.array(labels) if has_labels else None)
    except InvalidInputError as exc:
        raise DataFormatError(path, 0, str(exc)) from None
