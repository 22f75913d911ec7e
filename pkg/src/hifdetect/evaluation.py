"""Detection-quality metrics and run reports.

Security is the fraction of actual normal samples predicted normal;
dependability is the fraction of actual fault samples predicted as any
fault class.  A wrong fault LOCATION therefore reduces neither index;
localization quality is reported separately as the diagonal fraction
over the fault rows.  Reports bundle the per-sample outcomes with the
confusion matrix, the indices, the seed, and a full echo of the run
configuration so a run can be replayed from its own artifact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import ClassCode
from .errors import InvalidInputError, UndefinedMetricError
from .modelio import need, read_model, write_model


def _as_labels(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be a 1-D sequence")
    if arr.size and not np.all(arr == arr.astype(np.int64)):
        raise InvalidInputError(f"{name} must be integer class codes")
    return arr.astype(np.int64)


def _paired(pred, actual):
    p = _as_labels(pred, "predicted labels")
    a = _as_labels(actual, "actual labels")
    if p.size != a.size:
        raise InvalidInputError(f"length mismatch: {p.size} predicted vs {a.size} actual")
    return p, a


def confusion(pred, actual) -> np.ndarray:
    """Counts matrix over the class codes present; entry (i, j) counts
    samples of actual code i predicted as code j, codes in ascending
    order."""
    p, a = _paired(pred, actual)
    codes = np.unique(np.concatenate([a, p]))
    index = {int(c): k for k, c in enumerate(codes)}
    out = np.zeros((codes.size, codes.size), dtype=np.int64)
    for ai, pi in zip(a, p):
        out[index[int(ai)], index[int(pi)]] += 1
    return out


def dependability(pred, actual) -> float:
    """Fraction of actual fault samples predicted as any fault class."""
    p, a = _paired(pred, actual)
    hif = a != int(ClassCode.NORMAL)
    if not hif.any():
        raise UndefinedMetricError("no actual fault samples")
    return float(np.mean(p[hif] != int(ClassCode.NORMAL)))


def security(pred, actual) -> float:
    """Fraction of actual normal samples predicted normal."""
    p, a = _paired(pred, actual)
    normal = a == int(ClassCode.NORMAL)
    if not normal.any():
        raise UndefinedMetricError("no actual normal samples")
    return float(np.mean(p[normal] == int(ClassCode.NORMAL)))


def location_accuracy(pred, actual) -> float:
    """Fraction of actual fault samples assigned their exact class."""
    p, a = _paired(pred, actual)
    hif = a != int(ClassCode.NORMAL)
    if not hif.any():
        raise UndefinedMetricError("no actual fault samples")
    return float(np.mean(p[hif] == a[hif]))


@dataclass(frozen=True)
class DetectionReport:
    """Outcome of one detection run.

    per_sample holds (true code, predicted code, statistic) triples; the
    statistic entry is None for detectors without one.  class_codes
    orders the rows/columns of the confusion matrix.
    """

    per_sample: tuple
    threshold: float | None
    class_codes: tuple
    confusion: tuple
    security: float
    dependability: float
    location_accuracy: float
    config_echo: dict
    seed: int


def build_report(
    actual,
    pred,
    stats=None,
    threshold: float | None = None,
    config_echo: dict | None = None,
    seed: int = 0,
) -> DetectionReport:
    """Assembles a report; requires at least one normal and one fault row.

    Raises:
        InvalidInputError: on inconsistent lengths or unknown codes.
        UndefinedMetricError: if either index is undefined.
    """
    p, a = _paired(pred, actual)
    known = [int(c) for c in ClassCode]
    if not np.all(np.isin(a, known)) or not np.all(np.isin(p, known)):
        raise InvalidInputError(f"labels must be class codes {known}")
    if stats is not None:
        stats = np.asarray(stats, dtype=np.float64)
        if stats.shape != a.shape:
            raise InvalidInputError(
                f"statistics length {stats.size} does not match samples {a.size}"
            )
    codes = np.unique(np.concatenate([a, p]))
    matrix = confusion(p, a)
    per_sample = tuple(
        (int(ai), int(pi), None if stats is None else float(stats[k]))
        for k, (ai, pi) in enumerate(zip(a, p))
    )
    echo = dict(config_echo) if config_echo else {}
    for key, value in echo.items():
        if not str(key).strip() or not str(value).strip():
            raise InvalidInputError(f"config echo entry {key!r} is blank")
    return DetectionReport(
        per_sample=per_sample,
        threshold=None if threshold is None else float(threshold),
        class_codes=tuple(int(c) for c in codes),
        confusion=tuple(tuple(int(v) for v in row) for row in matrix),
        security=security(p, a),
        dependability=dependability(p, a),
        location_accuracy=location_accuracy(p, a),
        config_echo={str(k): str(v) for k, v in echo.items()},
        seed=int(seed),
    )


def write_report(report: DetectionReport, path) -> None:
    scalars = {
        "seed": report.seed,
        "security": report.security,
        "dependability": report.dependability,
        "location_accuracy": report.location_accuracy,
    }
    if report.threshold is not None:
        scalars["threshold"] = report.threshold
    for key, value in report.config_echo.items():
        scalars[f"config_{key}"] = str(value)
    true_codes = np.array([row[0] for row in report.per_sample], dtype=np.float64)
    pred_codes = np.array([row[1] for row in report.per_sample], dtype=np.float64)
    vectors = {
        "class_codes": np.asarray(report.class_codes, dtype=np.float64),
        "true_labels": true_codes,
        "predicted_labels": pred_codes,
    }
    if report.per_sample and report.per_sample[0][2] is not None:
        vectors["statistics"] = np.array([row[2] for row in report.per_sample])
    write_model(path, "report", scalars, vectors, {"confusion": np.asarray(report.confusion)})


def read_report(path) -> DetectionReport:
    scalars, vectors, matrices = read_model(path, "report")
    true_codes = need(vectors, "true_labels", path).astype(np.int64)
    pred_codes = need(vectors, "predicted_labels", path).astype(np.int64)
    stats = vectors.get("statistics")
    per_sample = tuple(
        (int(a), int(p), None if stats is None else float(stats[k]))
        for k, (a, p) in enumerate(zip(true_codes, pred_codes))
    )
    echo = {
        key[len("config_") :]: str(value)
        for key, value in scalars.items()
        if key.startswith("config_")
    }
    threshold = scalars.get("threshold")
    return DetectionReport(
        per_sample=per_sample,
        threshold=None if threshold is None else float(threshold),
        class_codes=tuple(int(c) for c in need(vectors, "class_codes", path)),
        confusion=tuple(
            tuple(int(v) for v in row) for row in need(matrices, "confusion", path)
        ),
        security=float(need(scalars, "security", path)),
        dependability=float(need(scalars, "dependability", path)),
        location_accuracy=float(need(scalars, "location_accuracy", path)),
        config_echo=echo,
        seed=int(need(scalars, "seed", path)),
    )


def write_series(path, values, label: str = "statistic") -> None:
    """Two-column plot-ready CSV: sample index, value."""
    from .dataio import format_float

    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1:
        raise InvalidInputError("series must be 1-D")
    lines = [f"sample,{label}"]
    lines.extend(f"{i},{format_float(v)}" for i, v in enumerate(values))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_per_sample_csv(report: DetectionReport, path) -> None:
    """Per-sample rows: index, true code, predicted code, statistic."""
    from .dataio import format_float

    has_stats = bool(report.per_sample) and report.per_sample[0][2] is not None
    header = "sample,true_label,predicted_label"
    if has_stats:
        header += ",statistic"
    lines = [header]
    for i, (a, p, s) in enumerate(report.per_sample):
        row = f"{i},{a},{p}"
        if has_stats:
            row += f",{format_float(s)}"
        lines.append(row)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
