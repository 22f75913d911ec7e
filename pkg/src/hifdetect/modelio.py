"""Line-oriented text persistence for fitted models.

The format is deliberately plain so files diff cleanly and round-trip
exactly: one record per line, space-separated, floats rendered with
repr-precision decimal digits.

    hifdetect-model <kind>
    scalar <name> <int|float|str> <value>
    vector <name> <k> <v1> ... <vk>
    matrix <name> <rows> <cols>
    <row of cols floats>          (rows times)
"""

from __future__ import annotations

import os

import numpy as np

from .dataio import format_float
from .errors import DataFormatError

_MAGIC = "hifdetect-model"


def write_model(path, kind: str, scalars: dict, vectors: dict, matrices: dict) -> None:
    """Writes a model file atomically (temp file then rename)."""
    lines = [f"{_MAGIC} {kind}"]
    for name, value in scalars.items():
        if isinstance(value, bool):
            raise ValueError(f"scalar {name}: bools are not supported")
        if isinstance(value, (int, np.integer)):
            lines.append(f"scalar {name} int {int(value)}")
        elif isinstance(value, (float, np.floating)):
            lines.append(f"scalar {name} float {format_float(value)}")
        else:
            lines.append(f"scalar {name} str {value}")
    for name, vec in vectors.items():
        vec = np.asarray(vec, dtype=np.float64)
        vals = " ".join(format_float(v) for v in vec)
        lines.append(f"vector {name} {vec.size} {vals}".rstrip())
    for name, mat in matrices.items():
        mat = np.asarray(mat, dtype=np.float64)
        r, c = mat.shape
        lines.append(f"matrix {name} {r} {c}")
        for i in range(r):
            lines.append(" ".join(format_float(v) for v in mat[i]))
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def read_model(path, kind: str):
    """Reads a model file; returns (scalars, vectors, matrices).

    Raises:
        DataFormatError: naming the first offending line.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw or not raw[0].strip():
        raise DataFormatError(path, 1, "missing header")
    head = raw[0].split()
    if head != [_MAGIC, kind]:
        raise DataFormatError(path, 1, f"expected '{_MAGIC} {kind}', got {raw[0]!r}")
    scalars, vectors, matrices = {}, {}, {}
    lineno = 1
    while lineno < len(raw):
        line = raw[lineno]
        lineno += 1
        if not line.strip():
            continue
        fields = line.split()
        tag = fields[0]
        if tag == "scalar":
            if len(fields) < 4:
                raise DataFormatError(path, lineno, "scalar needs name, type, value")
            name, typ = fields[1], fields[2]
            text = " ".join(fields[3:])
            try:
                if typ == "int":
                    scalars[name] = int(text)
                elif typ == "float":
                    scalars[name] = float(text)
                elif typ == "str":
                    scalars[name] = text
                else:
                    raise DataFormatError(path, lineno, f"unknown scalar type {typ!r}")
            except ValueError:
                raise DataFormatError(path, lineno, f"bad {typ} value {text!r}") from None
        elif tag == "vector":
            if len(fields) < 3:
                raise DataFormatError(path, lineno, "vector needs name and length")
            name = fields[1]
            try:
                k = int(fields[2])
                vals = [float(v) for v in fields[3:]]
            except ValueError:
                raise DataFormatError(path, lineno, "bad vector entry") from None
            if len(vals) != k:
                raise DataFormatError(
                    path, lineno, f"vector {name} expected {k} values, got {len(vals)}"
                )
            vectors[name] = np.array(vals)
        elif tag == "matrix":
            if len(fields) != 4:
                raise DataFormatError(path, lineno, "matrix needs name, rows, cols")
            name = fields[1]
            try:
                r, c = int(fields[2]), int(fields[3])
            except ValueError:
                raise DataFormatError(path, lineno, "bad matrix dimensions") from None
            if r < 0 or c < 0:
                raise DataFormatError(path, lineno, "negative matrix dimensions")
            rows = np.empty((r, c))
            for i in range(r):
                if lineno >= len(raw):
                    raise DataFormatError(path, lineno + 1, f"matrix {name} truncated")
                entries = raw[lineno].split()
                lineno += 1
                if len(entries) != c:
                    raise DataFormatError(
                        path, lineno, f"matrix {name} row has {len(entries)} of {c} values"
                    )
                try:
                    rows[i] = [float(v) for v in entries]
                except ValueError:
                    raise DataFormatError(path, lineno, "bad matrix entry") from None
            matrices[name] = rows
        else:
            raise DataFormatError(path, lineno, f"unknown directive {tag!r}")
    return scalars, vectors, matrices


def need(mapping: dict, name: str, path) -> object:
    """Fetches a required record, mapping absence to a format error."""
    try:
        return mapping[name]
    except KeyError:
        raise DataFormatError(path, 0, f"missing record {name!r}") from None
