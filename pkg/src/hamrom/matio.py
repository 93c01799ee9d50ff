"""Matrix and vector file exchange shared by every pipeline stage.

Two interchangeable on-disk encodings:

* CSV - one matrix row per line, full double precision (17 significant
  digits), readable by any plotting tool.
* SMRB - a small binary format: magic ``SMRB``, version (u32), rows (u64),
  cols (u64), then rows*cols little-endian IEEE-754 doubles in column-major
  order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

__all__ = [
    "write_matrix_csv",
    "read_matrix_csv",
    "write_matrix_smrb",
    "read_matrix_smrb",
    "write_matrix",
    "read_matrix",
    "write_metadata",
    "read_metadata",
]

_MAGIC = b"SMRB"
_VERSION = 1


def _as_matrix(values):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    if values.ndim != 2:
        raise ValueError(f"expected a vector or matrix, got ndim={values.ndim}")
    return values


def write_matrix_csv(path, values):
    values = _as_matrix(values)
    with open(path, "w", encoding="ascii") as fh:
        for row in values:
            fh.write(",".join(format(x, ".17g") for x in row))
            fh.write("\n")


def read_matrix_csv(path):
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(tok) for tok in line.split(",")])
    if not rows:
        return np.zeros((0, 0))
    return np.array(rows, dtype=float)


def write_matrix_smrb(path, values):
    values = _as_matrix(values)
    rows, cols = values.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IQQ", _VERSION, rows, cols))
        fh.write(np.asfortranarray(values).tobytes(order="F"))


def read_matrix_smrb(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {_MAGIC!r}")
        version, rows, cols = struct.unpack("<IQQ", fh.read(20))
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        data = np.frombuffer(fh.read(8 * rows * cols), dtype="<f8", count=rows * cols)
    return data.reshape((rows, cols), order="F").copy()


def write_matrix(path, values):
    """Dispatch on the file suffix (.csv or .smrb)."""
    path = Path(path)
    if path.suffix == ".csv":
        write_matrix_csv(path, values)
    elif path.suffix == ".smrb":
        write_matrix_smrb(path, values)
    else:
        raise ValueError(f"unknown matrix format: {path.suffix!r}")


def read_matrix(path):
    path = Path(path)
    if path.suffix == ".csv":
        return read_matrix_csv(path)
    if path.suffix == ".smrb":
        return read_matrix_smrb(path)
    raise ValueError(f"unknown matrix format: {path.suffix!r}")


def write_metadata(path, record):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_metadata(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
