"""Flat-binary and CSV persistence for matrices and grids.

Binary format: an 8-byte header of two little-endian uint32 (rows, cols)
followed by row-major little-endian float32 data.  CSV is provided for small
cases and interchange.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from ..errors import DomainError

_HEADER = struct.Struct("<II")


def write_matrix(path: str | Path, values: np.ndarray) -> None:
    arr = np.ascontiguousarray(values, dtype="<f4")
    if arr.ndim != 2:
        raise DomainError(f"expected a 2D array, got shape {arr.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes())


def read_matrix(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DomainError(f"{path}: truncated header")
    rows, cols = _HEADER.unpack_from(raw)
    expected = _HEADER.size + rows * cols * 4
    if len(raw) != expected:
        raise DomainError(f"{path}: expected {expected} bytes for {rows}x{cols}, got {len(raw)}")
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    return data.reshape(rows, cols).astype(np.float32)


def write_matrix_csv(path: str | Path, values: np.ndarray) -> None:
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim != 2:
        raise DomainError(f"expected a 2D array, got shape {arr.shape}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in arr:
            writer.writerow([repr(float(v)) for v in row])


def read_matrix_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[np.float32(v) for v in row] for row in csv.reader(fh) if row]
    if not rows:
        raise DomainError(f"{path}: empty CSV matrix")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DomainError(f"{path}: ragged CSV matrix")
    return np.array(rows, dtype=np.float32)
