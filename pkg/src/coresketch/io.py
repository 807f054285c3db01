"""Dataset serialization: text CSV and the CSK1 binary container.

CSV layout: one row per point, d float columns, optionally followed by a
final ``weight`` column. A header row is detected by a non-numeric first
line; the weight column is recognized by its header name (case-insensitive).
Files without a weight column load with uniform weights 1/n. Floats are
emitted with shortest round-trip precision, so CSV -> binary -> CSV is
byte-stable.

Binary layout (all little-endian):

    magic  b"CSK1"  | u64 n | u64 d | u8 flags | f64 points row-major | f64 weights

Flag bit 0 marks the presence of the trailing weights block; without it the
reader synthesizes uniform weights 1/n.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .data import WeightedDataset

MAGIC = b"CSK1"
_HEADER = struct.Struct("<4sQQB")
FLAG_WEIGHTS = 0x01

__all__ = [
    "read_csv", "write_csv", "read_binary", "write_binary", "iter_csv",
    "load_dataset", "save_dataset", "serialized_size", "MAGIC",
]


def serialized_size(n: int, d: int, with_weights: bool = True) -> int:
    """Exact byte size of the binary encoding: header + 8nd points (+ 8n weights)."""
    return _HEADER.size + 8 * n * d + (8 * n if with_weights else 0)


def write_binary(dataset: WeightedDataset, path, include_weights: bool = True) -> int:
    """Write the CSK1 encoding; returns the number of bytes written."""
    flags = FLAG_WEIGHTS if include_weights else 0
    payload = [_HEADER.pack(MAGIC, dataset.n, dataset.d, flags),
               np.ascontiguousarray(dataset.points, dtype="<f8").tobytes()]
    if include_weights:
        payload.append(np.ascontiguousarray(dataset.weights, dtype="<f8").tobytes())
    blob = b"".join(payload)
    Path(path).write_bytes(blob)
    return len(blob)


def read_binary(path) -> WeightedDataset:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, n, d, flags = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    expected = serialized_size(n, d, bool(flags & FLAG_WEIGHTS))
    if len(blob) != expected:
        raise ValueError(f"{path}: size {len(blob)} does not match header (expected {expected})")
    body = memoryview(blob)[_HEADER.size:]
    points = np.frombuffer(body[: 8 * n * d], dtype="<f8").reshape(n, d)
    weights = None
    if flags & FLAG_WEIGHTS:
        weights = np.frombuffer(body[8 * n * d:], dtype="<f8")
    return WeightedDataset(points, weights)


def _fmt(value: float) -> str:
    return repr(float(value))


def write_csv(dataset: WeightedDataset, path, include_weights: bool = True) -> None:
    lines = []
    cols = [f"x{j}" for j in range(dataset.d)]
    if include_weights:
        cols.append("weight")
    lines.append(",".join(cols))
    for i in range(dataset.n):
        row = [_fmt(v) for v in dataset.points[i]]
        if include_weights:
            row.append(_fmt(dataset.weights[i]))
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def _is_float_row(fields: list[str]) -> bool:
    try:
        for f in fields:
            float(f)
    except ValueError:
        return False
    return True


def read_csv(path) -> WeightedDataset:
    text = Path(path).read_text()
    rows = [line.strip() for line in text.splitlines() if line.strip()]
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    first = [f.strip() for f in rows[0].split(",")]
    has_header = not _is_float_row(first)
    has_weights = has_header and first[-1].lower() == "weight"
    data_rows = rows[1:] if has_header else rows
    if not data_rows:
        raise ValueError(f"{path}: header but no data rows")
    width = None
    values = []
    for lineno, row in enumerate(data_rows, start=2 if has_header else 1):
        fields = [f.strip() for f in row.split(",")]
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise ValueError(f"{path}:{lineno}: expected {width} fields, got {len(fields)}")
        try:
            values.append([float(f) for f in fields])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: non-numeric field") from exc
    arr = np.asarray(values, dtype=np.float64)
    if has_weights:
        if arr.shape[1] < 2:
            raise ValueError(f"{path}: weight column present but no coordinate columns")
        return WeightedDataset(arr[:, :-1], arr[:, -1])
    return WeightedDataset(arr)


def iter_csv(path):
    """Yield (point, weight-or-None) per CSV row without loading the file.

    Same dialect as ``read_csv``: optional header detected by a non-numeric
    first line, weights read iff the last header field is ``weight``.
    """
    with open(path) as fh:
        first = None
        for line in fh:
            if line.strip():
                first = [f.strip() for f in line.strip().split(",")]
                break
        if first is None:
            raise ValueError(f"{path}: empty CSV")
        has_header = not _is_float_row(first)
        has_weights = has_header and first[-1].lower() == "weight"
        width = len(first)

        def _parse(fields, lineno):
            if len(fields) != width:
                raise ValueError(f"{path}:{lineno}: expected {width} fields, got {len(fields)}")
            try:
                vals = [float(f) for f in fields]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric field") from exc
            if has_weights:
                return np.asarray(vals[:-1]), vals[-1]
            return np.asarray(vals), None

        lineno = 1
        if not has_header:
            yield _parse(first, lineno)
        for line in fh:
            lineno += 1
            if not line.strip():
                continue
            yield _parse([f.strip() for f in line.strip().split(",")], lineno)


_BINARY_SUFFIXES = {".bin", ".csk"}


def load_dataset(path, fmt: str | None = None) -> WeightedDataset:
    """Load CSV or binary by explicit ``fmt`` ('csv'/'bin') or file suffix."""
    if fmt is None:
        fmt = "bin" if Path(path).suffix.lower() in _BINARY_SUFFIXES else "csv"
    if fmt == "csv":
        return read_csv(path)
    if fmt == "bin":
        return read_binary(path)
    raise ValueError(f"unknown dataset format {fmt!r}")


def save_dataset(dataset: WeightedDataset, path, fmt: str | None = None,
                 include_weights: bool = True) -> None:
    if fmt is None:
        fmt = "bin" if Path(path).suffix.lower() in _BINARY_SUFFIXES else "csv"
    if fmt == "csv":
        write_csv(dataset, path, include_weights)
    elif fmt == "bin":
        write_binary(dataset, path, include_weights)
    else:
        raise ValueError(f"unknown dataset format {fmt!r}")
