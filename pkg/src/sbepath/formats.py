"""On-disk formats for paths, measures and drift fields.

Text formats use 17 significant digits so a write/read round trip is exact.
Binary containers are little-endian throughout:

``SBEP`` (path), version 1::

    b"SBEP" | u8 version | u64 n | u32 d | f64[n] times | f64[n*d] values (row-major)

``SBED`` (drift field), version 1::

    b"SBED" | u8 version | u32 d | u32 m | u64[d] shape | f64[d] origin | f64[d] spacing
    | f64[4] (alpha2, p2, q2, r2) | f64[m] times | f64[m*prod(shape)*d] values
"""

from __future__ import annotations

import csv
import io
import struct
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .errors import ValidationError
from .paths import SampledPath

if TYPE_CHECKING:  # pragma: no cover
    from .occupation import OccupationMeasure
    from .young import DriftField

__all__ = [
    "write_path_csv",
    "read_path_csv",
    "write_path_binary",
    "read_path_binary",
    "read_path",
    "write_measure_csv",
    "read_measure_csv",
    "write_drift_binary",
    "read_drift_binary",
]

PATH_MAGIC = b"SBEP"
DRIFT_MAGIC = b"SBED"
VERSION = 1


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_rows(header: list[str], rows: np.ndarray) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _read_rows(text: str, first: str) -> tuple[list[str], np.ndarray]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ValidationError("empty CSV file") from None
    width = len(header)
    if width < 2 or header[0] != first or header[1:] != [f"x{i}" for i in range(1, width)]:
        raise ValidationError(f"CSV header must be {first},x1,...,xd; got {','.join(header)}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != width:
            raise ValidationError(f"CSV line {lineno} has {len(rec)} fields, expected {width}")
        try:
            rows.append([float(v) for v in rec])
        except ValueError:
            raise ValidationError(f"CSV line {lineno} is not numeric") from None
    return header, np.array(rows, dtype=np.float64).reshape(-1, width)


def write_path_csv(path: SampledPath, target) -> None:
    header = ["t"] + [f"x{i}" for i in range(1, path.dim + 1)]
    data = np.column_stack([path.times, path.values])
    Path(target).write_text(_write_rows(header, data))


def read_path_csv(source) -> SampledPath:
    _, rows = _read_rows(Path(source).read_text(), "t")
    return SampledPath(rows[:, 0], rows[:, 1:])


def write_path_binary(path: SampledPath, target) -> None:
    head = PATH_MAGIC + struct.pack("<BQI", VERSION, path.n, path.dim)
    body = path.times.astype("<f8").tobytes() + path.values.astype("<f8").tobytes()
    Path(target).write_bytes(head + body)


def read_path_binary(source) -> SampledPath:
    raw = Path(source).read_bytes()
    if raw[:4] != PATH_MAGIC:
        raise ValidationError("not an SBEP path container (bad magic)")
    if len(raw) < 17:
        raise ValidationError("truncated SBEP header")
    version, n, d = struct.unpack_from("<BQI", raw, 4)
    if version != VERSION:
        raise ValidationError(f"unsupported SBEP version {version}")
    expected = 17 + 8 * n * (1 + d)
    if len(raw) != expected:
        raise ValidationError(f"SBEP payload has {len(raw)} bytes, expected {expected}")
    data = np.frombuffer(raw, dtype="<f8", offset=17)
    return SampledPath(data[:n].copy(), data[n:].reshape(n, d).copy())


def read_path(source) -> SampledPath:
    """Read a path from CSV or SBEP, sniffing the magic bytes."""
    with open(source, "rb") as fh:
        magic = fh.read(4)
    if magic == PATH_MAGIC:
        return read_path_binary(source)
    return read_path_csv(source)


def write_measure_csv(mu: "OccupationMeasure", target) -> None:
    header = ["w"] + [f"x{i}" for i in range(1, mu.dim + 1)]
    data = np.column_stack([mu.weights, mu.atoms])
    Path(target).write_text(_write_rows(header, data))


def read_measure_csv(source) -> "OccupationMeasure":
    from .occupation import OccupationMeasure

    _, rows = _read_rows(Path(source).read_text(), "w")
    if rows.shape[0] == 0:
        raise ValidationError("measure CSV has no atoms")
    return OccupationMeasure(rows[:, 1:], rows[:, 0])


def write_drift_binary(field: "DriftField", target) -> None:
    d = field.dim
    shape = field.grid_shape
    head = DRIFT_MAGIC + struct.pack("<BII", VERSION, d, field.times.size)
    head += struct.pack(f"<{d}Q", *shape)
    head += np.asarray(field.origin, dtype="<f8").tobytes()
    head += np.asarray(field.spacing, dtype="<f8").tobytes()
    reg = [field.alpha2, field.p2, field.q2, field.r2]
    head += np.asarray(reg, dtype="<f8").tobytes()
    body = field.times.astype("<f8").tobytes() + field.values.astype("<f8").tobytes()
    Path(target).write_bytes(head + body)


def read_drift_binary(source, check_regularity: bool = False) -> "DriftField":
    from .young import DriftField

    raw = Path(source).read_bytes()
    if raw[:4] != DRIFT_MAGIC:
        raise ValidationError("not an SBED drift container (bad magic)")
    try:
        version, d, m = struct.unpack_from("<BII", raw, 4)
        if version != VERSION:
            raise ValidationError(f"unsupported SBED version {version}")
        off = 13
        shape = struct.unpack_from(f"<{d}Q", raw, off)
        off += 8 * d
        origin = np.frombuffer(raw, dtype="<f8", count=d, offset=off)
        off += 8 * d
        spacing = np.frombuffer(raw, dtype="<f8", count=d, offset=off)
        off += 8 * d
        alpha2, p2, q2, r2 = np.frombuffer(raw, dtype="<f8", count=4, offset=off)
        off += 32
        times = np.frombuffer(raw, dtype="<f8", count=m, offset=off)
        off += 8 * m
        count = m * int(np.prod(shape)) * d
        if len(raw) != off + 8 * count:
            raise ValidationError(f"SBED payload has {len(raw)} bytes, expected {off + 8 * count}")
        values = np.frombuffer(raw, dtype="<f8", count=count, offset=off).reshape((m, *shape, d))
    except struct.error:
        raise ValidationError("truncated SBED header") from None
    return DriftField(times.copy(), origin.copy(), spacing.copy(), values.copy(),
                      alpha2=float(alpha2), p2=float(p2), q2=float(q2), r2=float(r2),
                      check_regularity=check_regularity)
