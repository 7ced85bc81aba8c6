"""Serialization: scale JSON, coefficient files, CSV series and JSON reports."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import ShapeError
from .scales import Scale, scale_from_dict

SCHEMA_VERSION = "scv/1"


def scale_to_json(scale: Scale) -> str:
    return json.dumps(scale.to_dict(), sort_keys=True)


def scale_from_json(text: str) -> Scale:
    return scale_from_dict(json.loads(text))


def write_coefficients(path, x) -> None:
    """uint64 little-endian length, then the float64 little-endian entries."""
    x = np.ascontiguousarray(np.asarray(x, dtype="<f8").ravel())
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", x.shape[0]))
        fh.write(x.tobytes())


def read_coefficients(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise ShapeError(f"{path}: missing length prefix")
    (n,) = struct.unpack_from("<Q", data)
    if len(data) != 8 + 8 * n:
        raise ShapeError(f"{path}: length prefix {n} does not match {(len(data) - 8) / 8:g} stored values")
    return np.frombuffer(data, dtype="<f8", offset=8, count=n).astype(float)


def coefficients_to_json(x) -> str:
    return json.dumps([float(v) for v in np.asarray(x, dtype=float).ravel()])


def coefficients_from_json(text: str) -> np.ndarray:
    vals = json.loads(text)
    if not isinstance(vals, list):
        raise ShapeError("coefficient JSON must be a flat array")
    return np.asarray(vals, dtype=float)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps_report(report: dict) -> str:
    """Deterministic JSON: sorted keys, non-finite floats as strings."""
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        vals = [r.get(c) for c in columns] if isinstance(r, dict) else list(r)
        w.writerow([_jsonable(v) for v in vals])
    return buf.getvalue()


def write_csv(path, columns, rows) -> None:
    atomic_write(path, csv_text(columns, rows))
