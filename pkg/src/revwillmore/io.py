"""Plain-text artifact formats: curve CSV, generic tables, JSON."""

from __future__ import annotations

import csv
import json
import math
import os
from typing import Iterable, Sequence

import numpy as np

from .hcurve import ProfileCurve


def fmt(value: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".17g")


def write_table(path: str, header: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_table(path: str) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
    return header, data.reshape(-1, len(header))


def write_curve(path: str, curve: ProfileCurve) -> None:
    """Curve CSV with header ``x,a,r``."""
    write_table(path, ["x", "a", "r"], zip(curve.x, curve.a, curve.r))


def read_curve(path: str) -> ProfileCurve:
    header, data = read_table(path)
    if header != ["x", "a", "r"]:
        raise ValueError(f"{path}: expected header x,a,r, got {','.join(header)}")
    N = data.shape[0] - 1
    if N >= 1 and np.max(np.abs(data[:, 0] - np.arange(N + 1) / N)) > 1e-9:
        raise ValueError(f"{path}: x column is not the uniform grid i/N")
    return ProfileCurve(data[:, 1:3])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, non-finite numbers become null."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
