"""File formats: matrix CSV, result CSV, JSON documents."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from ..errors import ValidationError

__all__ = [
    "write_matrix_csv",
    "read_matrix_csv",
    "write_table_csv",
    "read_table_csv",
    "write_json",
    "read_json",
    "canonical_json",
    "digest",
    "format_cell",
]


def write_matrix_csv(path, Y) -> Path:
    """Row-major, comma separated, no header, 17 significant digits."""
    Y = np.asarray(getattr(Y, "values", Y), dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, Y, fmt="%.17g", delimiter=",")
    return path


def read_matrix_csv(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"matrix file {path} does not exist")
    try:
        Y = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except ValueError as exc:
        raise ValidationError(f"cannot parse matrix CSV {path}: {exc}") from exc
    if Y.size == 0:
        raise ValidationError(f"matrix file {path} is empty")
    if not np.all(np.isfinite(Y)):
        raise ValidationError(f"matrix file {path} contains non-finite entries")
    return Y


def format_cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def write_table_csv(path, columns, rows) -> Path:
    """RFC-4180 CSV (CRLF line ends, minimal quoting) with a header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([format_cell(c) for c in row])
    return path


def read_table_csv(path):
    """Header and rows (strings) of a result CSV."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def digest(doc) -> str:
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


def write_json(path, doc) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def read_json(path):
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"JSON file {path} does not exist")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON in {path}: {exc}") from exc
