"""File I/O: design matrices, response vectors, and report tables.

Matrix formats:
  * headerless CSV, rows = samples, comma separated;
  * binary: 8-byte magic ``HDRIDGE1``, little-endian u64 n, u64 p, then
    n*p float64 values in column-major order.
``read_design`` sniffs the magic to pick the reader. Report tables are
written as CSV (one row per estimate, fixed header) or JSON; numbers use
shortest round-trip formatting so re-parsing reproduces them exactly.
"""

from __future__ import annotations

import csv
import json
import struct
import sys
from typing import Optional, Union

import numpy as np

from .errors import DataError
from .report import ROW_FIELDS

__all__ = [
    "MAGIC",
    "read_matrix_csv",
    "write_matrix_csv",
    "read_matrix_bin",
    "write_matrix_bin",
    "read_design",
    "read_vector",
    "write_rows_csv",
    "read_rows_csv",
    "write_json",
    "format_float",
]

MAGIC = b"HDRIDGE1"


def format_float(x) -> str:
    """Shortest string that round-trips to the same float ('' for missing)."""
    if x is None:
        return ""
    x = float(x)
    return repr(x)


def read_matrix_csv(path: str) -> np.ndarray:
    """Headerless CSV matrix; errors carry file, line, and expectation."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"{path}: cannot read file ({exc})") from exc
    rows = []
    width: Optional[int] = None
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        fields = line.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise DataError(f"{path}: line {line_no}: expected {width} fields, got {len(fields)}")
        row = []
        for col_no, tok in enumerate(fields, start=1):
            try:
                row.append(float(tok))
            except ValueError:
                raise DataError(
                    f"{path}: line {line_no}: field {col_no}: expected a number, got {tok.strip()!r}"
                ) from None
        rows.append(row)
    if not rows:
        raise DataError(f"{path}: empty file, expected at least one CSV row")
    return np.asarray(rows, dtype=np.float64)


def write_matrix_csv(path: str, arr: np.ndarray) -> None:
    arr = np.asarray(arr, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.atleast_2d(arr):
            fh.write(",".join(format_float(v) for v in row))
            fh.write("\n")


def read_matrix_bin(path: str) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise DataError(f"{path}: cannot read file ({exc})") from exc
    if len(blob) < 24 or blob[:8] != MAGIC:
        raise DataError(f"{path}: not a {MAGIC.decode()} binary matrix (bad magic)")
    n, p = struct.unpack("<QQ", blob[8:24])
    expected = 24 + 8 * n * p
    if len(blob) != expected:
        raise DataError(f"{path}: expected {expected} bytes for {n}x{p} matrix, got {len(blob)}")
    values = np.frombuffer(blob, dtype="<f8", offset=24)
    return values.reshape((n, p), order="F").copy()


def write_matrix_bin(path: str, arr: np.ndarray) -> None:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"binary matrix format needs a 2-d array, got ndim={arr.ndim}")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQ", arr.shape[0], arr.shape[1]))
        fh.write(np.asfortranarray(arr, dtype="<f8").tobytes(order="F"))


def read_design(path: str) -> np.ndarray:
    """Matrix from CSV or binary, chosen by sniffing the 8-byte magic."""
    try:
        with open(path, "rb") as fh:
            head = fh.read(8)
    except OSError as exc:
        raise DataError(f"{path}: cannot read file ({exc})") from exc
    if head == MAGIC:
        return read_matrix_bin(path)
    return read_matrix_csv(path)


def read_vector(path: str) -> np.ndarray:
    """Response vector: one number per line (or a single CSV column)."""
    arr = read_matrix_csv(path)
    if arr.shape[1] != 1:
        raise DataError(f"{path}: expected one value per line, got {arr.shape[1]} columns")
    return arr[:, 0]


def _open_out(path_or_dash: str):
    if path_or_dash == "-":
        return sys.stdout, False
    return open(path_or_dash, "w", encoding="utf-8", newline=""), True


def write_rows_csv(path: str, rows: list[dict]) -> None:
    """Report rows as CSV with the fixed field order of ROW_FIELDS."""
    fh, should_close = _open_out(path)
    try:
        writer = csv.writer(fh)
        writer.writerow(ROW_FIELDS)
        for row in rows:
            out = []
            for key in ROW_FIELDS:
                val = row.get(key)
                if key == "converged":
                    out.append("true" if val else "false")
                elif key in ("method", "flags"):
                    out.append("" if val is None else str(val))
                elif key in ("seed", "replicate"):
                    out.append("" if val is None else str(int(val)))
                else:
                    out.append(format_float(val))
            writer.writerow(out)
    finally:
        if should_close:
            fh.close()


def read_rows_csv(path: str) -> list[dict]:
    """Inverse of write_rows_csv (for round-trip checks and golden files)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != ROW_FIELDS:
            raise DataError(f"{path}: unexpected report header {header}")
        rows = []
        for raw in reader:
            row: dict = {}
            for key, tok in zip(ROW_FIELDS, raw):
                if key in ("method", "flags"):
                    row[key] = tok
                elif key == "converged":
                    row[key] = tok == "true"
                elif key in ("seed", "replicate"):
                    row[key] = None if tok == "" else int(tok)
                else:
                    row[key] = None if tok == "" else float(tok)
            rows.append(row)
    return rows


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_json(path: str, payload: Union[dict, list]) -> None:
    fh, should_close = _open_out(path)
    try:
        json.dump(payload, fh, indent=2, default=_jsonable)
        fh.write("\n")
    finally:
        if should_close:
            fh.close()
