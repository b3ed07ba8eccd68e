"""CSV ingestion and round-trippable JSON/CSV output."""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .errors import InputError


def fmt(x: float) -> str:
    return "%.17g" % x


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or obj is True or obj is False:
        return json.dumps(obj)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return '"nan"'
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        return fmt(x)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def read_table(path: str, required=("x",)) -> dict:
    """Read a headed numeric CSV into columns; errors name the offending line."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not UTF-8 text") from exc
    return parse_table(text, path, required)


def parse_table(text: str, name: str = "<csv>", required=("x",)) -> dict:
    reader = csv.reader(io.StringIO(text))
    header = None
    rows: list[list[float]] = []
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if header is None:
            header = [c.strip() for c in row]
            if len(set(header)) != len(header):
                raise InputError(f"{name}: line {lineno}: duplicate column names")
            missing = [c for c in required if c not in header]
            if missing:
                raise InputError(f"{name}: line {lineno}: missing required column(s) {missing}")
            continue
        if len(row) != len(header):
            raise InputError(f"{name}: line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise InputError(f"{name}: line {lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in vals):
            raise InputError(f"{name}: line {lineno}: non-finite value")
        rows.append(vals)
    if header is None:
        raise InputError(f"{name}: empty file")
    if not rows:
        raise InputError(f"{name}: no data rows")
    arr = np.asarray(rows, dtype=float)
    return {h: arr[:, i] for i, h in enumerate(header)}


def write_csv(path_or_handle, header, rows) -> None:
    own = isinstance(path_or_handle, str)
    fh = open(path_or_handle, "w", newline="", encoding="utf-8") if own else path_or_handle
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    finally:
        if own:
            fh.close()
