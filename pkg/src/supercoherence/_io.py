"""Atomic file output and the shared CSV/JSON conventions.

CSV files carry ``# key=value`` metadata lines (values JSON-encoded), then a
header row, then rows with floats written by ``repr`` so they round-trip
exactly.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__


def atomic_write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _plain(value):
    """Make numpy scalars/arrays and enums JSON friendly."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    if hasattr(value, "value") and hasattr(value, "name") and not isinstance(value, (int, float)):
        return value.value
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def to_json(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=False)


def format_value(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def csv_text(columns, rows, meta=None):
    lines = []
    meta = dict(meta or {})
    meta.setdefault("version", __version__)
    for key, value in meta.items():
        lines.append(f"# {key}={json.dumps(_plain(value))}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, columns, rows, meta=None):
    atomic_write_text(path, csv_text(columns, rows, meta))


def parse_cell(text):
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(path):
    """Return (meta, columns, rows) from a file written by :func:`write_csv`."""
    meta, columns, rows = {}, None, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = json.loads(value) if value else None
            elif columns is None:
                columns = line.split(",")
            elif line:
                rows.append([parse_cell(c) for c in line.split(",")])
    return meta, columns, rows


def write_json(path, obj):
    atomic_write_text(path, to_json(obj) + "\n")
