"""CSV / JSON writers shared by the library and the command line."""

from __future__ import annotations

import hashlib
import io
import json
from pathlib import Path

import numpy as np

FLOAT_FORMAT = "{:.12g}"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FORMAT.format(float(v))
    return str(v)


def csv_text(header, rows) -> str:
    """Comma separated text with a header row and LF line endings."""
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_csv(path, header, rows) -> str:
    text = csv_text(header, rows)
    Path(path).write_bytes(text.encode("utf-8"))
    return text


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default, ensure_ascii=False) + "\n"


def write_json(path, obj) -> str:
    text = json_text(obj)
    Path(path).write_bytes(text.encode("utf-8"))
    return text


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
