"""Deterministic JSON/JSONL helpers.

Reports are golden-file tested byte for byte, so floats are always
written with 17 significant digits (enough to round-trip any double)
and dict keys keep insertion order. NaN/inf never appear in outputs;
they signal a bug upstream and are rejected.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import DataError


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise DataError(f"non-finite value {x!r} in JSON output")
    return "%.17g" % x


def _write_value(out: list, value, indent: int, step: str) -> None:
    pad = step * indent
    if isinstance(value, dict):
        if not value:
            out.append("{}")
            return
        out.append("{\n")
        items = list(value.items())
        for i, (key, val) in enumerate(items):
            out.append(f"{pad}{step}{json.dumps(str(key))}: ")
            _write_value(out, val, indent + 1, step)
            out.append(",\n" if i + 1 < len(items) else "\n")
        out.append(pad + "}")
    elif isinstance(value, (list, tuple)) or isinstance(value, np.ndarray):
        seq = list(value)
        if not seq:
            out.append("[]")
            return
        out.append("[")
        for i, val in enumerate(seq):
            _write_value(out, val, indent + 1, step)
            if i + 1 < len(seq):
                out.append(", ")
        out.append("]")
    elif isinstance(value, (bool, np.bool_)):
        out.append("true" if value else "false")
    elif value is None:
        out.append("null")
    elif isinstance(value, (int, np.integer)):
        out.append(str(int(value)))
    elif isinstance(value, (float, np.floating)):
        out.append(format_float(float(value)))
    elif isinstance(value, str):
        out.append(json.dumps(value))
    else:
        raise DataError(f"cannot serialize {type(value).__name__} to JSON")


def dumps_json(obj, indent: int = 2) -> str:
    out: list[str] = []
    _write_value(out, obj, 0, " " * indent)
    out.append("\n")
    return "".join(out)


def dumps_jsonl_obj(obj) -> str:
    """Single-line canonical JSON for JSONL records."""
    if isinstance(obj, dict):
        body = ", ".join(f"{json.dumps(str(k))}: {dumps_jsonl_obj(v)}" for k, v in obj.items())
        return "{" + body + "}"
    if isinstance(obj, (list, tuple)) or isinstance(obj, np.ndarray):
        return "[" + ", ".join(dumps_jsonl_obj(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise DataError(f"cannot serialize {type(obj).__name__} to JSON")


def write_json(path, obj) -> None:
    Path(path).write_bytes(dumps_json(obj).encode("utf-8"))


def read_jsonl(path):
    """Yield (line_number, object) pairs; malformed lines are data errors."""
    for i, text in enumerate(Path(path).read_text().splitlines(), start=1):
        if not text.strip():
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise DataError(f"{path}: line {i}: invalid JSON: {e.msg}") from None
        if not isinstance(obj, dict):
            raise DataError(f"{path}: line {i}: each line must hold a JSON object")
        yield i, obj


def write_jsonl(path, objs) -> None:
    with open(path, "w") as fh:
        for obj in objs:
            fh.write(dumps_jsonl_obj(obj))
            fh.write("\n")
