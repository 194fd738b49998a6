"""Deterministic JSON text with every float written to 17 significant digits."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def _enc(v, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return "null"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return "null"
        s = format(v, ".17g")
        return s if any(c in s for c in ".en") else s + ".0"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_enc(v[k], indent, level + 1)}" for k in sorted(v)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        v = list(v)
        if not v:
            return "[]"
        if all(isinstance(x, (int, float, np.number, bool, type(None))) for x in v):
            return "[" + ", ".join(_enc(x, indent, level + 1) for x in v) + "]"
        return "[\n" + ",\n".join(pad + _enc(x, indent, level + 1) for x in v) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _enc(obj, indent, 0) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path
