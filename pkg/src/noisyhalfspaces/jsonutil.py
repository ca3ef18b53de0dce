"""Deterministic JSON output with 17-significant-digit floats.

The stdlib encoder prints shortest-round-trip floats; the interchange
formats here pin 17 significant digits instead, so reports and models are
byte-stable across platforms and reload to the exact same values.
"""

from __future__ import annotations

import json
import math


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    close_pad = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError("cannot serialize non-finite float")
        return format(obj, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        items = [_encode(v, indent, level + 1) for v in obj]
        if not items:
            return "[]"
        if indent:
            body = (",\n" + pad).join(items)
            return "[\n" + pad + body + "\n" + close_pad + "]"
        return "[" + ", ".join(items) + "]"
    if isinstance(obj, dict):
        items = [
            json.dumps(str(k)) + ": " + _encode(v, indent, level + 1)
            for k, v in obj.items()
        ]
        if not items:
            return "{}"
        if indent:
            body = (",\n" + pad).join(items)
            return "{\n" + pad + body + "\n" + close_pad + "}"
        return "{" + ", ".join(items) + "}"
    if hasattr(obj, "item"):  # numpy scalars
        return _encode(obj.item(), indent, level)
    if hasattr(obj, "tolist"):  # numpy arrays
        return _encode(obj.tolist(), indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 0) -> str:
    """Serialize to JSON with floats rendered as %.17g decimals."""
    return _encode(obj, indent, 0)
