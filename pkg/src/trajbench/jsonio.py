"""Deterministic JSON helpers: canonical bytes, hashes, 17-digit floats."""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any


def canonical_dumps(doc: Any, indent: int | None = 2) -> str:
    """Stable JSON text: sorted keys, fixed separators, trailing newline."""
    if indent is None:
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return json.dumps(doc, sort_keys=True, indent=indent) + "\n"


def sha256_hex(text: str, length: int = 12) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:length]


def _fmt17(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x!r}")
    return format(x, ".17g")


def dumps_17g(doc: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats rendered at 17 significant digits (bit-exact round trip).

    Keys are sorted; only dict/list/str/int/float/bool/None are supported.
    """
    pad = " " * (indent * _level)
    inner = " " * (indent * (_level + 1))
    if isinstance(doc, dict):
        if not doc:
            return "{}"
        items = [f'{inner}{json.dumps(str(k))}: {dumps_17g(v, indent, _level + 1)}'
                 for k, v in sorted(doc.items())]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(doc, (list, tuple)):
        if not doc:
            return "[]"
        items = [f"{inner}{dumps_17g(v, indent, _level + 1)}" for v in doc]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(doc, bool) or doc is None:
        return json.dumps(doc)
    if isinstance(doc, float):
        return _fmt17(doc)
    if isinstance(doc, int):
        return str(doc)
    if isinstance(doc, str):
        return json.dumps(doc)
    raise TypeError(f"unsupported type for JSON serialization: {type(doc)}")
