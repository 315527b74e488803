"""Canonical JSON encoding used for all externally visible payloads.

Every JSON document the runtime emits (CLI output, HTTP bodies, the
evaluation store's JSON-lines files) goes through :func:`dumps` so that
identical values always serialize to identical bytes: keys sorted,
compact separators, ASCII-only, and floats rendered with the shortest
round-trip representation of the underlying double.
"""

from __future__ import annotations

import json
import math
from typing import Any


class _CanonicalEncoder(json.JSONEncoder):
    def default(self, o: Any) -> Any:
        # numpy scalars/arrays arrive from pipeline and predictor code.
        if hasattr(o, "item") and not hasattr(o, "__len__"):
            return o.item()
        if hasattr(o, "tolist"):
            return o.tolist()
        if isinstance(o, (set, frozenset)):
            return sorted(o)
        return super().default(o)


def _reject_nonfinite(value: float) -> float:
    if not math.isfinite(value):
        raise ValueError(f"non-finite float {value!r} is not representable in canonical JSON")
    return value


def canonicalize(obj: Any) -> Any:
    """Return a plain-Python copy of *obj* with deterministic scalar types."""
    if isinstance(obj, dict):
        return {str(k): canonicalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonicalize(v) for v in obj]
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, float):
        return _reject_nonfinite(float(obj))
    if isinstance(obj, int):
        return int(obj)
    if isinstance(obj, str):
        return obj
    if hasattr(obj, "item") and not hasattr(obj, "__len__"):
        return canonicalize(obj.item())
    if hasattr(obj, "tolist"):
        return canonicalize(obj.tolist())
    if isinstance(obj, (set, frozenset)):
        return sorted(canonicalize(v) for v in obj)
    raise TypeError(f"cannot canonicalize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """Serialize *obj* to a canonical JSON string."""
    return json.dumps(
        canonicalize(obj),
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=True,
        allow_nan=False,
        cls=_CanonicalEncoder,
    )


def dump_bytes(obj: Any) -> bytes:
    return dumps(obj).encode("utf-8")


def loads(text: str | bytes) -> Any:
    return json.loads(text)


def format_fraction(value: float) -> str:
    """Fixed 4-decimal formatting for accuracy/latency summary tables."""
    return f"{value:.4f}"
