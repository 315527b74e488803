"""Trace spans across the six abstraction levels, with aggregation.

Levels, coarse to fine: application, model, framework, layer, library,
hardware. A collector is created per evaluation with a requested trace
level; spans finer than that level are dropped at the source, and a
request with level "none" collects nothing, so tracing costs nothing
unless asked for.

Span timestamps come from the monotonic clock (wall-clock time, when
wanted, travels as a tag) so interval arithmetic never sees clock jumps.
"""

from __future__ import annotations

import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Iterator

LEVELS = ("application", "model", "framework", "layer", "library", "hardware")
TRACE_LEVELS = ("none",) + LEVELS

_LEVEL_INDEX = {name: i for i, name in enumerate(LEVELS)}


class TraceError(ValueError):
    pass


def level_index(level: str) -> int:
    try:
        return _LEVEL_INDEX[level]
    except KeyError:
        raise TraceError(f"unknown trace level {level!r} (expected one of {', '.join(LEVELS)})")


@dataclass(frozen=True)
class TraceSpan:
    span_id: str
    name: str
    level: str
    start_ns: int
    end_ns: int
    parent_id: str | None = None
    tags: dict[str, Any] = field(default_factory=dict)

    def duration_ns(self) -> int:
        return self.end_ns - self.start_ns

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "span_id": self.span_id,
            "parent_id": self.parent_id,
            "level": self.level,
            "name": self.name,
            "start_ns": self.start_ns,
            "end_ns": self.end_ns,
            "tags": self.tags,
        }


def span_from_json_obj(obj: dict[str, Any]) -> TraceSpan:
    return TraceSpan(
        span_id=str(obj["span_id"]),
        parent_id=obj.get("parent_id"),
        level=str(obj["level"]),
        name=str(obj["name"]),
        start_ns=int(obj["start_ns"]),
        end_ns=int(obj["end_ns"]),
        tags=dict(obj.get("tags", {})),
    )


def _validate_span(span: TraceSpan) -> None:
    level_index(span.level)
    if span.end_ns < span.start_ns:
        raise TraceError(f"span {span.span_id!r}: end precedes start")
    if not span.name:
        raise TraceError(f"span {span.span_id!r}: empty name")


def _check_structure(spans: list[TraceSpan]) -> dict[str, TraceSpan]:
    by_id: dict[str, TraceSpan] = {}
    for span in spans:
        _validate_span(span)
        if span.span_id in by_id:
            raise TraceError(f"duplicate span id {span.span_id!r}")
        by_id[span.span_id] = span
    for span in spans:
        if span.parent_id is None:
            continue
        parent = by_id.get(span.parent_id)
        if parent is None:
            raise TraceError(f"span {span.span_id!r}: unknown parent {span.parent_id!r}")
        if level_index(span.level) < level_index(parent.level):
            raise TraceError(
                f"span {span.span_id!r} ({span.level}) is coarser than its parent ({parent.level})"
            )
        if span.start_ns < parent.start_ns or span.end_ns > parent.end_ns:
            raise TraceError(
                f"span {span.span_id!r} interval exceeds its parent {parent.span_id!r}"
            )
    # cycle detection over the parent chain
    for span in spans:
        seen = set()
        cursor: TraceSpan | None = span
        while cursor is not None and cursor.parent_id is not None:
            if cursor.span_id in seen:
                raise TraceError(f"cyclic parent references at span {cursor.span_id!r}")
            seen.add(cursor.span_id)
            cursor = by_id.get(cursor.parent_id)
    return by_id


class TraceCollector:
    """Per-evaluation span buffer with drop-at-source level filtering."""

    def __init__(self, trace_level: str = "none") -> None:
        if trace_level not in TRACE_LEVELS:
            raise TraceError(
                f"unknown trace level {trace_level!r} (expected one of {', '.join(TRACE_LEVELS)})"
            )
        self.trace_level = trace_level
        self._spans: list[TraceSpan] = []
        self._lock = threading.Lock()
        self._counter = 0

    @property
    def enabled(self) -> bool:
        return self.trace_level != "none"

    def collects(self, level: str) -> bool:
        if not self.enabled:
            return False
        return level_index(level) <= level_index(self.trace_level)

    def record(self, span: TraceSpan) -> bool:
        """Validate and buffer a span; returns False when dropped by level."""
        _validate_span(span)
        if not self.collects(span.level):
            return False
        with self._lock:
            for existing in self._spans:
                if existing.span_id == span.span_id:
                    raise TraceError(f"duplicate span id {span.span_id!r}")
                if span.parent_id == existing.span_id:
                    if span.start_ns < existing.start_ns or span.end_ns > existing.end_ns:
                        raise TraceError(
                            f"span {span.span_id!r} interval exceeds its parent {existing.span_id!r}"
                        )
            self._spans.append(span)
        return True

    def next_id(self) -> str:
        with self._lock:
            self._counter += 1
            return f"s{self._counter}"

    @contextmanager
    def span(
        self,
        name: str,
        level: str,
        parent_id: str | None = None,
        tags: dict[str, Any] | None = None,
    ) -> Iterator[str]:
        """Time a region; yields the span id for nesting. No-op when filtered."""
        if not self.collects(level):
            yield ""
            return
        span_id = self.next_id()
        start = time.monotonic_ns()
        # interval math uses the monotonic clock; wall time rides as a tag
        span_tags = {"wall_start_unix": time.time(), **(tags or {})}
        try:
            yield span_id
        finally:
            self.record(
                TraceSpan(
                    span_id=span_id,
                    parent_id=parent_id or None,
                    level=level,
                    name=name,
                    start_ns=start,
                    end_ns=time.monotonic_ns(),
                    tags=span_tags,
                )
            )

    def finalize(self) -> list[TraceSpan]:
        """Structural validation of the collected forest; returns the spans."""
        with self._lock:
            spans = list(self._spans)
        _check_structure(spans)
        return spans


# ---------------------------------------------------------------------------
# Aggregation


@dataclass
class LayerRow:
    name: str
    duration_ns: int
    fused_of: tuple[str, ...] = ()
    library_calls: list[dict[str, Any]] = field(default_factory=list)

    def atoms(self) -> tuple[str, ...]:
        return self.fused_of if self.fused_of else (self.name,)

    def to_json_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {"name": self.name, "duration_ns": self.duration_ns}
        if self.fused_of:
            obj["fused_of"] = list(self.fused_of)
        obj["library_calls"] = self.library_calls
        return obj


@dataclass
class LatencySummary:
    per_level_ns: dict[str, int]
    layers: list[LayerRow]
    critical_path: list[str]
    total_ns: int

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "per_level_ns": self.per_level_ns,
            "layers": [row.to_json_obj() for row in self.layers],
            "critical_path": self.critical_path,
            "total_ns": self.total_ns,
        }


def _merged_total(intervals: list[tuple[int, int]]) -> int:
    """Total covered duration of a set of intervals (overlaps counted once)."""
    total = 0
    current_start = current_end = None
    for start, end in sorted(intervals):
        if current_end is None or start > current_end:
            if current_end is not None:
                total += current_end - current_start
            current_start, current_end = start, end
        else:
            current_end = max(current_end, end)
    if current_end is not None:
        total += current_end - current_start
    return total


def summarize(spans: list[TraceSpan]) -> LatencySummary:
    """Aggregate one evaluation's spans into per-level and per-layer latency.

    Fused layers (one executed span covering several logical layers, tagged
    ``fused_of``) stay one row carrying the fusion tag.
    """
    by_id = _check_structure(list(spans))

    per_level: dict[str, int] = {}
    for level in LEVELS:
        intervals = [(s.start_ns, s.end_ns) for s in spans if s.level == level]
        if intervals:
            per_level[level] = _merged_total(intervals)

    children: dict[str | None, list[TraceSpan]] = {}
    for span in spans:
        children.setdefault(span.parent_id, []).append(span)

    layers: list[LayerRow] = []
    for span in spans:
        if span.level != "layer":
            continue
        fused = span.tags.get("fused_of", ())
        if isinstance(fused, str):
            fused = tuple(part.strip() for part in fused.split(",") if part.strip())
        library_calls = [
            {"name": child.name, "duration_ns": child.duration_ns()}
            for child in children.get(span.span_id, [])
            if child.level == "library"
        ]
        layers.append(
            LayerRow(
                name=span.name,
                duration_ns=span.duration_ns(),
                fused_of=tuple(fused),
                library_calls=library_calls,
            )
        )

    roots = [s for s in spans if s.parent_id is None]
    total_ns = _merged_total([(s.start_ns, s.end_ns) for s in roots])

    critical_path: list[str] = []
    if roots:
        cursor = max(roots, key=lambda s: (s.duration_ns(), s.span_id))
        while cursor is not None:
            critical_path.append(cursor.name)
            kids = children.get(cursor.span_id, [])
            cursor = max(kids, key=lambda s: (s.duration_ns(), s.span_id)) if kids else None

    return LatencySummary(per_level_ns=per_level, layers=layers, critical_path=critical_path, total_ns=total_ns)


def compare(summary_a: LatencySummary, summary_b: LatencySummary) -> list[dict[str, Any]]:
    """Per-layer delta table between two summaries.

    Rows match by layer name; a fused row matches the set of rows covering
    its logical layers on the other side (durations summed), so a fused
    kernel compares against the sum of its unfused counterparts. Deltas
    are ``a - b``; rows present on only one side are flagged unmatched.
    """
    atom_to_b: dict[str, int] = {}
    for j, row in enumerate(summary_b.layers):
        for atom in row.atoms():
            atom_to_b.setdefault(atom, j)

    rows: list[dict[str, Any]] = []
    used_b: set[int] = set()
    for row in summary_a.layers:
        matches = sorted({atom_to_b[a] for a in row.atoms() if a in atom_to_b})
        if not matches:
            rows.append(
                {"layer": row.name, "a_ns": row.duration_ns, "b_ns": None, "delta_ns": None,
                 "fused": bool(row.fused_of), "matched": False}
            )
            continue
        used_b.update(matches)
        b_rows = [summary_b.layers[j] for j in matches]
        b_total = sum(r.duration_ns for r in b_rows)
        atoms: list[str] = list(row.atoms())
        for b_row in b_rows:
            for atom in b_row.atoms():
                if atom not in atoms:
                    atoms.append(atom)
        fused = bool(row.fused_of) or any(r.fused_of for r in b_rows)
        rows.append(
            {
                "layer": "+".join(atoms) if fused else row.name,
                "a_ns": row.duration_ns,
                "b_ns": b_total,
                "delta_ns": row.duration_ns - b_total,
                "fused": fused,
                "matched": True,
            }
        )
    for j, row in enumerate(summary_b.layers):
        if j not in used_b:
            rows.append(
                {"layer": row.name, "a_ns": None, "b_ns": row.duration_ns, "delta_ns": None,
                 "fused": bool(row.fused_of), "matched": False}
            )
    return rows


def spans_to_json_obj(spans: list[TraceSpan]) -> list[dict[str, Any]]:
    return [span.to_json_obj() for span in spans]
