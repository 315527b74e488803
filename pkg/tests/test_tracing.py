from __future__ import annotations

import numpy as np
import pytest

from evalscope.tracing import (
    LEVELS,
    TraceCollector,
    TraceError,
    TraceSpan,
    compare,
    span_from_json_obj,
    summarize,
)

MS = 1_000_000  # ns


def span(
    span_id: str,
    name: str,
    level: str,
    start: int,
    end: int,
    parent: str | None = None,
    tags: dict | None = None,
) -> TraceSpan:
    return TraceSpan(span_id, name, level, start, end, parent_id=parent, tags=tags or {})


# ---------------------------------------------------------------------------
# record / level filtering


def test_drop_finer_than_requested_level() -> None:
    collector = TraceCollector("layer")
    assert collector.record(span("a", "model", "model", 0, 10))
    assert collector.record(span("b", "conv", "layer", 0, 5, parent="a"))
    assert not collector.record(span("c", "sgemm", "library", 1, 2, parent="b"))
    levels = {s.level for s in collector.finalize()}
    assert "library" not in levels


def test_trace_level_none_collects_nothing() -> None:
    collector = TraceCollector("none")
    assert not collector.record(span("a", "app", "application", 0, 10))
    assert collector.finalize() == []


def test_nested_hierarchy_preserved() -> None:
    collector = TraceCollector("layer")
    collector.record(span("m", "model", "model", 0, 100))
    collector.record(span("f", "framework", "framework", 10, 90, parent="m"))
    collector.record(span("l", "conv1", "layer", 20, 80, parent="f"))
    spans = collector.finalize()
    by_id = {s.span_id: s for s in spans}
    assert by_id["l"].parent_id == "f"
    assert by_id["f"].parent_id == "m"


def test_child_exceeding_parent_rejected() -> None:
    collector = TraceCollector("layer")
    collector.record(span("m", "model", "model", 10, 20))
    with pytest.raises(TraceError):
        collector.record(span("x", "late", "layer", 15, 25, parent="m"))


def test_child_exceeding_parent_rejected_at_finalize_when_child_arrives_first() -> None:
    collector = TraceCollector("layer")
    collector.record(span("x", "late", "layer", 15, 25, parent="m"))
    collector.record(span("m", "model", "model", 10, 20))
    with pytest.raises(TraceError):
        collector.finalize()


def test_end_before_start_rejected() -> None:
    with pytest.raises(TraceError):
        TraceCollector("layer").record(span("a", "bad", "layer", 10, 5))


def test_child_coarser_than_parent_rejected() -> None:
    collector = TraceCollector("framework")
    collector.record(span("f", "framework", "framework", 0, 10))
    collector.record(span("m", "model", "model", 1, 2, parent="f"))
    with pytest.raises(TraceError):
        collector.finalize()


def test_cycles_rejected() -> None:
    spans = [
        span("a", "x", "layer", 0, 10, parent="b"),
        span("b", "y", "layer", 0, 10, parent="a"),
    ]
    with pytest.raises(TraceError):
        summarize(spans)


def test_unknown_level_rejected() -> None:
    with pytest.raises(TraceError):
        TraceCollector("verbose")


# ---------------------------------------------------------------------------
# summarize


def fused_vs_unfused():
    """Synthetic fixture: fused conv2+relu (1.95 ms) vs separate (1.8 + 0.83 ms)."""
    fused = [
        span("m", "model", "model", 0, 10 * MS),
        span("f", "framework", "framework", 0, 8 * MS, parent="m"),
        span(
            "c", "conv2", "layer", 1 * MS, 1 * MS + 1_950_000, parent="f",
            tags={"fused_of": ["conv2", "relu"]},
        ),
    ]
    unfused = [
        span("m", "model", "model", 0, 12 * MS),
        span("f", "framework", "framework", 0, 9 * MS, parent="m"),
        span("c", "conv2", "layer", 1 * MS, 1 * MS + 1_800_000, parent="f"),
        span("r", "relu", "layer", 3 * MS, 3 * MS + 830_000, parent="f"),
    ]
    return summarize(fused), summarize(unfused)


def test_fused_fixture_durations_exact() -> None:
    summary_fused, summary_unfused = fused_vs_unfused()
    assert summary_fused.layers[0].duration_ns == 1_950_000
    assert summary_fused.layers[0].fused_of == ("conv2", "relu")
    assert sum(r.duration_ns for r in summary_unfused.layers) == 2_630_000


def test_fused_comparison_row() -> None:
    summary_fused, summary_unfused = fused_vs_unfused()
    rows = compare(summary_fused, summary_unfused)
    row = next(r for r in rows if r["matched"])
    assert row["layer"] == "conv2+relu"
    assert row["a_ns"] == 1_950_000
    assert row["b_ns"] == 2_630_000
    assert row["delta_ns"] == -680_000  # 1.95 ms vs 2.63 ms
    assert row["fused"] is True


def test_single_span_summary_total() -> None:
    summary = summarize([span("a", "model", "model", 5, 42)])
    assert summary.total_ns == 37
    assert summary.per_level_ns == {"model": 37}


def test_identical_summaries_zero_deltas() -> None:
    _, summary = fused_vs_unfused()
    rows = compare(summary, summary)
    assert all(r["delta_ns"] == 0 for r in rows if r["matched"])
    assert all(r["matched"] for r in rows)


def test_disjoint_layer_sets_all_unmatched() -> None:
    a = summarize([span("x", "alpha", "layer", 0, 10)])
    b = summarize([span("y", "beta", "layer", 0, 10)])
    rows = compare(a, b)
    assert all(not r["matched"] for r in rows)
    assert {r["layer"] for r in rows} == {"alpha", "beta"}


def test_library_calls_attributed_to_layers() -> None:
    spans = [
        span("f", "framework", "framework", 0, 100),
        span("l", "conv1", "layer", 10, 60, parent="f"),
        span("k1", "sgemm", "library", 15, 30, parent="l"),
        span("k2", "winograd", "library", 30, 50, parent="l"),
    ]
    summary = summarize(spans)
    row = summary.layers[0]
    assert [c["name"] for c in row.library_calls] == ["sgemm", "winograd"]
    assert sum(c["duration_ns"] for c in row.library_calls) == 35


def test_critical_path_follows_longest_children() -> None:
    spans = [
        span("m", "model", "model", 0, 100),
        span("f", "framework", "framework", 0, 90, parent="m"),
        span("l1", "conv1", "layer", 0, 10, parent="f"),
        span("l2", "conv2", "layer", 10, 80, parent="f"),
    ]
    summary = summarize(spans)
    assert summary.critical_path == ["model", "framework", "conv2"]


def _random_well_nested(rng: np.random.Generator) -> list[TraceSpan]:
    """Root plus recursively partitioned children at strictly finer levels.

    Sibling intervals never overlap and children only descend levels, so
    spans at any one level are pairwise disjoint.
    """
    spans: list[TraceSpan] = []
    counter = [0]

    def add(level_index: int, start: int, end: int, parent: str | None) -> None:
        counter[0] += 1
        sid = f"s{counter[0]}"
        spans.append(span(sid, f"n{counter[0]}", LEVELS[level_index], start, end, parent))
        if level_index + 1 >= len(LEVELS) or end - start < 4 or rng.random() < 0.3:
            return
        pieces = int(rng.integers(1, 4))
        points = sorted(rng.integers(start, end + 1, size=2 * pieces).tolist())
        deeper = list(range(level_index + 1, len(LEVELS)))
        for i in range(pieces):
            lo, hi = points[2 * i], points[2 * i + 1]
            if hi > lo:
                child_level = int(rng.choice(deeper[:2]))
                add(child_level, lo, hi, sid)

    add(0, 0, int(rng.integers(50, 2000)), None)
    return spans


def brute_force_level_totals(spans: list[TraceSpan]) -> dict[str, int]:
    """Oracle: direct per-interval sum (intervals at one level are disjoint)."""
    totals: dict[str, int] = {}
    for s in spans:
        totals[s.level] = totals.get(s.level, 0) + (s.end_ns - s.start_ns)
    return totals


def test_per_level_totals_match_oracle_on_random_trees() -> None:
    rng = np.random.default_rng(7)
    for _ in range(300):
        spans = _random_well_nested(rng)
        assert summarize(spans).per_level_ns == brute_force_level_totals(spans)


def test_summarize_invariant_under_arrival_order() -> None:
    rng = np.random.default_rng(8)
    spans = _random_well_nested(rng)
    base = summarize(spans).to_json_obj()
    for _ in range(5):
        shuffled = list(spans)
        rng.shuffle(shuffled)
        assert summarize(shuffled).per_level_ns == base["per_level_ns"]


def test_span_json_round_trip() -> None:
    original = span("a", "conv", "layer", 5, 10, parent="b", tags={"fused_of": ["x", "y"]})
    assert span_from_json_obj(original.to_json_obj()) == original
