from __future__ import annotations

import numpy as np
import pytest

from evalscope import canonjson
from evalscope.evalstore import (
    DuplicateEvaluationError,
    EvalStore,
    StoreError,
    summary_table,
    variant_label,
)


def _record(evaluation_id: str, **kw) -> dict:
    return {
        "evaluation_id": evaluation_id,
        "state": kw.get("state", "done"),
        "cached": False,
        "cache_key": kw.get("cache_key", f"key-{evaluation_id}"),
        "request": kw.get("request", {"pipeline_overrides": kw.get("overrides", {})}),
        "model_name": kw.get("model", "Inception-v3"),
        "model_version": kw.get("model_version", "1.0.0"),
        "framework_name": kw.get("framework", "TensorFlow"),
        "framework_version": kw.get("framework_version", "1.13.0"),
        "hardware": {"architecture": kw.get("arch", "amd64"), "device_classes": ["cpu"]},
        "metrics": kw.get("metrics"),
        "results": [],
        "timestamps": kw.get(
            "timestamps", {"submitted_unix": 1.0, "started_unix": 2.0, "finished_unix": 2.5}
        ),
    }


def test_put_get_round_trip_bytes(tmp_path) -> None:
    store = EvalStore(tmp_path)
    record = _record("e1", metrics={"n_samples": 2, "top1": 1.0, "top5": 1.0})
    store.put(record)
    fetched = store.get("e1")
    assert canonjson.dumps(fetched) == canonjson.dumps(record)


def test_put_idempotent_same_content(tmp_path) -> None:
    store = EvalStore(tmp_path)
    record = _record("e1")
    store.put(record)
    store.put(record)  # no error
    assert len(store.all_records()) == 1


def test_put_duplicate_different_content_rejected(tmp_path) -> None:
    store = EvalStore(tmp_path)
    store.put(_record("e1"))
    with pytest.raises(DuplicateEvaluationError):
        store.put(_record("e1", model_version="2.0.0"))


def test_put_requires_id(tmp_path) -> None:
    with pytest.raises(StoreError):
        EvalStore(tmp_path).put({"state": "done"})


def test_rebuild_from_disk(tmp_path) -> None:
    store = EvalStore(tmp_path)
    store.put(_record("e1"))
    store.put(_record("e2", framework_version="2.0.0"))
    reopened = EvalStore(tmp_path)
    assert {r["evaluation_id"] for r in reopened.all_records()} == {"e1", "e2"}
    assert canonjson.dumps(reopened.get("e1")) == canonjson.dumps(store.get("e1"))


def test_torn_trailing_line_ignored(tmp_path) -> None:
    store = EvalStore(tmp_path)
    store.put(_record("e1"))
    files = list(tmp_path.glob("evaluations-*.jsonl"))
    with open(files[0], "a") as sink:
        sink.write('{"evaluation_id": "torn", "state"')  # no newline, cut mid-key
    reopened = EvalStore(tmp_path)
    assert [r["evaluation_id"] for r in reopened.all_records()] == ["e1"]


def test_query_constraint_on_concrete_versions(tmp_path) -> None:
    store = EvalStore(tmp_path)
    store.put(_record("e1", framework_version="1.13.0"))
    hits = store.query(framework_constraint="^1.x")
    assert [r["evaluation_id"] for r in hits] == ["e1"]
    assert store.query(framework_constraint="^2.x") == []


def test_query_matches_bruteforce_oracle(tmp_path) -> None:
    rng = np.random.default_rng(3)
    store = EvalStore(tmp_path)
    records = []
    for i in range(30):
        record = _record(
            f"e{i}",
            model_version=f"{rng.integers(0, 3)}.{rng.integers(0, 15)}.{rng.integers(0, 3)}",
            framework_version=f"{rng.integers(0, 3)}.{rng.integers(0, 15)}.{rng.integers(0, 3)}",
            arch=str(rng.choice(["amd64", "ppc64le"])),
        )
        records.append(record)
        store.put(record)

    from evalscope.semver import constraint_satisfies

    cases = [
        {"model_constraint": "^1.x"},
        {"framework_constraint": ">=1.10.x and <=1.13.0"},
        {"model_constraint": "~1.13", "arch": "amd64"},
        {"framework_constraint": "1.12.x", "model_constraint": "^0.x"},
    ]
    for kw in cases:
        expected = set()
        for record in records:
            ok = True
            if "model_constraint" in kw:
                ok &= constraint_satisfies(kw["model_constraint"], record["model_version"])
            if "framework_constraint" in kw:
                ok &= constraint_satisfies(kw["framework_constraint"], record["framework_version"])
            if "arch" in kw:
                ok &= record["hardware"]["architecture"] == kw["arch"]
            if ok:
                expected.add(record["evaluation_id"])
        actual = {r["evaluation_id"] for r in store.query(**kw)}
        assert actual == expected, kw


def test_summary_table_rows_and_formatting(tmp_path) -> None:
    records = [
        _record("e1", metrics={"n_samples": 20, "top1": 1.0, "top5": 1.0}),
        _record(
            "e2",
            metrics={"n_samples": 20, "top1": 0.8, "top5": 0.95},
            overrides={"decode": {"color_layout": "BGR"}},
            request={"pipeline_overrides": {"decode": {"color_layout": "BGR"}}},
        ),
    ]
    table = summary_table(records)
    assert len(table["accuracy"]) == 2
    baseline = next(r for r in table["accuracy"] if r["variant"] == "baseline")
    pitfall = next(r for r in table["accuracy"] if r["variant"] != "baseline")
    assert baseline["top1"] == "1.0000"
    assert pitfall["top1"] == "0.8000"
    assert pitfall["variant"] == "decode.color_layout=BGR"
    assert table["latency"][0]["latency_ms"] == "500.0000"


def test_summary_table_single_and_empty() -> None:
    record = _record("solo", metrics={"n_samples": 1, "top1": 1.0, "top5": 1.0})
    table = summary_table([record])
    assert len(table["accuracy"]) == 1
    assert summary_table([]) == {"accuracy": [], "latency": []}


def test_variant_label_sorted_deterministic() -> None:
    record = {"request": {"pipeline_overrides": {"decode": {"color_layout": "BGR"}, "crop": {"percentage": 100}}}}
    assert variant_label(record) == "crop.percentage=100,decode.color_layout=BGR"
