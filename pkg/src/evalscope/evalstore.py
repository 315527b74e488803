"""Durable store of completed evaluations: JSON-lines files + in-memory index.

One append-only file per UTC day; each line is one stored evaluation in
canonical JSON. The index is rebuilt by scanning the directory on
startup, so the files are the only source of truth. Writes are
append-then-flush from a single writer; readers see only fully written
records (a torn trailing line is ignored on scan).
"""

from __future__ import annotations

import threading
import time
from pathlib import Path
from typing import Any

from . import canonjson
from .semver import constraint_satisfies, parse_version_constraint


class StoreError(ValueError):
    pass


class DuplicateEvaluationError(StoreError):
    pass


def _matches(record: dict[str, Any], *, model_constraint=None, framework_constraint=None,
             model=None, framework=None, arch=None, device=None) -> bool:
    if model and record.get("model_name") != model:
        return False
    if framework and record.get("framework_name") != framework:
        return False
    if model_constraint and not constraint_satisfies(model_constraint, str(record.get("model_version", ""))):
        return False
    if framework_constraint:
        version = record.get("framework_version")
        if not version or not constraint_satisfies(framework_constraint, str(version)):
            return False
    hardware = record.get("hardware") or {}
    if arch and hardware.get("architecture") != arch:
        return False
    if device and device not in hardware.get("device_classes", []):
        return False
    return True


class EvalStore:
    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._index: dict[str, dict[str, Any]] = {}
        self._canonical: dict[str, str] = {}
        self._scan()

    def _scan(self) -> None:
        for path in sorted(self.directory.glob("evaluations-*.jsonl")):
            for line in path.read_text().splitlines():
                line = line.strip()
                if not line:
                    continue
                try:
                    record = canonjson.loads(line)
                except ValueError:
                    continue  # torn trailing write
                evaluation_id = record.get("evaluation_id")
                if evaluation_id:
                    self._index[evaluation_id] = record
                    self._canonical[evaluation_id] = canonjson.dumps(record)

    def _current_file(self) -> Path:
        day = time.strftime("%Y%m%d", time.gmtime())
        return self.directory / f"evaluations-{day}.jsonl"

    def put(self, record: dict[str, Any]) -> None:
        """Append a completed evaluation; idempotent for identical content."""
        evaluation_id = record.get("evaluation_id")
        if not evaluation_id:
            raise StoreError("record has no evaluation_id")
        encoded = canonjson.dumps(record)
        with self._lock:
            existing = self._canonical.get(evaluation_id)
            if existing is not None:
                if existing == encoded:
                    return
                raise DuplicateEvaluationError(
                    f"evaluation {evaluation_id} already stored with different content"
                )
            with open(self._current_file(), "a", encoding="utf-8") as sink:
                sink.write(encoded + "\n")
                sink.flush()
            self._index[evaluation_id] = canonjson.loads(encoded)
            self._canonical[evaluation_id] = encoded

    def get(self, evaluation_id: str) -> dict[str, Any] | None:
        with self._lock:
            record = self._index.get(evaluation_id)
        return canonjson.loads(canonjson.dumps(record)) if record is not None else None

    def all_records(self) -> list[dict[str, Any]]:
        with self._lock:
            ids = sorted(self._index)
            return [canonjson.loads(self._canonical[i]) for i in ids]

    def query(
        self,
        model_constraint: str | None = None,
        framework_constraint: str | None = None,
        model: str | None = None,
        framework: str | None = None,
        arch: str | None = None,
        device: str | None = None,
    ) -> list[dict[str, Any]]:
        """Records whose concrete versions satisfy the given constraints."""
        if model_constraint:
            parse_version_constraint(model_constraint)
        if framework_constraint:
            parse_version_constraint(framework_constraint)
        return [
            record
            for record in self.all_records()
            if _matches(
                record,
                model_constraint=model_constraint,
                framework_constraint=framework_constraint,
                model=model,
                framework=framework,
                arch=arch,
                device=device,
            )
        ]


def variant_label(record: dict[str, Any]) -> str:
    """Human-readable pitfall-variant tag derived from pipeline overrides."""
    overrides = (record.get("request") or {}).get("pipeline_overrides") or {}
    if not overrides:
        return "baseline"
    parts = []
    for kind in sorted(overrides):
        for key in sorted(overrides[kind]):
            parts.append(f"{kind}.{key}={overrides[kind][key]}")
    return ",".join(parts)


def summary_table(records: list[dict[str, Any]]) -> dict[str, list[dict[str, Any]]]:
    """Accuracy and latency tables, one row per model x variant.

    Fractions are rendered with four decimal places.
    """
    accuracy: list[dict[str, Any]] = []
    latency: list[dict[str, Any]] = []
    for record in records:
        if record.get("state") != "done":
            continue
        label = variant_label(record)
        model = record.get("model_name", "?")
        metrics = record.get("metrics")
        if metrics:
            accuracy.append(
                {
                    "model": model,
                    "variant": label,
                    "top1": canonjson.format_fraction(metrics["top1"]),
                    "top5": canonjson.format_fraction(metrics["top5"]),
                }
            )
        timestamps = record.get("timestamps") or {}
        started = timestamps.get("started_unix")
        finished = timestamps.get("finished_unix")
        if started is not None and finished is not None:
            latency.append(
                {
                    "model": model,
                    "variant": label,
                    "latency_ms": canonjson.format_fraction((finished - started) * 1000.0),
                }
            )
    return {"accuracy": accuracy, "latency": latency}
