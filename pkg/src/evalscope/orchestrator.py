"""Remote API handler: accept evaluation requests, route, dispatch, persist.

Requests name a model and framework by version constraint plus a hardware
filter; the orchestrator resolves satisfying agents through the registry,
dispatches to one (most recent heartbeat) or all of them, scores metrics
when the dataset carries ground truth, and persists the outcome.

A resubmitted request whose constraints are satisfied by a stored
evaluation's concrete versions is answered from the store without any
agent call; pipeline overrides and inputs are part of that cache
identity. A journal of submitted/finished ids turns evaluations that were
in flight during a crash into explicit ``failed (restart)`` results
instead of silent losses.
"""

from __future__ import annotations

import base64
import hashlib
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from . import canonjson
from .evalstore import EvalStore
from .httpjson import HttpError, Route, post_json, route
from .manifest import ModelManifest, parse_manifest, resolve_asset_paths, serialize_manifest
from .postprocess import Prediction, score_accuracy
from .registry import QueryFilter, Registry, RegistryClient
from .semver import ConstraintError, constraint_satisfies, parse_version_constraint
from .tracing import TRACE_LEVELS


class OrchestratorError(ValueError):
    pass


class UnknownEvaluationError(OrchestratorError):
    pass


DISPATCH_MODES = ("one", "all")


@dataclass(frozen=True)
class EvaluationRequest:
    model_name: str
    model_constraint: str = "x"
    framework_name: str | None = None
    framework_constraint: str | None = None
    arch: str | None = None
    device: str | None = None
    interconnect: str | None = None
    dataset: str | None = None
    inputs: tuple[dict[str, str], ...] = ()
    dispatch_mode: str = "one"
    trace_level: str = "none"
    pipeline_overrides: dict[str, dict[str, Any]] = field(default_factory=dict)

    def validate(self) -> None:
        if not self.model_name:
            raise OrchestratorError("model_name must be non-empty")
        try:
            parse_version_constraint(self.model_constraint)
            if self.framework_constraint:
                parse_version_constraint(self.framework_constraint)
        except ConstraintError as exc:
            raise OrchestratorError(f"invalid constraint: {exc}") from exc
        if self.dispatch_mode not in DISPATCH_MODES:
            raise OrchestratorError(f"dispatch_mode must be one of {DISPATCH_MODES}")
        if self.trace_level not in TRACE_LEVELS:
            raise OrchestratorError(f"trace_level must be one of {TRACE_LEVELS}")
        if not self.dataset and not self.inputs:
            raise OrchestratorError("request needs a dataset or at least one inline input")

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "model_name": self.model_name,
            "model_constraint": self.model_constraint,
            "framework_name": self.framework_name,
            "framework_constraint": self.framework_constraint,
            "arch": self.arch,
            "device": self.device,
            "interconnect": self.interconnect,
            "dataset": self.dataset,
            "inputs": list(self.inputs),
            "dispatch_mode": self.dispatch_mode,
            "trace_level": self.trace_level,
            "pipeline_overrides": self.pipeline_overrides,
        }

    @classmethod
    def from_json_obj(cls, obj: dict[str, Any]) -> "EvaluationRequest":
        request = cls(
            model_name=str(obj.get("model_name", "")),
            model_constraint=str(obj.get("model_constraint") or "x"),
            framework_name=obj.get("framework_name"),
            framework_constraint=obj.get("framework_constraint"),
            arch=obj.get("arch"),
            device=obj.get("device"),
            interconnect=obj.get("interconnect"),
            dataset=obj.get("dataset"),
            inputs=tuple(obj.get("inputs") or ()),
            dispatch_mode=str(obj.get("dispatch_mode", "one")),
            trace_level=str(obj.get("trace_level", "none")),
            pipeline_overrides=dict(obj.get("pipeline_overrides") or {}),
        )
        request.validate()
        return request

    def cache_key(self) -> str:
        payload = {
            "model_name": self.model_name,
            "framework_name": self.framework_name,
            "dataset": self.dataset,
            "inputs": list(self.inputs),
            "dispatch_mode": self.dispatch_mode,
            "trace_level": self.trace_level,
            "pipeline_overrides": self.pipeline_overrides,
        }
        return hashlib.sha256(canonjson.dump_bytes(payload)).hexdigest()


@dataclass
class _LiveEvaluation:
    evaluation_id: str
    request: EvaluationRequest
    state: str  # pending | running | done | failed
    reason: str | None = None
    results: list[dict[str, Any]] = field(default_factory=list)
    submitted_unix: float = 0.0
    started_unix: float | None = None
    finished_unix: float | None = None
    cached_record: dict[str, Any] | None = None

    def snapshot(self) -> dict[str, Any]:
        return {
            "evaluation_id": self.evaluation_id,
            "state": self.state,
            "reason": self.reason,
            "request": self.request.to_json_obj(),
            "results": list(self.results),
            "timestamps": {
                "submitted_unix": self.submitted_unix,
                "started_unix": self.started_unix,
                "finished_unix": self.finished_unix,
            },
        }


AgentCaller = Callable[[str, dict[str, Any], float], dict[str, Any]]


def _http_agent_caller(address: str, payload: dict[str, Any], timeout: float) -> dict[str, Any]:
    status, body = post_json(f"http://{address}/predict", payload, timeout=timeout)
    if status != 200:
        message = (body or {}).get("error", f"HTTP {status}")
        raise OrchestratorError(f"agent {address} failed: {message}")
    return body


class Orchestrator:
    def __init__(
        self,
        registry: Registry | RegistryClient,
        store: EvalStore,
        *,
        manifest_paths: list[str | Path] | None = None,
        datasets: dict[str, str | Path] | None = None,
        dispatch_timeout_s: float = 60.0,
        agent_caller: AgentCaller = _http_agent_caller,
        journal_path: str | Path | None = None,
    ) -> None:
        self.registry = registry
        self.store = store
        self.datasets = {name: Path(path) for name, path in (datasets or {}).items()}
        self.dispatch_timeout_s = dispatch_timeout_s
        self.agent_caller = agent_caller
        self._live: dict[str, _LiveEvaluation] = {}
        self._cache_index: dict[str, str] = {}  # cache key -> evaluation_id
        self._restart_failures: dict[str, dict[str, Any]] = {}
        self._lock = threading.Lock()
        self._executor = ThreadPoolExecutor(max_workers=8, thread_name_prefix="evaluation")
        self._dispatch_executor = ThreadPoolExecutor(max_workers=8, thread_name_prefix="dispatch")

        self.catalog: dict[str, list[tuple[ModelManifest, str]]] = {}
        for path in manifest_paths or []:
            path = Path(path)
            manifest = resolve_asset_paths(parse_manifest(path.read_text()), path.parent)
            text = serialize_manifest(manifest)
            self.catalog.setdefault(manifest.name, []).append((manifest, text))

        self.journal_path = Path(journal_path) if journal_path else None
        if self.journal_path is not None:
            self._recover_journal()
        self._rebuild_cache_index()

    # -- journal / recovery --------------------------------------------------

    def _journal(self, event: dict[str, Any]) -> None:
        if self.journal_path is None:
            return
        with self._lock:
            with open(self.journal_path, "a", encoding="utf-8") as sink:
                sink.write(canonjson.dumps(event) + "\n")
                sink.flush()

    def _recover_journal(self) -> None:
        if not self.journal_path.exists():
            return
        submitted: dict[str, dict[str, Any]] = {}
        finished: set[str] = set()
        for line in self.journal_path.read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            try:
                event = canonjson.loads(line)
            except ValueError:
                continue
            if event.get("event") == "submitted":
                submitted[event["evaluation_id"]] = event.get("request", {})
            elif event.get("event") == "finished":
                finished.add(event["evaluation_id"])
        for evaluation_id, request in submitted.items():
            if evaluation_id in finished or self.store.get(evaluation_id) is not None:
                continue
            self._restart_failures[evaluation_id] = {
                "evaluation_id": evaluation_id,
                "state": "failed",
                "reason": "restart",
                "request": request,
                "results": [],
            }

    def _rebuild_cache_index(self) -> None:
        for record in self.store.all_records():
            if record.get("state") == "done" and record.get("cache_key"):
                self._cache_index[record["cache_key"]] = record["evaluation_id"]

    # -- request resolution ----------------------------------------------------

    def resolve_manifest(self, request: EvaluationRequest) -> tuple[ModelManifest, str]:
        candidates = self.catalog.get(request.model_name, [])
        satisfying = [
            (manifest, text)
            for manifest, text in candidates
            if constraint_satisfies(request.model_constraint, manifest.version)
        ]
        if not satisfying:
            raise OrchestratorError(
                f"no manifest for model {request.model_name!r} "
                f"satisfying {request.model_constraint!r}"
            )
        return max(satisfying, key=lambda pair: pair[0].version.key())

    def _load_inputs(self, request: EvaluationRequest) -> tuple[list[dict[str, str]], list[int] | None]:
        if request.dataset:
            directory = self.datasets.get(request.dataset)
            if directory is None:
                raise OrchestratorError(f"unknown dataset {request.dataset!r}")
            from .datasets import read_ground_truth

            entries = read_ground_truth(directory)
            inputs = []
            truths = []
            for filename, label in entries:
                data = (directory / filename).read_bytes()
                inputs.append(
                    {"name": filename, "data_b64": base64.b64encode(data).decode("ascii")}
                )
                truths.append(label)
            return inputs, truths
        return list(request.inputs), None

    # -- cache -------------------------------------------------------------

    def check_cache(self, request: EvaluationRequest) -> dict[str, Any] | None:
        """A stored result usable for this request, or None.

        The stored evaluation's concrete model/framework versions must
        satisfy the request's constraints; overrides, inputs, trace level
        and dispatch mode are part of the cache identity.
        """
        evaluation_id = self._cache_index.get(request.cache_key())
        if evaluation_id is None:
            return None
        record = self.store.get(evaluation_id)
        if record is None or record.get("state") != "done":
            return None
        if not constraint_satisfies(request.model_constraint, str(record["model_version"])):
            return None
        if request.framework_constraint:
            versions = [r.get("framework_version") for r in record.get("results", [])]
            if not versions or not all(
                v and constraint_satisfies(request.framework_constraint, str(v)) for v in versions
            ):
                return None
        if request.framework_name:
            names = {r.get("framework_name") for r in record.get("results", [])}
            if names - {request.framework_name}:
                return None
        for result in record.get("results", []):
            hardware = result.get("hardware") or {}
            if request.arch and hardware.get("architecture") != request.arch:
                return None
            if request.device and request.device not in hardware.get("device_classes", []):
                return None
            if request.interconnect and hardware.get("interconnect") != request.interconnect:
                return None
        return record

    # -- submission --------------------------------------------------------

    def submit(self, request: EvaluationRequest) -> str:
        request.validate()
        evaluation_id = f"eval-{uuid.uuid4().hex[:12]}"
        live = _LiveEvaluation(
            evaluation_id=evaluation_id,
            request=request,
            state="pending",
            submitted_unix=time.time(),
        )
        with self._lock:
            self._live[evaluation_id] = live
        self._journal(
            {"event": "submitted", "evaluation_id": evaluation_id, "request": request.to_json_obj()}
        )
        self._executor.submit(self._run, evaluation_id)
        return evaluation_id

    def _finish(self, live: _LiveEvaluation, state: str, reason: str | None = None) -> None:
        live.state = state
        live.reason = reason
        live.finished_unix = time.time()
        self._journal(
            {"event": "finished", "evaluation_id": live.evaluation_id, "state": state}
        )

    def _run(self, evaluation_id: str) -> None:
        live = self._live[evaluation_id]
        try:
            self._run_inner(live)
        except OrchestratorError as exc:
            self._finish(live, "failed", str(exc))
        except Exception as exc:  # pragma: no cover - defensive
            self._finish(live, "failed", f"{type(exc).__name__}: {exc}")

    def _run_inner(self, live: _LiveEvaluation) -> None:
        request = live.request
        cached = self.check_cache(request)
        if cached is not None:
            cached_copy = dict(cached)
            cached_copy["cached"] = True
            live.started_unix = time.time()
            live.results = cached_copy.get("results", [])
            live.cached_record = cached_copy
            self._finish(live, "done", "cached")
            return

        manifest, manifest_text = self.resolve_manifest(request)
        if request.framework_name and manifest.framework.name != request.framework_name:
            raise OrchestratorError(
                f"manifest {manifest.name} uses framework {manifest.framework.name!r}, "
                f"request asks for {request.framework_name!r}"
            )

        agents = self._query_agents(request, manifest)
        if not agents:
            raise OrchestratorError("no-matching-agent")

        inputs, ground_truth = self._load_inputs(request)
        payload = {
            "manifest": manifest_text,
            "inputs": inputs,
            "trace_level": request.trace_level,
            "overrides": request.pipeline_overrides,
            "device": request.device or "cpu",
            "evaluation_id": live.evaluation_id,
        }

        targets = agents if request.dispatch_mode == "all" else agents[:1]
        live.state = "running"
        live.started_unix = time.time()

        def dispatch_one(agent) -> tuple[bool, str | None]:
            entry: dict[str, Any] = {
                "agent_id": agent.agent_id,
                "agent_address": agent.address,
                "hardware": agent.hardware.to_json_obj(),
            }
            try:
                response = self.agent_caller(agent.address, payload, self.dispatch_timeout_s)
            except Exception as exc:
                entry["state"] = "failed"
                entry["error"] = str(exc)
                with self._lock:
                    live.results.append(entry)
                return False, str(exc)
            entry.update(response)
            entry["agent_id"] = agent.agent_id  # routing identity is authoritative
            entry["state"] = "done"
            if ground_truth is not None:
                entry["metrics"] = self._score(response, ground_truth)
            with self._lock:
                live.results.append(entry)
            return True, None

        dispatched: set[str] = set()
        futures = []
        for agent in targets:
            if agent.agent_id in dispatched:
                continue  # at-most-once per (evaluation, agent)
            dispatched.add(agent.agent_id)
            futures.append(self._dispatch_executor.submit(dispatch_one, agent))

        any_ok = False
        first_error: str | None = None
        for future in futures:
            ok, error = future.result(timeout=self.dispatch_timeout_s + 10)
            any_ok = any_ok or ok
            if error and first_error is None:
                first_error = error

        if not any_ok:
            raise OrchestratorError(first_error or "all agents failed")
        self._finish(live, "done")
        self._persist(live, manifest)

    def _query_agents(self, request: EvaluationRequest, manifest: ModelManifest):
        query = QueryFilter(
            model=request.model_name,
            model_constraint=request.model_constraint,
            framework=request.framework_name or manifest.framework.name,
            framework_constraint=request.framework_constraint
            or manifest.framework.version_constraint.text,
            arch=request.arch,
            device=request.device,
            interconnect=request.interconnect,
        )
        return self.registry.query(query)

    def _score(self, response: dict[str, Any], ground_truth: list[int]) -> dict[str, Any]:
        per_sample = []
        for output in response.get("outputs", []):
            per_sample.append(
                [
                    Prediction(
                        rank=p["rank"],
                        label_index=p["label_index"],
                        label=p["label"],
                        probability=p["probability"],
                    )
                    for p in output.get("predictions", [])
                ]
            )
        report = score_accuracy(per_sample, ground_truth)
        return report.to_json_obj()

    def _persist(self, live: _LiveEvaluation, manifest: ModelManifest) -> None:
        done_results = [r for r in live.results if r.get("state") == "done"]
        metrics = done_results[0].get("metrics") if done_results else None
        record = {
            "evaluation_id": live.evaluation_id,
            "state": "done",
            "cached": False,
            "cache_key": live.request.cache_key(),
            "request": live.request.to_json_obj(),
            "model_name": manifest.name,
            "model_version": str(manifest.version),
            "framework_name": manifest.framework.name,
            "framework_version": done_results[0].get("framework_version") if done_results else None,
            "hardware": done_results[0].get("hardware") if done_results else None,
            "metrics": metrics,
            "results": live.results,
            "timestamps": {
                "submitted_unix": live.submitted_unix,
                "started_unix": live.started_unix,
                "finished_unix": live.finished_unix,
            },
        }
        self.store.put(record)
        with self._lock:
            self._cache_index[live.request.cache_key()] = live.evaluation_id

    # -- retrieval -----------------------------------------------------------

    def get_result(self, evaluation_id: str) -> dict[str, Any]:
        with self._lock:
            live = self._live.get(evaluation_id)
        if live is not None:
            if live.cached_record is not None:
                snapshot = dict(live.cached_record)
                snapshot["evaluation_id"] = evaluation_id
                snapshot["state"] = "done"
                return snapshot
            stored = self.store.get(evaluation_id)
            if stored is not None and live.state == "done":
                return stored
            with self._lock:
                return live.snapshot()
        stored = self.store.get(evaluation_id)
        if stored is not None:
            return stored
        restart = self._restart_failures.get(evaluation_id)
        if restart is not None:
            return dict(restart)
        raise UnknownEvaluationError(f"unknown evaluation {evaluation_id!r}")

    def list_results(self, model: str | None = None) -> list[dict[str, Any]]:
        records = self.store.query(model=model)
        with self._lock:
            live = [
                entry.snapshot()
                for entry in self._live.values()
                if entry.state in ("pending", "running")
                and (model is None or entry.request.model_name == model)
            ]
        return records + live

    def shutdown(self) -> None:
        self._executor.shutdown(wait=False)
        self._dispatch_executor.shutdown(wait=False)


# ---------------------------------------------------------------------------
# HTTP wiring


def build_orchestrator_routes(orchestrator: Orchestrator) -> list[Route]:
    def submit(request) -> tuple[int, Any]:
        try:
            parsed = EvaluationRequest.from_json_obj(request.body or {})
        except OrchestratorError as exc:
            raise HttpError(400, str(exc))
        evaluation_id = orchestrator.submit(parsed)
        return 202, {"evaluation_id": evaluation_id}

    def get_result(request) -> tuple[int, Any]:
        try:
            return 200, orchestrator.get_result(request.params["evaluation_id"])
        except UnknownEvaluationError as exc:
            raise HttpError(404, str(exc))

    def list_results(request) -> tuple[int, Any]:
        return 200, orchestrator.list_results(request.query.get("model"))

    def summary(request) -> tuple[int, Any]:
        from .evalstore import summary_table

        records = orchestrator.store.query(
            model=request.query.get("model"),
            model_constraint=request.query.get("model_constraint"),
            framework_constraint=request.query.get("framework_constraint"),
        )
        return 200, summary_table(records)

    def models(request) -> tuple[int, Any]:
        return 200, [
            {"name": manifest.name, "version": str(manifest.version), "task": manifest.task,
             "framework_name": manifest.framework.name,
             "framework_constraint": manifest.framework.version_constraint.text}
            for entries in orchestrator.catalog.values()
            for manifest, _ in entries
        ]

    def health(request) -> tuple[int, Any]:
        return 200, {"status": "ok"}

    return [
        route("POST", r"/evaluations", submit),
        route("GET", r"/evaluations/(?P<evaluation_id>[^/]+)", get_result),
        route("GET", r"/evaluations", list_results),
        route("GET", r"/summary", summary),
        route("GET", r"/models", models),
        route("GET", r"/healthz", health),
    ]
