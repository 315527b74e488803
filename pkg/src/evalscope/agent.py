"""Predictor agent: serves /predict over HTTP and publishes its capabilities.

On startup the agent parses its configured manifests, publishes one
record (hardware + concrete framework version + supported models) to the
registry, and heartbeats until stopped; stopping deregisters cleanly.
The same evaluation path also runs in-process for the local CLI.
"""

from __future__ import annotations

import base64
import hashlib
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .httpjson import HttpError, JsonHttpServer, Route, route
from .manifest import (
    ModelManifest,
    parse_manifest,
    resolve_asset_paths,
    serialize_manifest,
)
from .pipeline import PipelineError, run_pipeline
from .postprocess import load_labels, top_k
from .predictor import (
    AssetCache,
    BackendRegistry,
    BitfileBackend,
    PredictorError,
    PredictorSession,
    ReferenceLinearBackend,
    load_model,
    predict,
)
from .registry import AgentRecord, HardwareSpec, RegistryClient, UnknownAgentError
from .semver import parse_version
from .tracing import TraceCollector, spans_to_json_obj

BACKEND_KINDS = {
    "reference-linear": ReferenceLinearBackend,
    "bitfile": BitfileBackend,
}


def default_backend_registry(framework_names: list[str], backend_kind: str = "reference-linear") -> BackendRegistry:
    registry = BackendRegistry()
    backend = BACKEND_KINDS[backend_kind]()
    for name in framework_names:
        registry.register(name, backend)
    return registry


def run_local_evaluation(
    manifest: ModelManifest,
    inputs: list[tuple[str, bytes]],
    *,
    overrides: dict[str, dict[str, Any]] | None = None,
    trace_level: str = "none",
    backend_registry: BackendRegistry | None = None,
    cache: AssetCache | None = None,
    base_dir: str | Path | None = None,
    device: str = "cpu",
    arch: str = "amd64",
    jpeg_decoder: str | None = None,
    session: PredictorSession | None = None,
) -> dict[str, Any]:
    """Run a full evaluation in-process: pipeline, predict, top-K, trace.

    The output carries no timestamps or random identifiers unless tracing
    is enabled, so repeated runs on the same inputs are byte-identical.
    """
    if base_dir is not None:
        manifest = resolve_asset_paths(manifest, base_dir)
    if backend_registry is None:
        backend_registry = default_backend_registry([manifest.framework.name])
    if session is None:
        session = load_model(
            manifest, device, registry=backend_registry, cache=cache, arch=arch
        )
    tracer = TraceCollector(trace_level)

    labels: list[str] | None = None
    prob_output = next((o for o in manifest.outputs if o.type == "probability"), None)
    if prob_output is not None and prob_output.features_url:
        label_path = (cache or _shared_cache()).download_asset(prob_output.features_url)
        labels = load_labels(Path(label_path).read_text())

    outputs = []
    provenance = []
    with tracer.span("evaluate", "application") as app_span:
        for name, raw in inputs:
            with tracer.span(f"input:{name}", "model", app_span or None) as input_span:
                with tracer.span("preprocess", "model", input_span or None):
                    tensor, prov = run_pipeline(
                        manifest.inputs[0], raw, overrides=overrides, jpeg_decoder=jpeg_decoder
                    )
                raw_outputs = predict(session, tensor, tracer, input_span or None)
                with tracer.span("postprocess", "model", input_span or None):
                    prob_layer = session.output_layer("probability")
                    probabilities = raw_outputs[prob_layer]
                    class_count = probabilities.shape[-1]
                    effective_labels = labels if labels is not None else [
                        str(i) for i in range(class_count)
                    ]
                    ranked = top_k(probabilities, min(5, class_count), effective_labels)
            outputs.append(
                {
                    "input": name,
                    "predictions": [p.to_json_obj() for p in ranked[0]],
                }
            )
            provenance.append({"input": name, **prov.to_json_obj()})

    result: dict[str, Any] = {
        "model_name": manifest.name,
        "model_version": str(manifest.version),
        "backend_kind": session.backend_kind,
        "device": device,
        "container_ref": session.container_ref,
        "environment": session.environment,
        "outputs": outputs,
        "provenance": provenance,
    }
    if tracer.enabled:
        result["trace"] = spans_to_json_obj(tracer.finalize())
        result["trace_level"] = trace_level
    return result


_SHARED_CACHE: AssetCache | None = None


def _shared_cache() -> AssetCache:
    global _SHARED_CACHE
    if _SHARED_CACHE is None:
        import tempfile

        _SHARED_CACHE = AssetCache(Path(tempfile.mkdtemp(prefix="evalscope-agent-")))
    return _SHARED_CACHE


@dataclass
class AgentConfig:
    agent_id: str
    host: str = "127.0.0.1"
    port: int = 0
    registry_url: str | None = None
    architecture: str = "amd64"
    device_classes: tuple[str, ...] = ("cpu",)
    interconnect: str | None = None
    framework_name: str = "reference"
    framework_version: str = "1.0.0"
    backend: str = "reference-linear"
    manifests: tuple[str, ...] = ()
    cache_dir: str | None = None
    heartbeat_interval_s: float = 5.0
    session_queue_depth: int = 1
    attributes: dict[str, str] = field(default_factory=dict)


class AgentService:
    """One predictor agent process: HTTP endpoint + registry presence."""

    def __init__(self, config: AgentConfig) -> None:
        self.config = config
        self.cache = AssetCache(config.cache_dir) if config.cache_dir else _shared_cache()
        backend_cls = BACKEND_KINDS.get(config.backend)
        if backend_cls is None:
            raise PredictorError(
                f"unknown backend {config.backend!r} (expected one of {', '.join(BACKEND_KINDS)})"
            )
        self.backend_registry = BackendRegistry()
        self._backend = backend_cls()
        self.manifests: list[ModelManifest] = []
        for path in config.manifests:
            manifest = parse_manifest(Path(path).read_text())
            manifest = resolve_asset_paths(manifest, Path(path).parent)
            self.manifests.append(manifest)
            self.backend_registry.register(manifest.framework.name, self._backend)
        self.backend_registry.register(config.framework_name, self._backend)

        self._sessions: dict[str, PredictorSession] = {}
        self._sessions_lock = threading.Lock()
        self.predict_calls = 0
        self.evaluations = 0
        self._stats_lock = threading.Lock()
        self._stop = threading.Event()
        self._heartbeat_thread: threading.Thread | None = None
        self.server = JsonHttpServer(config.host, config.port, self._routes())
        self.registry_client = (
            RegistryClient(config.registry_url) if config.registry_url else None
        )

    # -- capability record ------------------------------------------------

    def record(self) -> AgentRecord:
        return AgentRecord(
            agent_id=self.config.agent_id,
            address=f"{self.config.host}:{self.server.port}",
            hardware=HardwareSpec(
                architecture=self.config.architecture,
                device_classes=tuple(self.config.device_classes),
                interconnect=self.config.interconnect,
                attributes=dict(self.config.attributes),
            ),
            frameworks=(
                (self.config.framework_name, parse_version(self.config.framework_version)),
            ),
            models=tuple((m.name, m.version) for m in self.manifests),
        )

    # -- request handling --------------------------------------------------

    def _session_for(self, manifest: ModelManifest, manifest_text: str, device: str) -> PredictorSession:
        key = hashlib.sha256(f"{manifest_text}|{device}".encode()).hexdigest()
        with self._sessions_lock:
            session = self._sessions.get(key)
            if session is None:
                session = load_model(
                    manifest,
                    device,
                    registry=self.backend_registry,
                    cache=self.cache,
                    arch=self.config.architecture,
                    queue_depth=self.config.session_queue_depth,
                )
                self._sessions[key] = session
            return session

    def handle_predict(self, payload: dict[str, Any]) -> dict[str, Any]:
        manifest_text = payload.get("manifest")
        if not manifest_text:
            raise HttpError(400, "payload has no manifest")
        manifest = parse_manifest(manifest_text)
        device = payload.get("device", "cpu")
        overrides = payload.get("overrides") or {}
        trace_level = payload.get("trace_level", "none")
        inputs: list[tuple[str, bytes]] = []
        for i, item in enumerate(payload.get("inputs") or []):
            name = item.get("name", f"input-{i}")
            if "data_b64" in item:
                inputs.append((name, base64.b64decode(item["data_b64"])))
            elif "url" in item:
                path = self.cache.download_asset(item["url"])
                inputs.append((name, Path(path).read_bytes()))
            else:
                raise HttpError(400, f"input {name!r} has neither data_b64 nor url")
        if not inputs:
            raise HttpError(400, "payload has no inputs")

        session = self._session_for(manifest, manifest_text, device)
        try:
            result = run_local_evaluation(
                manifest,
                inputs,
                overrides=overrides,
                trace_level=trace_level,
                backend_registry=self.backend_registry,
                cache=self.cache,
                device=device,
                arch=self.config.architecture,
                session=session,
            )
        except (PipelineError, PredictorError) as exc:
            raise HttpError(422, str(exc))
        with self._stats_lock:
            self.predict_calls += len(inputs)
            self.evaluations += 1
        result["agent_id"] = self.config.agent_id
        result["framework_name"] = self.config.framework_name
        result["framework_version"] = self.config.framework_version
        return result

    def _routes(self) -> list[Route]:
        def predict_route(request) -> tuple[int, Any]:
            return 200, self.handle_predict(request.body or {})

        def stats(request) -> tuple[int, Any]:
            with self._stats_lock:
                return 200, {
                    "agent_id": self.config.agent_id,
                    "predict_calls": self.predict_calls,
                    "evaluations": self.evaluations,
                }

        def health(request) -> tuple[int, Any]:
            return 200, {"status": "ok", "agent_id": self.config.agent_id}

        def manifests(request) -> tuple[int, Any]:
            return 200, [serialize_manifest(m) for m in self.manifests]

        return [
            route("POST", r"/predict", predict_route),
            route("GET", r"/stats", stats),
            route("GET", r"/healthz", health),
            route("GET", r"/manifests", manifests),
        ]

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> None:
        self.server.start()
        if self.registry_client is not None:
            self.registry_client.publish(self.record())
            self._heartbeat_thread = threading.Thread(target=self._heartbeat_loop, daemon=True)
            self._heartbeat_thread.start()

    def _heartbeat_loop(self) -> None:
        while not self._stop.wait(self.config.heartbeat_interval_s):
            try:
                self.registry_client.heartbeat(self.config.agent_id)
            except UnknownAgentError:
                # Expired (e.g. registry restarted): re-publish.
                try:
                    self.registry_client.publish(self.record())
                except Exception:
                    pass
            except Exception:
                pass  # transient registry outage; retry next interval

    def stop(self) -> None:
        self._stop.set()
        if self._heartbeat_thread is not None:
            self._heartbeat_thread.join(timeout=2)
        if self.registry_client is not None:
            try:
                self.registry_client.deregister(self.config.agent_id)
            except Exception:
                pass
        for session in self._sessions.values():
            session.closed = True
        self.server.shutdown()
