"""Predictor core: pluggable backends, asset cache, sessions, prediction.

Backends present one uniform contract (load / predict / unload). The two
shipped backends are deliberately simple deterministic models so that
every preprocessing difference shows up in the output:

* ``reference-linear`` — softmax(W @ features + b) where the features are
  the per-channel means of the input buffer *interpreted in the backend's
  expected data layout*. Feeding an NCHW tensor to an NHWC-expecting
  model silently mixes planes into wrong channels, exactly like a real
  framework fed mislaid data.
* ``bitfile`` — stands in for devices without a software stack (FPGA
  style): load downloads one opaque asset and records it; predict reports
  softmaxed channel means.

Sessions are serialized (one predict at a time per session); distinct
sessions are independent and safe to use concurrently.
"""

from __future__ import annotations

import hashlib
import json
import shutil
import threading
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .manifest import ModelManifest, NoContainerError, resolve_container, validate_manifest
from .pipeline import Tensor
from .tracing import TraceCollector


class PredictorError(RuntimeError):
    pass


class NoBackendError(PredictorError):
    def __init__(self, framework: str, registered: list[str]) -> None:
        names = ", ".join(registered) or "none"
        super().__init__(f"no backend registered for framework {framework!r} (registered: {names})")
        self.framework = framework
        self.registered = registered


class AssetError(PredictorError):
    pass


class ChecksumMismatchError(AssetError):
    pass


class ShapeError(PredictorError):
    pass


# ---------------------------------------------------------------------------
# Asset cache


class AssetCache:
    """Content-addressed download cache: ``<root>/<sha256(url|checksum)>/<basename>``.

    A cache hit never re-downloads; a checksum mismatch fails and leaves no
    cache entry. Concurrent requests for the same key share one download.
    """

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.download_count = 0
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _key_lock(self, key: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(key, threading.Lock())

    def path_for(self, url: str, checksum: str | None = None) -> Path:
        key = hashlib.sha256(f"{url}|{checksum or ''}".encode()).hexdigest()
        basename = Path(urllib.parse.urlparse(url).path).name or "asset"
        return self.root / key / basename

    def download_asset(
        self, url: str, checksum: str | None = None, base_dir: str | Path | None = None
    ) -> Path:
        """Fetch *url* (http(s), file, or a path relative to *base_dir*) into the cache."""
        scheme = urllib.parse.urlparse(url).scheme
        if scheme not in ("http", "https", "file", ""):
            raise AssetError(f"unsupported URL scheme {scheme!r} for {url}")
        if scheme == "":
            local = Path(url)
            if not local.is_absolute():
                local = (Path(base_dir) if base_dir else Path.cwd()) / local
            url = local.resolve().as_uri()

        target = self.path_for(url, checksum)
        lock = self._key_lock(str(target))
        with lock:
            if target.exists():
                return target
            tmp = target.with_name(target.name + ".part")
            target.parent.mkdir(parents=True, exist_ok=True)
            try:
                with urllib.request.urlopen(url) as response, open(tmp, "wb") as sink:
                    shutil.copyfileobj(response, sink)
            except (urllib.error.URLError, OSError) as exc:
                tmp.unlink(missing_ok=True)
                raise AssetError(f"failed to fetch {url}: {exc}") from exc
            self.download_count += 1
            if checksum is not None:
                digest = hashlib.sha256(tmp.read_bytes()).hexdigest()
                if digest != checksum.lower():
                    tmp.unlink(missing_ok=True)
                    shutil.rmtree(target.parent, ignore_errors=True)
                    raise ChecksumMismatchError(
                        f"checksum mismatch for {url}: expected {checksum}, got {digest}"
                    )
            tmp.replace(target)
            return target

    def purge(self) -> None:
        shutil.rmtree(self.root, ignore_errors=True)
        self.root.mkdir(parents=True, exist_ok=True)


def download_asset(
    url: str,
    checksum: str | None = None,
    cache: AssetCache | None = None,
    base_dir: str | Path | None = None,
) -> Path:
    cache = cache or _default_cache()
    return cache.download_asset(url, checksum, base_dir)


_DEFAULT_CACHE: AssetCache | None = None


def _default_cache() -> AssetCache:
    global _DEFAULT_CACHE
    if _DEFAULT_CACHE is None:
        import tempfile

        _DEFAULT_CACHE = AssetCache(Path(tempfile.gettempdir()) / "evalscope-assets")
    return _DEFAULT_CACHE


# ---------------------------------------------------------------------------
# Sessions


@dataclass
class PredictorSession:
    session_id: str
    manifest: ModelManifest
    device: str
    backend_kind: str
    environment: dict[str, str]
    assets: dict[str, Path]
    container_ref: str | None
    handle: Any
    backend: "Any"
    closed: bool = False
    # one predict at a time per session unless load_model widened the queue
    lock: threading.Semaphore = field(
        default_factory=lambda: threading.BoundedSemaphore(1), repr=False
    )

    @property
    def input_spec(self):
        return self.manifest.inputs[0]

    def output_layer(self, output_type: str) -> str:
        for out in self.manifest.outputs:
            if out.type == output_type:
                return out.layer_name or out.type
        raise PredictorError(f"manifest has no output of type {output_type!r}")


# ---------------------------------------------------------------------------
# Backends


@dataclass
class LinearModel:
    classes: tuple[str, ...]
    weights: np.ndarray  # (C, F)
    bias: np.ndarray  # (C,)
    expected_layout: str
    expected_color_layout: str


def _stable_softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def _channel_means(tensor: Tensor, expected_layout: str, channels: int) -> np.ndarray:
    """Per-channel means of the flat buffer as seen through *expected_layout*.

    The tensor's own claimed layout is deliberately ignored: a backend
    consumes bytes the way the model was trained, which is what makes
    layout mis-feeds silent.
    """
    flat = np.asarray(tensor.data, dtype=np.float64).reshape(-1)
    batch = tensor.dims[0] if tensor.dims else 1
    if batch <= 0 or flat.size % (batch * channels) != 0:
        raise ShapeError(
            f"input of {flat.size} elements is incompatible with batch {batch} x {channels} channels"
        )
    if expected_layout == "NHWC":
        return flat.reshape(batch, -1, channels).mean(axis=1)
    if expected_layout == "NCHW":
        return flat.reshape(batch, channels, -1).mean(axis=2)
    raise PredictorError(f"unknown expected layout {expected_layout!r}")


class ReferenceLinearBackend:
    kind = "reference-linear"
    tasks = ("classification",)

    def load(self, manifest: ModelManifest, device: str, assets: dict[str, Path]) -> LinearModel:
        graph = assets.get("graph")
        if graph is None:
            raise PredictorError("reference-linear backend requires a graph asset")
        try:
            payload = json.loads(Path(graph).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise PredictorError(f"cannot load weights from {graph}: {exc}") from exc
        try:
            weights = np.asarray(payload["weights"], dtype=np.float64)
            bias = np.asarray(payload["bias"], dtype=np.float64)
            classes = tuple(payload["classes"])
            expected_layout = payload.get("expected_layout", "NHWC")
            expected_color_layout = payload.get("expected_color_layout", "RGB")
        except KeyError as exc:
            raise PredictorError(f"weights file {graph} is missing field {exc}") from exc
        if weights.ndim != 2 or weights.shape[0] != len(classes) or bias.shape != (len(classes),):
            raise PredictorError(
                f"weights file {graph} has inconsistent shapes: "
                f"weights {weights.shape}, bias {bias.shape}, {len(classes)} classes"
            )
        if not (np.isfinite(weights).all() and np.isfinite(bias).all()):
            raise PredictorError(f"weights file {graph} contains non-finite values")
        return LinearModel(classes, weights, bias, expected_layout, expected_color_layout)

    def predict(
        self,
        model: LinearModel,
        tensor: Tensor,
        tracer: TraceCollector | None = None,
        parent_span_id: str | None = None,
    ) -> dict[str, np.ndarray]:
        tracer = tracer or TraceCollector("none")
        channels = model.weights.shape[1]
        with tracer.span("linear", "layer", parent_span_id) as linear_span:
            with tracer.span("matmul", "library", linear_span or None):
                features = _channel_means(tensor, model.expected_layout, channels)
                scores = features @ model.weights.T + model.bias
        with tracer.span("softmax", "layer", parent_span_id):
            probabilities = _stable_softmax(scores)
        return {"prob": probabilities.astype(np.float32)}

    def unload(self, model: LinearModel) -> None:
        pass


class BitfileBackend:
    """FPGA-style agent path: loads an opaque bitfile, reports channel means."""

    kind = "bitfile"
    tasks = ("classification",)

    def load(self, manifest: ModelManifest, device: str, assets: dict[str, Path]) -> dict[str, Any]:
        bitfile = assets.get("graph")
        if bitfile is None:
            raise PredictorError("bitfile backend requires a graph (bitfile) asset")
        digest = hashlib.sha256(Path(bitfile).read_bytes()).hexdigest()
        return {"bitfile": str(bitfile), "bitfile_sha256": digest}

    def predict(
        self,
        handle: dict[str, Any],
        tensor: Tensor,
        tracer: TraceCollector | None = None,
        parent_span_id: str | None = None,
    ) -> dict[str, np.ndarray]:
        tracer = tracer or TraceCollector("none")
        with tracer.span("bitfile-inference", "layer", parent_span_id):
            features = _channel_means(tensor, "NHWC", 3)
            probabilities = _stable_softmax(features)
        return {"prob": probabilities.astype(np.float32)}

    def unload(self, handle: dict[str, Any]) -> None:
        pass


# ---------------------------------------------------------------------------
# Backend registry and session lifecycle


class BackendRegistry:
    def __init__(self) -> None:
        self._backends: dict[str, Any] = {}

    def register(self, framework_name: str, backend: Any) -> None:
        self._backends[framework_name] = backend

    def resolve(self, framework_name: str) -> Any:
        backend = self._backends.get(framework_name)
        if backend is None:
            raise NoBackendError(framework_name, sorted(self._backends))
        return backend

    def registered(self) -> list[str]:
        return sorted(self._backends)


_SESSION_COUNTER = [0]
_SESSION_COUNTER_LOCK = threading.Lock()


def load_model(
    manifest: ModelManifest,
    device: str = "cpu",
    *,
    registry: BackendRegistry,
    cache: AssetCache | None = None,
    base_dir: str | Path | None = None,
    arch: str = "amd64",
    queue_depth: int = 1,
) -> PredictorSession:
    """Validate, resolve a backend, download assets, and open a session.

    ``queue_depth`` bounds concurrent predicts on this session (default 1:
    fully serialized).
    """
    if queue_depth < 1:
        raise PredictorError("queue_depth must be >= 1")
    report = validate_manifest(manifest)
    if not report.ok():
        problems = "; ".join(f"{v.path}: {v.message}" for v in report.errors)
        raise PredictorError(f"manifest {manifest.name} rejected: {problems}")
    backend = registry.resolve(manifest.framework.name)
    if manifest.task not in backend.tasks:
        raise PredictorError(
            f"backend {backend.kind} does not support task {manifest.task!r}"
        )

    container_ref: str | None = None
    if manifest.containers:
        try:
            container_ref = resolve_container(manifest, arch, device)
        except NoContainerError:
            container_ref = None

    cache = cache or _default_cache()
    assets: dict[str, Path] = {}
    if manifest.source is not None:
        assets["graph"] = cache.download_asset(
            manifest.source.resolved_graph_url(),
            manifest.source.checksums.get("graph"),
            base_dir,
        )
        weights_url = manifest.source.resolved_weights_url()
        if weights_url is not None:
            assets["weights"] = cache.download_asset(
                weights_url, manifest.source.checksums.get("weights"), base_dir
            )

    handle = backend.load(manifest, device, assets)
    with _SESSION_COUNTER_LOCK:
        _SESSION_COUNTER[0] += 1
        session_id = f"session-{_SESSION_COUNTER[0]}"
    return PredictorSession(
        session_id=session_id,
        manifest=manifest,
        device=device,
        backend_kind=backend.kind,
        environment={key: value for key, value in manifest.envvars},
        assets=assets,
        container_ref=container_ref,
        handle=handle,
        backend=backend,
        lock=threading.BoundedSemaphore(queue_depth),
    )


def _expected_sample_size(manifest: ModelManifest) -> int | None:
    spec = manifest.inputs[0]
    for step in spec.processing:
        if step.kind == "resize":
            c, h, w = step.dimensions
            return c * h * w
    return None


def predict(
    session: PredictorSession,
    tensor: Tensor,
    tracer: TraceCollector | None = None,
    parent_span_id: str | None = None,
) -> dict[str, np.ndarray]:
    """Run one batch through the session's backend; outputs keyed by layer name.

    The element count and element type are checked against the manifest;
    axis order is not, because a mislaid (but same-sized) buffer is
    exactly the failure mode real stacks do not catch.
    """
    if session.closed:
        raise PredictorError(f"session {session.session_id} is closed")
    spec = session.input_spec
    if tensor.element_type != spec.element_type and not (
        spec.element_type == "int8" and tensor.element_type == "uint8"
    ):
        raise ShapeError(
            f"input element type {tensor.element_type} does not match manifest "
            f"element type {spec.element_type}"
        )
    expected = _expected_sample_size(session.manifest)
    batch = tensor.dims[0] if tensor.dims else 1
    if expected is not None and tensor.data.size != batch * expected:
        raise ShapeError(
            f"input has {tensor.data.size} elements; manifest expects {expected} per sample"
        )

    tracer = tracer or TraceCollector("none")
    with session.lock:
        with tracer.span(
            f"{session.backend_kind}:predict", "framework", parent_span_id
        ) as framework_span:
            raw = session.backend.predict(session.handle, tensor, tracer, framework_span or None)
    outputs: dict[str, np.ndarray] = {}
    for key, value in raw.items():
        layer = session.output_layer("probability") if key == "prob" else key
        outputs[layer] = value
    return outputs


def unload(session: PredictorSession) -> None:
    if not session.closed:
        session.backend.unload(session.handle)
        session.closed = True
