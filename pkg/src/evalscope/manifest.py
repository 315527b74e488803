"""Model manifests: parsing, validation, serialization, container resolution.

A manifest is the complete declarative description of how a model is
evaluated: identity and task, framework with a version constraint, the
per-platform container map, environment variables, ordered pre-processing
steps for each input, outputs, and asset sources. Step order in the
document is authoritative — the pipeline executes steps exactly in the
order they are written, so parsing is strictly order-preserving.

Unknown keys anywhere in the document are retained in ``attributes`` maps
(and surfaced as validation warnings) rather than dropped, so manifests
written for newer runtimes still load.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from . import yamldoc
from .semver import (
    ConstraintError,
    SemVer,
    VersionConstraint,
    parse_version,
    parse_version_constraint,
)
from .yamldoc import DocumentError, FlowList, Map, Scalar, Seq

ManifestSyntaxError = DocumentError

TASKS = ("classification", "object_detection", "instance_segmentation")
ELEMENT_TYPES = ("int8", "uint8", "float32")
DATA_LAYOUTS = ("NHWC", "NCHW")
COLOR_LAYOUTS = ("RGB", "BGR")
DCT_METHODS = ("integer_fast", "integer_accurate")
OUTPUT_TYPES = ("probability", "box", "class", "mask")
ORDER_POLICIES = ("convert_then_normalize", "normalize_in_bytes_then_convert")


class ManifestError(ValueError):
    pass


class ManifestSchemaError(ManifestError):
    """A structural or type violation, located by field path."""

    def __init__(self, path: str, reason: str) -> None:
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class NoContainerError(ManifestError):
    def __init__(self, arch: str, device: str, available: list[tuple[str, str]]) -> None:
        pairs = ", ".join(f"{a}/{d}" for a, d in available) or "none"
        super().__init__(f"no container for {arch}/{device} (available: {pairs})")
        self.arch = arch
        self.device = device
        self.available = available


# ---------------------------------------------------------------------------
# Processing steps


@dataclass(frozen=True)
class DecodeStep:
    kind = "decode"
    element_type: str = "uint8"
    data_layout: str = "NHWC"
    color_layout: str = "RGB"
    dct_method: str = "integer_accurate"

    def params(self) -> dict[str, Any]:
        return {
            "element_type": self.element_type,
            "data_layout": self.data_layout,
            "color_layout": self.color_layout,
            "dct_method": self.dct_method,
        }


@dataclass(frozen=True)
class CropStep:
    kind = "crop"
    method: str = "center"
    percentage: float = 100.0

    def params(self) -> dict[str, Any]:
        return {"method": self.method, "percentage": self.percentage}


@dataclass(frozen=True)
class ResizeStep:
    kind = "resize"
    dimensions: tuple[int, int, int] = (3, 1, 1)  # [C, H, W]
    method: str = "bilinear"
    keep_aspect_ratio: bool = False

    def params(self) -> dict[str, Any]:
        return {
            "dimensions": list(self.dimensions),
            "method": self.method,
            "keep_aspect_ratio": self.keep_aspect_ratio,
        }


@dataclass(frozen=True)
class MeanStep:
    kind = "mean"
    values: tuple[float, ...] = ()

    def params(self) -> dict[str, Any]:
        return {"values": list(self.values)}


@dataclass(frozen=True)
class RescaleStep:
    kind = "rescale"
    value: float = 1.0

    def params(self) -> dict[str, Any]:
        return {"value": self.value}


@dataclass(frozen=True)
class CastStep:
    kind = "cast"
    element_type: str = "float32"
    order_policy: str = "convert_then_normalize"

    def params(self) -> dict[str, Any]:
        return {"element_type": self.element_type, "order_policy": self.order_policy}


ProcessingStep = DecodeStep | CropStep | ResizeStep | MeanStep | RescaleStep | CastStep

STEP_KINDS = ("decode", "crop", "resize", "mean", "rescale", "cast")


# ---------------------------------------------------------------------------
# Manifest structure


@dataclass(frozen=True)
class FrameworkSpec:
    name: str
    version_constraint: VersionConstraint


@dataclass(frozen=True)
class InputSpec:
    type: str = "image"
    layer_name: str = ""
    element_type: str = "uint8"
    processing: tuple[ProcessingStep, ...] = ()
    attributes: dict[str, Any] = field(default_factory=dict)

    def steps_of_kind(self, kind: str) -> list[ProcessingStep]:
        return [s for s in self.processing if s.kind == kind]


@dataclass(frozen=True)
class OutputSpec:
    type: str
    layer_name: str = ""
    element_type: str = "float32"
    features_url: str | None = None
    attributes: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class SourceSpec:
    graph_path: str
    base_url: str | None = None
    weights_path: str | None = None
    checksums: dict[str, str] = field(default_factory=dict)

    def resolved_graph_url(self) -> str:
        return _resolve_url(self.base_url, self.graph_path)

    def resolved_weights_url(self) -> str | None:
        if self.weights_path is None:
            return None
        return _resolve_url(self.base_url, self.weights_path)


def _resolve_url(base: str | None, path: str) -> str:
    if base and "://" not in path:
        return base.rstrip("/") + "/" + path.lstrip("/")
    return path


@dataclass(frozen=True)
class DatasetRef:
    name: str
    version: SemVer


@dataclass(frozen=True)
class ModelManifest:
    name: str
    version: SemVer
    task: str
    framework: FrameworkSpec
    license: str = ""
    description: str = ""
    containers: dict[str, dict[str, str]] = field(default_factory=dict)
    envvars: tuple[tuple[str, str], ...] = ()
    inputs: tuple[InputSpec, ...] = ()
    outputs: tuple[OutputSpec, ...] = ()
    source: SourceSpec | None = None
    training_dataset: DatasetRef | None = None
    attributes: dict[str, Any] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Validation report


@dataclass(frozen=True)
class Violation:
    path: str
    severity: str  # "error" | "warning"
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def errors(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "error"]

    @property
    def warnings(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "warning"]

    def ok(self) -> bool:
        return not self.errors

    def add(self, path: str, severity: str, message: str) -> None:
        self.violations.append(Violation(path, severity, message))

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "ok": self.ok(),
            "violations": [
                {"path": v.path, "severity": v.severity, "message": v.message}
                for v in self.violations
            ],
        }


# ---------------------------------------------------------------------------
# Parsing helpers


def _scalar(node: yamldoc.Node | None, path: str) -> Scalar:
    if not isinstance(node, Scalar):
        raise ManifestSchemaError(path, "expected a scalar value")
    return node


def _map(node: yamldoc.Node | None, path: str) -> Map:
    if not isinstance(node, Map):
        raise ManifestSchemaError(path, "expected a mapping")
    return node


def _seq(node: yamldoc.Node | None, path: str) -> Seq:
    if not isinstance(node, Seq):
        raise ManifestSchemaError(path, "expected a sequence")
    return node


def _required(node: Map, key: str, path: str) -> yamldoc.Node:
    child = node.get(key)
    if child is None:
        raise ManifestSchemaError(f"{path}.{key}" if path else key, "required field is missing")
    return child


def _str_value(node: Map, key: str, path: str, default: str | None = None) -> str | None:
    child = node.get(key)
    if child is None:
        return default
    return _scalar(child, f"{path}.{key}" if path else key).as_str()


def _enum(value: str, allowed: tuple[str, ...], path: str, what: str) -> str:
    if value not in allowed:
        raise ManifestSchemaError(path, f"unsupported {what} {value!r} (expected one of {', '.join(allowed)})")
    return value


def _auto(node: yamldoc.Node) -> Any:
    """Convert a parsed node into plain Python values (for attribute maps)."""
    if isinstance(node, Scalar):
        return node.as_auto()
    if isinstance(node, Seq):
        return [_auto(item) for item in node.items]
    return {k: _auto(v) for k, v in node.entries}


def _float_at(node: yamldoc.Node, path: str) -> float:
    try:
        return _scalar(node, path).as_float()
    except DocumentError as exc:
        raise ManifestSchemaError(path, exc.reason) from exc


def _int_at(node: yamldoc.Node, path: str) -> int:
    try:
        return _scalar(node, path).as_int()
    except DocumentError as exc:
        raise ManifestSchemaError(path, exc.reason) from exc


def _bool_at(node: yamldoc.Node, path: str) -> bool:
    try:
        return _scalar(node, path).as_bool()
    except DocumentError as exc:
        raise ManifestSchemaError(path, exc.reason) from exc


# ---------------------------------------------------------------------------
# Step parsing

_STEP_FIELDS = {
    "decode": ("element_type", "data_layout", "color_layout", "dct_method"),
    "crop": ("method", "percentage"),
    "resize": ("dimensions", "method", "keep_aspect_ratio"),
    "cast": ("element_type", "order_policy"),
}


def _parse_step(kind: str, node: yamldoc.Node, path: str) -> ProcessingStep:
    if kind == "mean":
        values = _seq(node, path)
        return MeanStep(tuple(_float_at(v, f"{path}[{i}]") for i, v in enumerate(values.items)))
    if kind == "rescale":
        return RescaleStep(_float_at(node, path))
    params = _map(node, path)
    for key in params.keys():
        if key not in _STEP_FIELDS[kind]:
            raise ManifestSchemaError(f"{path}.{key}", f"unknown parameter for {kind} step")
    if kind == "decode":
        defaults = DecodeStep()
        element_type = _str_value(params, "element_type", path, defaults.element_type)
        # Image bytes are unsigned; int8 is accepted as an alias of uint8.
        _enum(element_type, ("int8", "uint8"), f"{path}.element_type", "decode element type")
        return DecodeStep(
            element_type=element_type,
            data_layout=_enum(
                _str_value(params, "data_layout", path, defaults.data_layout),
                DATA_LAYOUTS, f"{path}.data_layout", "data layout",
            ),
            color_layout=_enum(
                _str_value(params, "color_layout", path, defaults.color_layout),
                COLOR_LAYOUTS, f"{path}.color_layout", "color layout",
            ),
            dct_method=_enum(
                _str_value(params, "dct_method", path, defaults.dct_method),
                DCT_METHODS, f"{path}.dct_method", "dct method",
            ),
        )
    if kind == "crop":
        method = _enum(_str_value(params, "method", path, "center"), ("center",), f"{path}.method", "crop method")
        percentage_node = params.get("percentage")
        if percentage_node is None:
            raise ManifestSchemaError(f"{path}.percentage", "required field is missing")
        return CropStep(method=method, percentage=_float_at(percentage_node, f"{path}.percentage"))
    if kind == "resize":
        dims_node = params.get("dimensions")
        if dims_node is None:
            raise ManifestSchemaError(f"{path}.dimensions", "required field is missing")
        dims_seq = _seq(dims_node, f"{path}.dimensions")
        if len(dims_seq.items) != 3:
            raise ManifestSchemaError(f"{path}.dimensions", "expected [channels, height, width]")
        dims = tuple(_int_at(v, f"{path}.dimensions[{i}]") for i, v in enumerate(dims_seq.items))
        keep_node = params.get("keep_aspect_ratio")
        keep = _bool_at(keep_node, f"{path}.keep_aspect_ratio") if keep_node is not None else False
        return ResizeStep(
            dimensions=dims,
            method=_enum(_str_value(params, "method", path, "bilinear"), ("bilinear",), f"{path}.method", "resize method"),
            keep_aspect_ratio=keep,
        )
    if kind == "cast":
        return CastStep(
            element_type=_enum(
                _str_value(params, "element_type", path, "float32"),
                ELEMENT_TYPES, f"{path}.element_type", "element type",
            ),
            order_policy=_enum(
                _str_value(params, "order_policy", path, "convert_then_normalize"),
                ORDER_POLICIES, f"{path}.order_policy", "order policy",
            ),
        )
    raise ManifestSchemaError(path, f"unsupported processing step {kind!r} (expected one of {', '.join(STEP_KINDS)})")


def _parse_processing(node: yamldoc.Node, path: str) -> tuple[ProcessingStep, ...]:
    block = _map(node, path)
    steps: list[ProcessingStep] = []
    for kind, params in block.entries:
        if kind not in STEP_KINDS:
            raise ManifestSchemaError(
                f"{path}.{kind}", f"unsupported processing step {kind!r} (expected one of {', '.join(STEP_KINDS)})"
            )
        steps.append(_parse_step(kind, params, f"{path}.{kind}"))
    return tuple(steps)


_INPUT_KEYS = ("type", "layer_name", "element_type", "processing")
_OUTPUT_KEYS = ("type", "layer_name", "element_type", "processing", "features_url")


def _parse_input(node: yamldoc.Node, path: str) -> InputSpec:
    block = _map(node, path)
    attributes = {k: _auto(v) for k, v in block.entries if k not in _INPUT_KEYS}
    element_type = _str_value(block, "element_type", path, "uint8")
    _enum(element_type, ELEMENT_TYPES, f"{path}.element_type", "element type")
    processing_node = block.get("processing")
    processing = _parse_processing(processing_node, f"{path}.processing") if processing_node is not None else ()
    return InputSpec(
        type=_str_value(block, "type", path, "image"),
        layer_name=_str_value(block, "layer_name", path, ""),
        element_type=element_type,
        processing=processing,
        attributes=attributes,
    )


def _parse_output(node: yamldoc.Node, path: str) -> OutputSpec:
    block = _map(node, path)
    type_node = _required(block, "type", path)
    out_type = _enum(_scalar(type_node, f"{path}.type").as_str(), OUTPUT_TYPES, f"{path}.type", "output type")
    features_url = _str_value(block, "features_url", path)
    processing_node = block.get("processing")
    if processing_node is not None:
        processing = _map(processing_node, f"{path}.processing")
        for key, value in processing.entries:
            if key == "features_url":
                features_url = _scalar(value, f"{path}.processing.features_url").as_str()
            else:
                raise ManifestSchemaError(f"{path}.processing.{key}", "unsupported output processing key")
    attributes = {k: _auto(v) for k, v in block.entries if k not in _OUTPUT_KEYS}
    element_type = _str_value(block, "element_type", path, "float32")
    _enum(element_type, ELEMENT_TYPES, f"{path}.element_type", "element type")
    return OutputSpec(
        type=out_type,
        layer_name=_str_value(block, "layer_name", path, ""),
        element_type=element_type,
        features_url=features_url,
        attributes=attributes,
    )


_TOP_KEYS = (
    "name", "version", "task", "licence", "license", "description", "framework",
    "container", "envvars", "inputs", "outputs", "source", "training_dataset",
)


def parse_manifest(text: str) -> ModelManifest:
    """Parse manifest text into a :class:`ModelManifest`.

    Raises :class:`ManifestSyntaxError` (with line/column) for malformed
    documents and :class:`ManifestSchemaError` (with a field path) for
    structural violations. Value-range checks live in
    :func:`validate_manifest`.
    """
    root = yamldoc.load(text)
    if not isinstance(root, Map):
        raise ManifestSchemaError("", "manifest must be a mapping")

    name = _scalar(_required(root, "name", ""), "name").as_str()
    if not name:
        raise ManifestSchemaError("name", "must be non-empty")

    version_text = _scalar(_required(root, "version", ""), "version").as_str()
    try:
        version = parse_version(version_text)
    except ConstraintError as exc:
        raise ManifestSchemaError("version", str(exc)) from exc

    task = _enum(_scalar(_required(root, "task", ""), "task").as_str(), TASKS, "task", "task")

    if root.has("licence") and root.has("license"):
        raise ManifestSchemaError("licence", "both 'licence' and 'license' present")
    license_text = _str_value(root, "licence", "", None)
    if license_text is None:
        license_text = _str_value(root, "license", "", "")

    framework_block = _map(_required(root, "framework", ""), "framework")
    framework_name = _str_value(framework_block, "name", "framework", "")
    if not framework_name:
        raise ManifestSchemaError("framework.name", "must be non-empty")
    constraint_text = _scalar(_required(framework_block, "version", "framework"), "framework.version").as_str()
    try:
        constraint = parse_version_constraint(constraint_text)
    except ConstraintError as exc:
        raise ManifestSchemaError("framework.version", str(exc)) from exc

    containers: dict[str, dict[str, str]] = {}
    container_node = root.get("container")
    if container_node is not None:
        for arch, devices in _map(container_node, "container").entries:
            containers[arch] = {}
            for device, ref in _map(devices, f"container.{arch}").entries:
                containers[arch][device] = _scalar(ref, f"container.{arch}.{device}").as_str()

    envvars: list[tuple[str, str]] = []
    envvars_node = root.get("envvars")
    if envvars_node is not None:
        for i, item in enumerate(_seq(envvars_node, "envvars").items):
            entry = _map(item, f"envvars[{i}]")
            if len(entry.entries) != 1:
                raise ManifestSchemaError(f"envvars[{i}]", "expected a single KEY: value pair")
            key, value = entry.entries[0]
            envvars.append((key, _scalar(value, f"envvars[{i}].{key}").as_str()))

    inputs_node = _required(root, "inputs", "")
    inputs_seq = _seq(inputs_node, "inputs")
    if not inputs_seq.items:
        raise ManifestSchemaError("inputs", "must be non-empty")
    inputs = tuple(_parse_input(item, f"inputs[{i}]") for i, item in enumerate(inputs_seq.items))

    outputs_node = _required(root, "outputs", "")
    outputs_seq = _seq(outputs_node, "outputs")
    if not outputs_seq.items:
        raise ManifestSchemaError("outputs", "must be non-empty")
    outputs = tuple(_parse_output(item, f"outputs[{i}]") for i, item in enumerate(outputs_seq.items))

    source: SourceSpec | None = None
    source_node = root.get("source")
    if source_node is not None:
        source_block = _map(source_node, "source")
        graph_path = _str_value(source_block, "graph_path", "source", "")
        if not graph_path:
            raise ManifestSchemaError("source.graph_path", "must be non-empty")
        checksums: dict[str, str] = {}
        checksums_node = source_block.get("checksums")
        if checksums_node is not None:
            for asset, digest in _map(checksums_node, "source.checksums").entries:
                checksums[asset] = _scalar(digest, f"source.checksums.{asset}").as_str()
        source = SourceSpec(
            graph_path=graph_path,
            base_url=_str_value(source_block, "base_url", "source"),
            weights_path=_str_value(source_block, "weights_path", "source"),
            checksums=checksums,
        )

    training_dataset: DatasetRef | None = None
    dataset_node = root.get("training_dataset")
    if dataset_node is not None:
        dataset_block = _map(dataset_node, "training_dataset")
        ds_name = _str_value(dataset_block, "name", "training_dataset", "")
        ds_version_text = _str_value(dataset_block, "version", "training_dataset", "")
        if not ds_name or not ds_version_text:
            raise ManifestSchemaError("training_dataset", "name and version must be non-empty")
        try:
            training_dataset = DatasetRef(ds_name, parse_version(ds_version_text))
        except ConstraintError as exc:
            raise ManifestSchemaError("training_dataset.version", str(exc)) from exc

    attributes = {k: _auto(v) for k, v in root.entries if k not in _TOP_KEYS}

    return ModelManifest(
        name=name,
        version=version,
        task=task,
        license=license_text,
        description=_str_value(root, "description", "", ""),
        framework=FrameworkSpec(framework_name, constraint),
        containers=containers,
        envvars=tuple(envvars),
        inputs=inputs,
        outputs=outputs,
        source=source,
        training_dataset=training_dataset,
        attributes=attributes,
    )


# ---------------------------------------------------------------------------
# Validation


_TASK_REQUIRED_OUTPUTS = {
    "classification": ("probability",),
    "object_detection": ("box", "probability", "class"),
    "instance_segmentation": ("box", "probability", "class", "mask"),
}


def validate_manifest(manifest: ModelManifest) -> ValidationReport:
    """Value-level validation; agents reject manifests whose report has errors."""
    report = ValidationReport()

    output_types = [o.type for o in manifest.outputs]
    required = _TASK_REQUIRED_OUTPUTS[manifest.task]
    for needed in required:
        if needed not in output_types:
            report.add("outputs", "error", f"task {manifest.task} requires an output of type {needed}")
    if manifest.task == "classification" and output_types.count("probability") != 1:
        report.add("outputs", "error", "classification requires exactly one probability output")

    for arch, devices in manifest.containers.items():
        for device, ref in devices.items():
            if not ref:
                report.add(f"container.{arch}.{device}", "error", "container reference must be non-empty")

    for i, spec in enumerate(manifest.inputs):
        base = f"inputs[{i}]"
        channels = 3
        for step in spec.processing:
            path = f"{base}.processing.{step.kind}"
            if isinstance(step, CropStep):
                if not 0 < step.percentage <= 100:
                    report.add(f"{path}.percentage", "error", "crop percentage must be in (0, 100]")
            elif isinstance(step, ResizeStep):
                if any(d < 1 for d in step.dimensions):
                    report.add(f"{path}.dimensions", "error", "resize dimensions must all be >= 1")
            elif isinstance(step, MeanStep):
                if len(step.values) != channels:
                    report.add(
                        f"{path}.values", "error",
                        f"mean must have {channels} entries (one per channel), got {len(step.values)}",
                    )
            elif isinstance(step, RescaleStep):
                if step.value == 0:
                    report.add(f"{path}.value", "error", "rescale must be non-zero")
        cast_steps = [s for s in spec.processing if isinstance(s, CastStep)]
        if cast_steps:
            kinds = [s.kind for s in spec.processing]
            if "mean" in kinds and kinds.index("cast") > kinds.index("mean") and (
                cast_steps[0].order_policy == "normalize_in_bytes_then_convert"
            ):
                report.add(
                    f"{base}.processing.cast", "warning",
                    "normalize_in_bytes_then_convert cast listed after mean; place it before "
                    "mean/rescale for the byte-domain arithmetic to take effect",
                )
        for key in spec.attributes:
            report.add(f"{base}.{key}", "warning", "unknown key preserved in attributes")

    if manifest.task == "classification":
        for i, out in enumerate(manifest.outputs):
            if out.type == "probability" and not out.features_url:
                report.add(
                    f"outputs[{i}].features_url", "warning",
                    "probability output has no label list; labeled metrics unavailable",
                )
    for i, out in enumerate(manifest.outputs):
        for key in out.attributes:
            report.add(f"outputs[{i}].{key}", "warning", "unknown key preserved in attributes")

    for key in manifest.attributes:
        report.add(key, "warning", "unknown key preserved in attributes")

    return report


# ---------------------------------------------------------------------------
# Container resolution / serialization


def resolve_container(manifest: ModelManifest, arch: str, device: str) -> str:
    """Return the container reference for (arch, device)."""
    ref = manifest.containers.get(arch, {}).get(device)
    if not ref:
        available = [(a, d) for a, devices in manifest.containers.items() for d in devices]
        raise NoContainerError(arch, device, available)
    return ref


def resolve_asset_paths(manifest: ModelManifest, base_dir) -> ModelManifest:
    """Rewrite relative asset paths as absolute ones anchored at *base_dir*.

    Manifests shipped as files may reference their assets relative to the
    manifest's own directory; a manifest sent over the wire must carry
    self-contained paths, so senders call this before serializing.
    """
    from dataclasses import replace
    from pathlib import Path

    base = Path(base_dir).resolve()

    def absolutize(path: str | None) -> str | None:
        if path and "://" not in path and not Path(path).is_absolute():
            return str((base / path).resolve())
        return path

    source = manifest.source
    if source is not None and source.base_url is None:
        source = replace(
            source,
            graph_path=absolutize(source.graph_path),
            weights_path=absolutize(source.weights_path),
        )
    outputs = tuple(
        replace(out, features_url=absolutize(out.features_url)) if out.features_url else out
        for out in manifest.outputs
    )
    return replace(manifest, source=source, outputs=outputs)


def _plain(value: Any) -> Any:
    if isinstance(value, list):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def serialize_manifest(manifest: ModelManifest) -> str:
    """Canonical manifest text; keys follow the reference document order."""
    doc: dict[str, Any] = {
        "name": manifest.name,
        "version": str(manifest.version),
        "task": manifest.task,
        "licence": manifest.license,
        "description": manifest.description,
        "framework": {
            "name": manifest.framework.name,
            "version": manifest.framework.version_constraint.text,
        },
    }
    if manifest.containers:
        doc["container"] = {
            arch: dict(devices) for arch, devices in manifest.containers.items()
        }
    if manifest.envvars:
        doc["envvars"] = [{key: value} for key, value in manifest.envvars]

    inputs = []
    for spec in manifest.inputs:
        entry: dict[str, Any] = {"type": spec.type}
        if spec.layer_name:
            entry["layer_name"] = spec.layer_name
        entry["element_type"] = spec.element_type
        if spec.processing:
            processing: dict[str, Any] = {}
            for step in spec.processing:
                if isinstance(step, MeanStep):
                    processing["mean"] = FlowList(step.values)
                elif isinstance(step, RescaleStep):
                    processing["rescale"] = step.value
                elif isinstance(step, ResizeStep):
                    params = step.params()
                    params["dimensions"] = FlowList(step.dimensions)
                    processing["resize"] = params
                else:
                    processing[step.kind] = step.params()
            entry["processing"] = processing
        entry.update(_plain(spec.attributes))
        inputs.append(entry)
    doc["inputs"] = inputs

    outputs = []
    for out in manifest.outputs:
        entry = {"type": out.type}
        if out.layer_name:
            entry["layer_name"] = out.layer_name
        entry["element_type"] = out.element_type
        if out.features_url:
            entry["processing"] = {"features_url": out.features_url}
        entry.update(_plain(out.attributes))
        outputs.append(entry)
    doc["outputs"] = outputs

    if manifest.source is not None:
        source: dict[str, Any] = {}
        if manifest.source.base_url:
            source["base_url"] = manifest.source.base_url
        source["graph_path"] = manifest.source.graph_path
        if manifest.source.weights_path:
            source["weights_path"] = manifest.source.weights_path
        if manifest.source.checksums:
            source["checksums"] = dict(manifest.source.checksums)
        doc["source"] = source
    if manifest.training_dataset is not None:
        doc["training_dataset"] = {
            "name": manifest.training_dataset.name,
            "version": str(manifest.training_dataset.version),
        }
    for key, value in manifest.attributes.items():
        doc[key] = _plain(value)
    return yamldoc.dump(doc)
