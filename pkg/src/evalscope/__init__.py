"""Manifest-driven, reproducible model evaluation runtime.

A model is described once in a declarative manifest (framework version
constraint, containers, ordered pre-processing, outputs, sources); the
runtime provisions deterministic predictor agents, executes the
pre-processing bit-exactly in manifest order, routes constraint-based
evaluation requests to satisfying agents, and aggregates results and
multi-level latency traces.
"""

from .canonjson import dumps as canonical_json
from .manifest import (
    ManifestError,
    ManifestSchemaError,
    ManifestSyntaxError,
    ModelManifest,
    NoContainerError,
    ValidationReport,
    parse_manifest,
    resolve_container,
    serialize_manifest,
    validate_manifest,
)
from .pipeline import (
    ImageBuffer,
    NormalizationParams,
    PipelineError,
    Tensor,
    center_crop,
    convert_color_layout,
    decode_image,
    normalize_and_cast,
    resize_bilinear,
    run_pipeline,
    to_layout,
)
from .postprocess import (
    AccuracyReport,
    DetectionFeature,
    Prediction,
    assemble_detections,
    score_accuracy,
    top_k,
)
from .predictor import (
    AssetCache,
    BackendRegistry,
    BitfileBackend,
    PredictorError,
    ReferenceLinearBackend,
    download_asset,
    load_model,
    predict,
    unload,
)
from .semver import (
    ConstraintError,
    SemVer,
    VersionConstraint,
    constraint_satisfies,
    parse_version,
    parse_version_constraint,
)
from .tracing import LatencySummary, TraceCollector, TraceSpan, compare, summarize

__version__ = "0.1.0"

__all__ = [
    "AccuracyReport",
    "AssetCache",
    "BackendRegistry",
    "BitfileBackend",
    "ConstraintError",
    "DetectionFeature",
    "ImageBuffer",
    "LatencySummary",
    "ManifestError",
    "ManifestSchemaError",
    "ManifestSyntaxError",
    "ModelManifest",
    "NoContainerError",
    "NormalizationParams",
    "PipelineError",
    "Prediction",
    "PredictorError",
    "ReferenceLinearBackend",
    "SemVer",
    "Tensor",
    "TraceCollector",
    "TraceSpan",
    "ValidationReport",
    "VersionConstraint",
    "assemble_detections",
    "canonical_json",
    "center_crop",
    "compare",
    "constraint_satisfies",
    "convert_color_layout",
    "decode_image",
    "download_asset",
    "load_model",
    "normalize_and_cast",
    "parse_manifest",
    "parse_version",
    "parse_version_constraint",
    "predict",
    "resize_bilinear",
    "resolve_container",
    "run_pipeline",
    "score_accuracy",
    "serialize_manifest",
    "summarize",
    "to_layout",
    "top_k",
    "unload",
    "validate_manifest",
]
