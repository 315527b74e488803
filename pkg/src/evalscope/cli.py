"""Operator command line.

Subcommands: ``manifest validate``, ``evaluate`` (local in-process run),
``serve registry|orchestrator|agent``, and ``pitfall demo``. All JSON
output is canonical (sorted keys, stable float text) so runs can be
compared byte for byte. Exit codes: 0 ok, 1 domain failure, 2 usage or
config error.
"""

from __future__ import annotations

import argparse
import signal
import sys
import threading
from pathlib import Path
from typing import Any

import numpy as np

from . import canonjson, yamldoc
from .agent import AgentService, run_local_evaluation
from .config import (
    ConfigError,
    OrchestratorConfig,
    RegistryConfig,
    agent_config_from_dict,
    load_config,
)
from .decoders import decode_rgb
from .evalstore import EvalStore
from .fixtures import fixture_path, manifest_path
from .httpjson import JsonHttpServer
from .manifest import (
    ManifestError,
    ManifestSyntaxError,
    parse_manifest,
    validate_manifest,
)
from .orchestrator import Orchestrator, build_orchestrator_routes
from .pipeline import (
    ImageBuffer,
    NormalizationParams,
    PipelineError,
    normalize_and_cast,
    run_pipeline,
    to_layout,
)
from .postprocess import load_labels, top_k
from .predictor import PredictorError, predict
from .registry import Registry, RegistryClient, build_registry_routes
from .tracing import TRACE_LEVELS

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

PITFALLS = ("color-layout", "data-layout", "crop", "normalization-order", "decode")


def _print_json(obj: Any) -> None:
    sys.stdout.write(canonjson.dumps(obj) + "\n")


# ---------------------------------------------------------------------------
# manifest validate


def cmd_manifest_validate(args: argparse.Namespace) -> int:
    path = Path(args.file)
    if not path.exists():
        print(f"error: no such file: {path}", file=sys.stderr)
        return EXIT_USAGE
    try:
        manifest = parse_manifest(path.read_text())
    except (ManifestSyntaxError, ManifestError) as exc:
        _print_json({"ok": False, "violations": [], "parse_error": str(exc)})
        return EXIT_FAILURE
    report = validate_manifest(manifest)
    _print_json(report.to_json_obj())
    return EXIT_OK if report.ok() else EXIT_FAILURE


# ---------------------------------------------------------------------------
# evaluate


def _parse_override(text: str) -> tuple[str, str, Any]:
    key, sep, value = text.partition("=")
    if not sep or "." not in key:
        raise ValueError(f"override must look like step.param=value, got {text!r}")
    step, _, param = key.partition(".")
    return step, param, yamldoc.Scalar(value).as_auto()


def cmd_evaluate(args: argparse.Namespace) -> int:
    manifest_file = Path(args.manifest)
    input_file = Path(args.input)
    for path in (manifest_file, input_file):
        if not path.exists():
            print(f"error: no such file: {path}", file=sys.stderr)
            return EXIT_USAGE
    overrides: dict[str, dict[str, Any]] = {}
    try:
        for item in args.override or []:
            step, param, value = _parse_override(item)
            overrides.setdefault(step, {})[param] = value
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        manifest = parse_manifest(manifest_file.read_text())
    except (ManifestSyntaxError, ManifestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    try:
        result = run_local_evaluation(
            manifest,
            [(input_file.name, input_file.read_bytes())],
            overrides=overrides,
            trace_level=args.trace_level,
            base_dir=manifest_file.parent,
            device=args.device,
            jpeg_decoder=args.jpeg_decoder,
        )
    except (PipelineError, PredictorError, ManifestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    _print_json(result)
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve


def cmd_serve(args: argparse.Namespace) -> int:
    config_path = Path(args.config)
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    base_dir = config_path.resolve().parent
    stop = threading.Event()

    def handle_signal(signum, frame) -> None:
        stop.set()

    signal.signal(signal.SIGTERM, handle_signal)
    signal.signal(signal.SIGINT, handle_signal)

    try:
        if args.role == "registry":
            rc = RegistryConfig.from_dict(config)
            registry = Registry(rc.heartbeat_interval_s, rc.ttl_intervals)
            server = JsonHttpServer(rc.host, rc.port, build_registry_routes(registry))
            server.start()
            print(f"registry listening on {rc.host}:{server.port}", flush=True)
            stop.wait()
            if rc.snapshot_path:
                registry.save_snapshot(rc.snapshot_path)
            server.shutdown()
        elif args.role == "orchestrator":
            oc = OrchestratorConfig.from_dict(config, base_dir)
            store_dir = Path(oc.store_dir)
            store_dir.mkdir(parents=True, exist_ok=True)
            orchestrator = Orchestrator(
                RegistryClient(oc.registry_url),
                EvalStore(store_dir),
                manifest_paths=list(oc.manifests),
                datasets=oc.datasets,
                dispatch_timeout_s=oc.dispatch_timeout_s,
                journal_path=store_dir / "journal.jsonl",
            )
            server = JsonHttpServer(oc.host, oc.port, build_orchestrator_routes(orchestrator))
            server.start()
            print(f"orchestrator listening on {oc.host}:{server.port}", flush=True)
            stop.wait()
            orchestrator.shutdown()
            server.shutdown()
        elif args.role == "agent":
            ac = agent_config_from_dict(config, base_dir)
            service = AgentService(ac)
            service.start()
            print(
                f"agent {ac.agent_id} listening on {ac.host}:{service.server.port}", flush=True
            )
            stop.wait()
            service.stop()
        else:  # pragma: no cover - argparse restricts choices
            return EXIT_USAGE
    except (ConfigError, ManifestError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


# ---------------------------------------------------------------------------
# pitfall demos


def _demo_eval(manifest_name: str, image_name: str, overrides=None, misfeed_layout=None):
    from .predictor import AssetCache, BackendRegistry, ReferenceLinearBackend, load_model

    manifest_file = manifest_path(manifest_name)
    manifest = parse_manifest(manifest_file.read_text())
    from .manifest import resolve_asset_paths

    manifest = resolve_asset_paths(manifest, manifest_file.parent)
    registry = BackendRegistry()
    registry.register(manifest.framework.name, ReferenceLinearBackend())
    session = load_model(manifest, registry=registry)
    labels = load_labels(
        fixture_path("labels", "synset_colors.txt").read_text()
    )
    raw = fixture_path("images", image_name).read_bytes()
    tensor, _ = run_pipeline(manifest.inputs[0], raw, overrides=overrides)
    if misfeed_layout:
        tensor = to_layout(tensor, misfeed_layout)
    probs = predict(session, tensor)[session.output_layer("probability")]
    ranked = top_k(probs, 3, labels)[0]
    return [p.to_json_obj() for p in ranked]


def demo_color_layout() -> dict[str, Any]:
    baseline = _demo_eval("rgb_classifier", "red_4x5.ppm")
    flipped = _demo_eval(
        "rgb_classifier", "red_4x5.ppm", overrides={"decode": {"color_layout": "BGR"}}
    )
    return {
        "pitfall": "color-layout",
        "input": "red_4x5.ppm",
        "baseline_top1": baseline[0]["label"],
        "bgr_top1": flipped[0]["label"],
        "flipped": baseline[0]["label"] != flipped[0]["label"],
        "baseline": baseline,
        "bgr": flipped,
    }


def demo_data_layout() -> dict[str, Any]:
    baseline = _demo_eval("rgb_classifier", "blue_4x5.ppm")
    misfed = _demo_eval("rgb_classifier", "blue_4x5.ppm", misfeed_layout="NCHW")
    return {
        "pitfall": "data-layout",
        "input": "blue_4x5.ppm",
        "baseline_top1": baseline[0]["label"],
        "misfed_top1": misfed[0]["label"],
        "changed": baseline[0]["label"] != misfed[0]["label"],
        "baseline": baseline,
        "misfed": misfed,
    }


def demo_crop() -> dict[str, Any]:
    from .datasets import build_border_dataset
    from .decoders import write_ppm
    from .manifest import resolve_asset_paths
    from .predictor import BackendRegistry, ReferenceLinearBackend, load_model

    manifest_file = manifest_path("border_classifier")
    manifest = resolve_asset_paths(parse_manifest(manifest_file.read_text()), manifest_file.parent)
    registry = BackendRegistry()
    registry.register(manifest.framework.name, ReferenceLinearBackend())
    session = load_model(manifest, registry=registry)
    labels = load_labels(fixture_path("labels", "synset_colors.txt").read_text())

    differing = []
    correct_cropped = correct_uncropped = 0
    images = build_border_dataset()
    for image in images:
        raw = write_ppm(image.pixels)
        t_crop, _ = run_pipeline(manifest.inputs[0], raw)
        t_nocrop, _ = run_pipeline(
            manifest.inputs[0], raw, overrides={"crop": {"percentage": 100.0}}
        )
        top_crop = top_k(predict(session, t_crop)[session.output_layer("probability")], 3, labels)[0][0]
        top_nocrop = top_k(predict(session, t_nocrop)[session.output_layer("probability")], 3, labels)[0][0]
        correct_cropped += top_crop.label_index == image.label_index
        correct_uncropped += top_nocrop.label_index == image.label_index
        if top_crop.label_index != top_nocrop.label_index:
            differing.append(
                {"input": image.name, "cropped_top1": top_crop.label, "uncropped_top1": top_nocrop.label}
            )
    n = len(images)
    return {
        "pitfall": "crop",
        "n_images": n,
        "top1_with_crop": canonjson.format_fraction(correct_cropped / n),
        "top1_without_crop": canonjson.format_fraction(correct_uncropped / n),
        "n_top1_changed": len(differing),
        "changed": differing,
    }


def demo_normalization_order() -> dict[str, Any]:
    values = np.arange(256, dtype=np.uint8).reshape(1, 256, 1).repeat(3, axis=2)
    img = ImageBuffer.from_array(values, "RGB")
    a = normalize_and_cast(img, NormalizationParams((127.5,) * 3, 127.5, "convert_then_normalize"))
    b = normalize_and_cast(
        img, NormalizationParams((127.5,) * 3, 127.5, "normalize_in_bytes_then_convert")
    )
    diff = np.abs(a.data - b.data)[0, :, 0]
    argmax = int(diff.argmax())
    return {
        "pitfall": "normalization-order",
        "mean": 127.5,
        "rescale": 127.5,
        "max_abs_diff": float(diff.max()),
        "argmax_byte": argmax,
        "convert_then_normalize_at_argmax": float(a.data[0, argmax, 0]),
        "normalize_in_bytes_then_convert_at_argmax": float(b.data[0, argmax, 0]),
        "n_bytes_differing": int((diff > 0).sum()),
    }


def demo_decode() -> dict[str, Any]:
    raw = fixture_path("images", "chroma_edges.jpg").read_bytes()
    ours, info_a = decode_rgb(raw, jpeg_decoder="builtin")
    pil, info_b = decode_rgb(raw, jpeg_decoder="pillow")
    diff = np.abs(ours.astype(int) - pil.astype(int))
    per_pixel = diff.sum(axis=2)
    return {
        "pitfall": "decode",
        "input": "chroma_edges.jpg",
        "decoder_a": info_a.to_json_obj(),
        "decoder_b": info_b.to_json_obj(),
        "n_pixels": int(per_pixel.size),
        "n_pixels_differing": int((per_pixel > 0).sum()),
        "max_channel_diff": int(diff.max()),
    }


def cmd_pitfall_demo(args: argparse.Namespace) -> int:
    demos = {
        "color-layout": demo_color_layout,
        "data-layout": demo_data_layout,
        "crop": demo_crop,
        "normalization-order": demo_normalization_order,
        "decode": demo_decode,
    }
    result = demos[args.name]()
    _print_json(result)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evalscope")
    sub = parser.add_subparsers(dest="command", required=True)

    manifest_cmd = sub.add_parser("manifest", help="manifest tools")
    manifest_sub = manifest_cmd.add_subparsers(dest="manifest_command", required=True)
    validate = manifest_sub.add_parser("validate", help="validate a manifest file")
    validate.add_argument("file")
    validate.set_defaults(func=cmd_manifest_validate)

    evaluate = sub.add_parser("evaluate", help="run a local evaluation in-process")
    evaluate.add_argument("--manifest", required=True)
    evaluate.add_argument("--input", required=True)
    evaluate.add_argument(
        "--override", action="append", metavar="STEP.PARAM=VALUE",
        help="override a processing step parameter (repeatable)",
    )
    evaluate.add_argument("--trace-level", choices=TRACE_LEVELS, default="none")
    evaluate.add_argument("--device", default="cpu")
    evaluate.add_argument("--jpeg-decoder", default=None)
    evaluate.set_defaults(func=cmd_evaluate)

    serve = sub.add_parser("serve", help="run a long-lived service process")
    serve.add_argument("role", choices=("registry", "orchestrator", "agent"))
    serve.add_argument("--config", required=True)
    serve.set_defaults(func=cmd_serve)

    pitfall = sub.add_parser("pitfall", help="pre-processing pitfall demos")
    pitfall_sub = pitfall.add_subparsers(dest="pitfall_command", required=True)
    demo = pitfall_sub.add_parser("demo", help="reproduce one pitfall deterministically")
    demo.add_argument("name", choices=PITFALLS)
    demo.set_defaults(func=cmd_pitfall_demo)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
