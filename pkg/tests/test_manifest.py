from __future__ import annotations

import pytest

from evalscope.fixtures import manifest_text
from evalscope.manifest import (
    CropStep,
    DecodeStep,
    ManifestSchemaError,
    ManifestSyntaxError,
    MeanStep,
    NoContainerError,
    RescaleStep,
    ResizeStep,
    parse_manifest,
    resolve_container,
    serialize_manifest,
    validate_manifest,
)
from evalscope.semver import SemVer

MINIMAL = """\
name: tiny
version: 1.0.0
task: classification
framework:
  name: reference
  version: ^1.x
inputs:
  - type: image
    element_type: uint8
outputs:
  - type: probability
    layer_name: prob
"""


def test_classification_manifest_parses_with_ordered_steps() -> None:
    manifest = parse_manifest(manifest_text("inception_v3"))
    assert manifest.name == "Inception-v3"
    assert manifest.version == SemVer(1, 0, 0)
    assert manifest.task == "classification"
    kinds = [step.kind for step in manifest.inputs[0].processing]
    assert kinds == ["decode", "crop", "resize", "mean", "rescale"]
    crop = manifest.inputs[0].processing[1]
    assert isinstance(crop, CropStep) and crop.percentage == 87.5
    resize = manifest.inputs[0].processing[2]
    assert isinstance(resize, ResizeStep) and resize.dimensions == (3, 299, 299)
    assert resize.keep_aspect_ratio is True
    mean = manifest.inputs[0].processing[3]
    assert isinstance(mean, MeanStep) and mean.values == (127.5, 127.5, 127.5)
    assert isinstance(manifest.inputs[0].processing[4], RescaleStep)
    assert manifest.envvars == (("TF_ENABLE_WINOGRAD_NONFUSED", "0"),)


def test_detection_manifest_has_three_outputs_and_no_processing() -> None:
    manifest = parse_manifest(manifest_text("ssd_mobilenet_v1_coco"))
    assert manifest.task == "object_detection"
    assert [o.type for o in manifest.outputs] == ["box", "probability", "class"]
    assert manifest.inputs[0].processing == ()
    # input-level layout hints are preserved, not dropped
    assert manifest.inputs[0].attributes["layout"] == "HWC"
    assert manifest.inputs[0].attributes["color_layout"] == "RGB"
    assert manifest.version == SemVer(1, 0, 0)  # "1.0" normalized


def test_segmentation_manifest_numeric_layers_and_mask() -> None:
    manifest = parse_manifest(manifest_text("mask_rcnn_resnet50_v2_atrous_coco"))
    assert manifest.task == "instance_segmentation"
    assert [o.type for o in manifest.outputs] == ["box", "probability", "class", "mask"]
    assert [o.layer_name for o in manifest.outputs[:3]] == ["0", "1", "2"]
    assert manifest.source.base_url is not None
    assert manifest.source.resolved_weights_url().endswith("model-0000.params")


def test_empty_inputs_is_schema_error_at_path() -> None:
    text = MINIMAL.replace("inputs:\n  - type: image\n    element_type: uint8\n", "inputs: []\n")
    with pytest.raises(ManifestSchemaError) as exc:
        parse_manifest(text)
    assert exc.value.path == "inputs"


def test_unsupported_task_rejected() -> None:
    with pytest.raises(ManifestSchemaError) as exc:
        parse_manifest(MINIMAL.replace("task: classification", "task: translation"))
    assert "unsupported task" in exc.value.reason


def test_unsupported_step_kind_rejected() -> None:
    text = MINIMAL.replace(
        "    element_type: uint8\n",
        "    element_type: uint8\n    processing:\n      sharpen:\n        amount: 1\n",
    )
    with pytest.raises(ManifestSchemaError) as exc:
        parse_manifest(text)
    assert "unsupported processing step" in exc.value.reason


def test_syntax_error_has_line_column() -> None:
    with pytest.raises(ManifestSyntaxError) as exc:
        parse_manifest("name: x\nname: y\n")
    assert exc.value.line == 2


def test_round_trip_equality_and_stability() -> None:
    for name in ("inception_v3", "ssd_mobilenet_v1_coco", "mask_rcnn_resnet50_v2_atrous_coco"):
        manifest = parse_manifest(manifest_text(name))
        text = serialize_manifest(manifest)
        reparsed = parse_manifest(text)
        assert reparsed == manifest, name
        assert serialize_manifest(reparsed) == text, name


def test_validation_clean_for_reference_manifests() -> None:
    report = validate_manifest(parse_manifest(manifest_text("inception_v3")))
    assert report.ok()
    assert report.errors == []


def test_validation_crop_zero_is_error_at_path() -> None:
    text = manifest_text("inception_v3").replace("percentage: 87.5", "percentage: 0")
    report = validate_manifest(parse_manifest(text))
    assert not report.ok()
    assert any(
        v.path == "inputs[0].processing.crop.percentage" and v.severity == "error"
        for v in report.violations
    )


def test_validation_missing_features_url_is_warning() -> None:
    report = validate_manifest(parse_manifest(MINIMAL))
    assert report.ok()
    assert any(
        "features_url" in v.path and v.severity == "warning" for v in report.violations
    )


def test_validation_task_output_mismatch() -> None:
    text = MINIMAL.replace("task: classification", "task: object_detection")
    report = validate_manifest(parse_manifest(text))
    assert not report.ok()


def test_validation_is_pure() -> None:
    manifest = parse_manifest(manifest_text("inception_v3"))
    assert validate_manifest(manifest).to_json_obj() == validate_manifest(manifest).to_json_obj()


def test_resolve_container_examples() -> None:
    manifest = parse_manifest(manifest_text("inception_v3"))
    assert resolve_container(manifest, "amd64", "gpu") == "mlcn/tensorflow:1-13-0_amd64-gpu"
    assert resolve_container(manifest, "ppc64le", "cpu") == "mlcn/tensorflow:1-13-0_ppc64le-cpu"
    with pytest.raises(NoContainerError) as exc:
        resolve_container(manifest, "arm64", "cpu")
    assert ("amd64", "gpu") in exc.value.available


def test_unknown_top_level_keys_preserved_and_warned() -> None:
    manifest = parse_manifest(manifest_text("ssd_mobilenet_v1_coco"))
    assert manifest.attributes["attributes"]["training_dataset"] == "COCO"
    assert "references" in manifest.attributes
    report = validate_manifest(manifest)
    assert report.ok()
    assert any(v.severity == "warning" for v in report.violations)


def test_both_license_spellings_accepted() -> None:
    brit = parse_manifest(manifest_text("inception_v3"))
    us = parse_manifest(manifest_text("ssd_mobilenet_v1_coco"))
    assert brit.license == "MIT"
    assert us.license == "Apache License, Version 2.0"


def test_decode_accepts_int8_and_uint8() -> None:
    manifest = parse_manifest(manifest_text("inception_v3"))
    decode = manifest.inputs[0].processing[0]
    assert isinstance(decode, DecodeStep)
    assert decode.element_type == "int8"  # recorded as written, stored as bytes
