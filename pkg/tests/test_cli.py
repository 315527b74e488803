from __future__ import annotations

import json
import subprocess
import sys

import pytest

from evalscope.cli import main
from evalscope.fixtures import fixture_path, manifest_path


def run_cli(capsys, *argv: str) -> tuple[int, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out


def test_validate_clean_manifest_exit_zero(capsys) -> None:
    code, out = run_cli(capsys, "manifest", "validate", str(manifest_path("inception_v3")))
    assert code == 0
    report = json.loads(out)
    assert report["ok"] is True
    assert report["violations"] == []


def test_validate_bad_manifest_exit_one_with_path(capsys, tmp_path) -> None:
    text = manifest_path("inception_v3").read_text().replace("percentage: 87.5", "percentage: 0")
    bad = tmp_path / "bad.yml"
    bad.write_text(text)
    code, out = run_cli(capsys, "manifest", "validate", str(bad))
    assert code == 1
    report = json.loads(out)
    assert any("crop.percentage" in v["path"] for v in report["violations"])


def test_validate_missing_file_exit_two(capsys) -> None:
    code, _ = run_cli(capsys, "manifest", "validate", "/nonexistent/manifest.yml")
    assert code == 2


def test_evaluate_red_fixture_top1(capsys) -> None:
    code, out = run_cli(
        capsys,
        "evaluate",
        "--manifest", str(manifest_path("rgb_classifier")),
        "--input", str(fixture_path("images", "red_4x5.ppm")),
    )
    assert code == 0
    result = json.loads(out)
    assert result["outputs"][0]["predictions"][0]["label"] == "red-dominant"


def test_evaluate_override_flips_top1(capsys) -> None:
    code, out = run_cli(
        capsys,
        "evaluate",
        "--manifest", str(manifest_path("rgb_classifier")),
        "--input", str(fixture_path("images", "red_4x5.ppm")),
        "--override", "decode.color_layout=BGR",
    )
    assert code == 0
    result = json.loads(out)
    assert result["outputs"][0]["predictions"][0]["label"] == "blue-dominant"
    assert result["provenance"][0]["overrides"] == {"decode": {"color_layout": "BGR"}}


def test_evaluate_trace_level_embeds_trace(capsys) -> None:
    code, out = run_cli(
        capsys,
        "evaluate",
        "--manifest", str(manifest_path("rgb_classifier")),
        "--input", str(fixture_path("images", "red_4x5.ppm")),
        "--trace-level", "layer",
    )
    assert code == 0
    result = json.loads(out)
    assert {span["level"] for span in result["trace"]} >= {"application", "model", "framework", "layer"}


def test_evaluate_bad_override_exit_two(capsys) -> None:
    code, _ = run_cli(
        capsys,
        "evaluate",
        "--manifest", str(manifest_path("rgb_classifier")),
        "--input", str(fixture_path("images", "red_4x5.ppm")),
        "--override", "no-equals-sign",
    )
    assert code == 2


def test_pitfall_demo_normalization_order_golden(capsys) -> None:
    code, out = run_cli(capsys, "pitfall", "demo", "normalization-order")
    assert code == 0
    result = json.loads(out)
    assert result["max_abs_diff"] == 1.0
    assert result["n_bytes_differing"] == 255


def test_pitfall_demo_color_layout(capsys) -> None:
    code, out = run_cli(capsys, "pitfall", "demo", "color-layout")
    assert code == 0
    result = json.loads(out)
    assert result["flipped"] is True
    assert result["baseline_top1"] == "red-dominant"
    assert result["bgr_top1"] == "blue-dominant"


def test_pitfall_demo_crop(capsys) -> None:
    code, out = run_cli(capsys, "pitfall", "demo", "crop")
    assert code == 0
    result = json.loads(out)
    assert result["n_images"] == 20
    assert result["top1_with_crop"] == "1.0000"
    assert result["n_top1_changed"] >= 1


def test_pitfall_demo_decode(capsys) -> None:
    code, out = run_cli(capsys, "pitfall", "demo", "decode")
    assert code == 0
    result = json.loads(out)
    assert result["n_pixels_differing"] > 0


def test_pitfall_demo_data_layout(capsys) -> None:
    code, out = run_cli(capsys, "pitfall", "demo", "data-layout")
    assert code == 0
    result = json.loads(out)
    assert result["changed"] is True


def test_demo_output_is_stable(capsys) -> None:
    code1, out1 = run_cli(capsys, "pitfall", "demo", "normalization-order")
    code2, out2 = run_cli(capsys, "pitfall", "demo", "normalization-order")
    assert out1 == out2


def test_serve_bad_config_exit_two(tmp_path) -> None:
    bad = tmp_path / "broken.yml"
    bad.write_text("a: 1\na: 2\n")
    proc = subprocess.run(
        [sys.executable, "-m", "evalscope.cli", "serve", "registry", "--config", str(bad)],
        capture_output=True, text=True, timeout=30,
    )
    assert proc.returncode == 2


def test_usage_error_exit_two() -> None:
    proc = subprocess.run(
        [sys.executable, "-m", "evalscope.cli", "no-such-command"],
        capture_output=True, text=True, timeout=30,
    )
    assert proc.returncode == 2
