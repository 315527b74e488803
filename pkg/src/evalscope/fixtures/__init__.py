"""Bundled fixture assets: manifests, reference weights, labels, images."""

from __future__ import annotations

from pathlib import Path

_ROOT = Path(__file__).resolve().parent


def fixture_path(*parts: str) -> Path:
    """Absolute path of a bundled fixture, e.g. fixture_path("manifests", "rgb_classifier.yml")."""
    path = _ROOT.joinpath(*parts)
    if not path.exists():
        raise FileNotFoundError(f"no bundled fixture {'/'.join(parts)}")
    return path


def manifest_path(name: str) -> Path:
    return fixture_path("manifests", name if name.endswith(".yml") else f"{name}.yml")


def manifest_text(name: str) -> str:
    return manifest_path(name).read_text()
