from __future__ import annotations

import pytest

from evalscope.fixtures import fixture_path, manifest_path
from evalscope.manifest import parse_manifest, resolve_asset_paths
from evalscope.predictor import AssetCache, BackendRegistry, ReferenceLinearBackend

_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(name): marks a test as one acceptance criterion"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        _ACCEPTANCE_RESULTS.append((marker.args[0], report.outcome.upper()))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{outcome}] {name}")


@pytest.fixture()
def asset_cache(tmp_path):
    return AssetCache(tmp_path / "assets")


@pytest.fixture()
def reference_registry():
    registry = BackendRegistry()
    registry.register("reference", ReferenceLinearBackend())
    registry.register("TensorFlow", ReferenceLinearBackend())
    return registry


def load_fixture_manifest(name: str):
    path = manifest_path(name)
    return resolve_asset_paths(parse_manifest(path.read_text()), path.parent)


@pytest.fixture()
def rgb_manifest():
    return load_fixture_manifest("rgb_classifier")


@pytest.fixture()
def border_manifest():
    return load_fixture_manifest("border_classifier")


@pytest.fixture()
def color_labels():
    from evalscope.postprocess import load_labels

    return load_labels(fixture_path("labels", "synset_colors.txt").read_text())
