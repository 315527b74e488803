"""Process configuration for serve commands.

Config files use the same strict document dialect as manifests. Any key
can be overridden from the environment with the ``EVALSCOPE_`` prefix,
e.g. ``EVALSCOPE_PORT=9000`` overrides ``port``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from . import yamldoc
from .agent import AgentConfig

ENV_PREFIX = "EVALSCOPE_"


class ConfigError(ValueError):
    pass


def _auto(node: yamldoc.Node) -> Any:
    if isinstance(node, yamldoc.Scalar):
        return node.as_auto()
    if isinstance(node, yamldoc.Seq):
        return [_auto(item) for item in node.items]
    return {key: _auto(value) for key, value in node.entries}


def load_config_file(path: str | Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        root = yamldoc.load(text)
    except yamldoc.DocumentError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if not isinstance(root, yamldoc.Map):
        raise ConfigError(f"config {path} must be a mapping")
    return {key: _auto(value) for key, value in root.entries}


def apply_env_overrides(config: dict[str, Any], environ: Mapping[str, str] | None = None) -> dict[str, Any]:
    environ = environ if environ is not None else os.environ
    merged = dict(config)
    for key, raw in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX) :].lower()
        merged[name] = yamldoc.Scalar(raw).as_auto()
    return merged


def load_config(path: str | Path, environ: Mapping[str, str] | None = None) -> dict[str, Any]:
    return apply_env_overrides(load_config_file(path), environ)


@dataclass
class RegistryConfig:
    host: str = "127.0.0.1"
    port: int = 8070
    heartbeat_interval_s: float = 5.0
    ttl_intervals: int = 3
    snapshot_path: str | None = None

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "RegistryConfig":
        return cls(
            host=str(obj.get("host", "127.0.0.1")),
            port=int(obj.get("port", 8070)),
            heartbeat_interval_s=float(obj.get("heartbeat_interval_s", 5.0)),
            ttl_intervals=int(obj.get("ttl_intervals", 3)),
            snapshot_path=obj.get("snapshot_path"),
        )


@dataclass
class OrchestratorConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    registry_url: str = "http://127.0.0.1:8070"
    store_dir: str = "evalstore"
    manifests: tuple[str, ...] = ()
    datasets: dict[str, str] = field(default_factory=dict)
    dispatch_timeout_s: float = 60.0

    @classmethod
    def from_dict(cls, obj: dict[str, Any], base_dir: Path | None = None) -> "OrchestratorConfig":
        manifests = tuple(str(m) for m in obj.get("manifests", []))
        datasets = {str(k): str(v) for k, v in (obj.get("datasets") or {}).items()}
        if base_dir is not None:
            manifests = tuple(str(_anchor(base_dir, m)) for m in manifests)
            datasets = {k: str(_anchor(base_dir, v)) for k, v in datasets.items()}
            store_dir = str(_anchor(base_dir, str(obj.get("store_dir", "evalstore"))))
        else:
            store_dir = str(obj.get("store_dir", "evalstore"))
        return cls(
            host=str(obj.get("host", "127.0.0.1")),
            port=int(obj.get("port", 8080)),
            registry_url=str(obj.get("registry_url", "http://127.0.0.1:8070")),
            store_dir=store_dir,
            manifests=manifests,
            datasets=datasets,
            dispatch_timeout_s=float(obj.get("dispatch_timeout_s", 60.0)),
        )


def _anchor(base: Path, path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else base / p


def agent_config_from_dict(obj: dict[str, Any], base_dir: Path | None = None) -> AgentConfig:
    if not obj.get("agent_id"):
        raise ConfigError("agent config needs agent_id")
    manifests = [str(m) for m in obj.get("manifests", [])]
    cache_dir = obj.get("cache_dir")
    if base_dir is not None:
        manifests = [str(_anchor(base_dir, m)) for m in manifests]
        if cache_dir:
            cache_dir = str(_anchor(base_dir, str(cache_dir)))
    return AgentConfig(
        agent_id=str(obj["agent_id"]),
        host=str(obj.get("host", "127.0.0.1")),
        port=int(obj.get("port", 0)),
        registry_url=obj.get("registry_url"),
        architecture=str(obj.get("architecture", "amd64")),
        device_classes=tuple(obj.get("device_classes", ["cpu"])),
        interconnect=obj.get("interconnect"),
        framework_name=str(obj.get("framework_name", "reference")),
        framework_version=str(obj.get("framework_version", "1.0.0")),
        backend=str(obj.get("backend", "reference-linear")),
        manifests=tuple(manifests),
        cache_dir=cache_dir,
        heartbeat_interval_s=float(obj.get("heartbeat_interval_s", 5.0)),
        session_queue_depth=int(obj.get("session_queue_depth", 1)),
        attributes={str(k): str(v) for k, v in (obj.get("attributes") or {}).items()},
    )
