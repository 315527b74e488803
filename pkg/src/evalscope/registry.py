"""Capability registry: agents publish what they run; queries filter by constraint.

Liveness is heartbeat-based: a record expires after ``ttl_intervals``
missed heartbeats and disappears from query results; an expired agent
must re-publish (its heartbeat is rejected). Registry state is in-memory
and rebuildable, since every agent re-publishes on startup; an optional
snapshot can be written on shutdown for inspection.
"""

from __future__ import annotations

import json
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from . import canonjson
from .httpjson import HttpError, Route, delete_json, get_json, post_json, route
from .semver import ConstraintError, SemVer, constraint_satisfies, parse_version, parse_version_constraint


class RegistryError(ValueError):
    pass


class UnknownAgentError(RegistryError):
    pass


_ADDRESS_RE = re.compile(r"^[\w.\-\[\]]+:\d+$")


@dataclass(frozen=True)
class HardwareSpec:
    architecture: str
    device_classes: tuple[str, ...] = ("cpu",)
    interconnect: str | None = None
    attributes: dict[str, str] = field(default_factory=dict)

    def to_json_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "architecture": self.architecture,
            "device_classes": list(self.device_classes),
            "attributes": dict(self.attributes),
        }
        if self.interconnect:
            obj["interconnect"] = self.interconnect
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict[str, Any]) -> "HardwareSpec":
        if not obj.get("architecture"):
            raise RegistryError("hardware.architecture must be non-empty")
        return cls(
            architecture=str(obj["architecture"]),
            device_classes=tuple(obj.get("device_classes", ("cpu",))),
            interconnect=obj.get("interconnect"),
            attributes={str(k): str(v) for k, v in obj.get("attributes", {}).items()},
        )


@dataclass(frozen=True)
class AgentRecord:
    agent_id: str
    address: str
    hardware: HardwareSpec
    frameworks: tuple[tuple[str, SemVer], ...]
    models: tuple[tuple[str, SemVer], ...]
    last_heartbeat_unix: float = 0.0

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "agent_id": self.agent_id,
            "address": self.address,
            "hardware": self.hardware.to_json_obj(),
            "frameworks": [{"name": n, "version": str(v)} for n, v in self.frameworks],
            "models": [{"name": n, "version": str(v)} for n, v in self.models],
            "last_heartbeat_unix": self.last_heartbeat_unix,
        }

    @classmethod
    def from_json_obj(cls, obj: dict[str, Any]) -> "AgentRecord":
        if not obj.get("agent_id"):
            raise RegistryError("agent_id must be non-empty")
        address = str(obj.get("address", ""))
        if not _ADDRESS_RE.match(address):
            raise RegistryError(f"malformed address {address!r} (expected host:port)")
        try:
            frameworks = tuple(
                (str(f["name"]), parse_version(str(f["version"])))
                for f in obj.get("frameworks", [])
            )
            models = tuple(
                (str(m["name"]), parse_version(str(m["version"])))
                for m in obj.get("models", [])
            )
        except (KeyError, ConstraintError) as exc:
            raise RegistryError(f"malformed record: {exc}") from exc
        return cls(
            agent_id=str(obj["agent_id"]),
            address=address,
            hardware=HardwareSpec.from_json_obj(obj.get("hardware", {})),
            frameworks=frameworks,
            models=models,
            last_heartbeat_unix=float(obj.get("last_heartbeat_unix", 0.0)),
        )


@dataclass(frozen=True)
class QueryFilter:
    model: str | None = None
    model_constraint: str | None = None
    framework: str | None = None
    framework_constraint: str | None = None
    arch: str | None = None
    device: str | None = None
    interconnect: str | None = None

    def parsed_constraints(self) -> None:
        if self.model_constraint:
            parse_version_constraint(self.model_constraint)
        if self.framework_constraint:
            parse_version_constraint(self.framework_constraint)


def _versions_match(
    pairs: tuple[tuple[str, SemVer], ...], name: str | None, constraint: str | None
) -> bool:
    for pair_name, version in pairs:
        if name is not None and pair_name != name:
            continue
        if constraint is not None and not constraint_satisfies(constraint, version):
            continue
        return True
    return False


def record_matches(record: AgentRecord, query: QueryFilter) -> bool:
    """Pure predicate used by the registry and by oracle cross-checks."""
    if query.model or query.model_constraint:
        if not _versions_match(record.models, query.model or None, query.model_constraint or None):
            return False
    if query.framework or query.framework_constraint:
        if not _versions_match(
            record.frameworks, query.framework or None, query.framework_constraint or None
        ):
            return False
    if query.arch and record.hardware.architecture != query.arch:
        return False
    if query.device and query.device not in record.hardware.device_classes:
        return False
    if query.interconnect and record.hardware.interconnect != query.interconnect:
        return False
    return True


class Registry:
    """In-memory agent registry with heartbeat-based expiry."""

    def __init__(
        self,
        heartbeat_interval: float = 5.0,
        ttl_intervals: int = 3,
        clock: Callable[[], float] = time.monotonic,
    ) -> None:
        self.heartbeat_interval = heartbeat_interval
        self.ttl_intervals = ttl_intervals
        self._clock = clock
        self._lock = threading.Lock()
        self._records: dict[str, AgentRecord] = {}
        self._stamps: dict[str, float] = {}

    @property
    def ttl(self) -> float:
        return self.heartbeat_interval * self.ttl_intervals

    def _expired(self, agent_id: str, now: float) -> bool:
        return now - self._stamps[agent_id] > self.ttl

    def _purge(self, now: float) -> None:
        for agent_id in [a for a in self._stamps if self._expired(a, now)]:
            del self._records[agent_id]
            del self._stamps[agent_id]

    def publish(self, record: AgentRecord | dict[str, Any]) -> AgentRecord:
        """Insert or replace (same agent_id) a record; visible immediately."""
        if isinstance(record, dict):
            record = AgentRecord.from_json_obj(record)
        now = self._clock()
        stamped = AgentRecord(
            agent_id=record.agent_id,
            address=record.address,
            hardware=record.hardware,
            frameworks=record.frameworks,
            models=record.models,
            last_heartbeat_unix=time.time(),
        )
        with self._lock:
            self._purge(now)
            self._records[record.agent_id] = stamped
            self._stamps[record.agent_id] = now
        return stamped

    def heartbeat(self, agent_id: str) -> None:
        now = self._clock()
        with self._lock:
            self._purge(now)
            if agent_id not in self._records:
                raise UnknownAgentError(
                    f"unknown agent {agent_id!r}; expired or never published (re-publish required)"
                )
            self._stamps[agent_id] = now
            old = self._records[agent_id]
            self._records[agent_id] = AgentRecord(
                agent_id=old.agent_id,
                address=old.address,
                hardware=old.hardware,
                frameworks=old.frameworks,
                models=old.models,
                last_heartbeat_unix=time.time(),
            )

    def deregister(self, agent_id: str) -> None:
        with self._lock:
            if agent_id not in self._records:
                raise UnknownAgentError(f"unknown agent {agent_id!r}")
            del self._records[agent_id]
            del self._stamps[agent_id]

    def query(self, query: QueryFilter | None = None) -> list[AgentRecord]:
        """Live records satisfying every constraint, most recent heartbeat first."""
        query = query or QueryFilter()
        query.parsed_constraints()
        now = self._clock()
        with self._lock:
            self._purge(now)
            records = [
                (self._stamps[r.agent_id], r)
                for r in self._records.values()
                if record_matches(r, query)
            ]
        records.sort(key=lambda pair: (-pair[0], pair[1].agent_id))
        return [r for _, r in records]

    def save_snapshot(self, path: str | Path) -> None:
        payload = [record.to_json_obj() for record in self.query()]
        Path(path).write_text(canonjson.dumps(payload) + "\n")


# ---------------------------------------------------------------------------
# HTTP wiring


def build_registry_routes(registry: Registry) -> list[Route]:
    def publish(request) -> tuple[int, Any]:
        try:
            record = registry.publish(request.body or {})
        except RegistryError as exc:
            raise HttpError(400, str(exc))
        return 200, {"status": "ok", "agent_id": record.agent_id}

    def heartbeat(request) -> tuple[int, Any]:
        try:
            registry.heartbeat(request.params["agent_id"])
        except UnknownAgentError as exc:
            raise HttpError(404, str(exc))
        return 200, {"status": "ok"}

    def deregister(request) -> tuple[int, Any]:
        try:
            registry.deregister(request.params["agent_id"])
        except UnknownAgentError as exc:
            raise HttpError(404, str(exc))
        return 200, {"status": "ok"}

    def query(request) -> tuple[int, Any]:
        q = request.query
        try:
            records = registry.query(
                QueryFilter(
                    model=q.get("model"),
                    model_constraint=q.get("model_constraint"),
                    framework=q.get("framework"),
                    framework_constraint=q.get("framework_constraint"),
                    arch=q.get("arch"),
                    device=q.get("device"),
                    interconnect=q.get("interconnect"),
                )
            )
        except ConstraintError as exc:
            raise HttpError(400, str(exc))
        return 200, [record.to_json_obj() for record in records]

    def health(request) -> tuple[int, Any]:
        return 200, {"status": "ok"}

    return [
        route("POST", r"/agents/(?P<agent_id>[^/]+)/heartbeat", heartbeat),
        route("POST", r"/agents", publish),
        route("DELETE", r"/agents/(?P<agent_id>[^/]+)", deregister),
        route("GET", r"/agents", query),
        route("GET", r"/healthz", health),
    ]


class RegistryClient:
    """HTTP client mirroring the Registry interface."""

    def __init__(self, base_url: str, timeout: float = 10.0) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def publish(self, record: AgentRecord | dict[str, Any]) -> None:
        obj = record.to_json_obj() if isinstance(record, AgentRecord) else record
        status, body = post_json(f"{self.base_url}/agents", obj, self.timeout)
        if status != 200:
            raise RegistryError(f"publish failed ({status}): {body}")

    def heartbeat(self, agent_id: str) -> None:
        status, body = post_json(f"{self.base_url}/agents/{agent_id}/heartbeat", {}, self.timeout)
        if status == 404:
            raise UnknownAgentError(str((body or {}).get("error", "unknown agent")))
        if status != 200:
            raise RegistryError(f"heartbeat failed ({status}): {body}")

    def deregister(self, agent_id: str) -> None:
        status, body = delete_json(f"{self.base_url}/agents/{agent_id}", self.timeout)
        if status == 404:
            raise UnknownAgentError(str((body or {}).get("error", "unknown agent")))
        if status != 200:
            raise RegistryError(f"deregister failed ({status}): {body}")

    def query(self, query: QueryFilter | None = None) -> list[AgentRecord]:
        query = query or QueryFilter()
        params = {
            key: value
            for key, value in {
                "model": query.model,
                "model_constraint": query.model_constraint,
                "framework": query.framework,
                "framework_constraint": query.framework_constraint,
                "arch": query.arch,
                "device": query.device,
                "interconnect": query.interconnect,
            }.items()
            if value
        }
        status, body = get_json(f"{self.base_url}/agents", params, self.timeout)
        if status != 200:
            raise RegistryError(f"query failed ({status}): {body}")
        return [AgentRecord.from_json_obj(obj) for obj in body]


def registry_record_from_json(text: str) -> AgentRecord:
    return AgentRecord.from_json_obj(json.loads(text))
