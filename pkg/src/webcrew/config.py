"""Run configuration: one JSON document describing a collection run.

Top-level keys::

    instruction        the data collection request (required, non-empty)
    output_dir         where trace/dataset/cache/sandbox land (required)
    backend            {"variant": "scripted", "transcript_dir": ...}
                       or {"variant": "remote", "endpoint", "model",
                           "api_key_env", "timeout_s", "max_retries"}
    budgets            {"max_rounds": 12, "react_budget": 8, "phase_retries": 2}
    ablations          {"broadcast": false, "formatter_bypass": false,
                        "cache_bypass": false}
    fixture_base_url   substituted for {BASE_URL} in transcripts/truth files
    fixture_dir        corpus directory (offline search index; autostart)
    fixture_autostart  start a fixture server on fixture_base_url's port
    allowed_hosts      list of host[:port] fetch targets, or null for open
    politeness_delay_s per-host fetch spacing (default 0.5)
    research_sequence  rule-based research scheduling (default ["web","tool"])
    routing            {"role/kind": [targets...]} overrides
    schemas            {"role/kind": [{"name","shape","required"?,
                        "allow_empty"?}...]} schema overrides
    sandbox            {"wall_clock_s": 20, "output_bytes": 1000000,
                        "network": true}
    dataset_filename   program product treated as the dataset (dataset.jsonl)
    search_provider    "offline" (fixture corpus) or "remote"
    search_endpoint    remote search URL (search_provider = "remote")
    mgr_backend        "rules" (default) or "llm"
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .formatter import RoutingTable, SchemaRegistry, registry_with_overrides
from .toolbelt import ExecLimits


@dataclass(frozen=True)
class BackendConfig:
    variant: str  # "scripted" | "remote"
    transcript_dir: str = ""
    endpoint: str = ""
    model: str = ""
    api_key_env: str = ""
    timeout_s: float = 30.0
    max_retries: int = 2


@dataclass(frozen=True)
class Budgets:
    max_rounds: int = 12
    react_budget: int = 8
    phase_retries: int = 2

    def __post_init__(self) -> None:
        if self.max_rounds < 1 or self.react_budget < 1 or self.phase_retries < 0:
            raise ConfigError("budgets must be positive (phase_retries may be 0)")


@dataclass(frozen=True)
class Ablations:
    broadcast: bool = False
    formatter_bypass: bool = False
    cache_bypass: bool = False


@dataclass(frozen=True)
class RunConfig:
    instruction: str
    output_dir: Path
    backend: BackendConfig
    budgets: Budgets = Budgets()
    ablations: Ablations = Ablations()
    fixture_base_url: str = ""
    fixture_dir: str = ""
    fixture_autostart: bool = False
    allowed_hosts: list[str] | None = None
    politeness_delay_s: float = 0.5
    research_sequence: tuple[str, ...] = ("web", "tool")
    routing_overrides: dict[str, list[str]] = dc_field(default_factory=dict)
    schema_overrides: dict[str, list] = dc_field(default_factory=dict)
    sandbox_limits: ExecLimits = ExecLimits()
    dataset_filename: str = "dataset.jsonl"
    search_provider: str = "offline"
    search_endpoint: str = ""
    mgr_backend: str = "rules"

    def routing_table(self) -> RoutingTable:
        if not self.routing_overrides:
            return RoutingTable()
        return RoutingTable.with_overrides(self.routing_overrides)

    def schema_registry(self) -> SchemaRegistry | None:
        if not self.schema_overrides:
            return None
        return registry_with_overrides(self.schema_overrides)

    @property
    def substitutions(self) -> dict[str, str]:
        return {"BASE_URL": self.fixture_base_url} if self.fixture_base_url else {}


def _require(data: dict[str, Any], key: str) -> Any:
    if key not in data:
        raise ConfigError(f"config is missing required key: {key}")
    return data[key]


def config_from_dict(data: dict[str, Any], base_dir: Path | None = None) -> RunConfig:
    """Build a RunConfig from parsed JSON; relative paths resolve against
    ``base_dir`` (the config file's directory) when given."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")

    def _path(value: str) -> Path:
        p = Path(value)
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        return p

    instruction = data.get("instruction", "")
    if not isinstance(instruction, str):
        raise ConfigError("instruction must be a string")

    raw_backend = _require(data, "backend")
    variant = raw_backend.get("variant", "")
    if variant not in ("scripted", "remote"):
        raise ConfigError("backend.variant must be 'scripted' or 'remote'")
    if variant == "scripted" and not raw_backend.get("transcript_dir"):
        raise ConfigError("scripted backend needs backend.transcript_dir")
    if variant == "remote" and not (raw_backend.get("endpoint") and raw_backend.get("model")):
        raise ConfigError("remote backend needs backend.endpoint and backend.model")
    backend = BackendConfig(
        variant=variant,
        transcript_dir=str(_path(raw_backend["transcript_dir"])) if raw_backend.get("transcript_dir") else "",
        endpoint=raw_backend.get("endpoint", ""),
        model=raw_backend.get("model", ""),
        api_key_env=raw_backend.get("api_key_env", ""),
        timeout_s=float(raw_backend.get("timeout_s", 30.0)),
        max_retries=int(raw_backend.get("max_retries", 2)),
    )

    budgets_raw = data.get("budgets", {})
    try:
        budgets = Budgets(
            max_rounds=int(budgets_raw.get("max_rounds", 12)),
            react_budget=int(budgets_raw.get("react_budget", 8)),
            phase_retries=int(budgets_raw.get("phase_retries", 2)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad budgets: {exc}") from exc

    ablations_raw = data.get("ablations", {})
    ablations = Ablations(
        broadcast=bool(ablations_raw.get("broadcast", False)),
        formatter_bypass=bool(ablations_raw.get("formatter_bypass", False)),
        cache_bypass=bool(ablations_raw.get("cache_bypass", False)),
    )

    sandbox_raw = data.get("sandbox", {})
    try:
        sandbox_limits = ExecLimits(
            wall_clock_s=float(sandbox_raw.get("wall_clock_s", 20.0)),
            output_bytes=int(sandbox_raw.get("output_bytes", 1_000_000)),
            network_allowed=bool(sandbox_raw.get("network", True)),
        )
    except ValueError as exc:
        raise ConfigError(f"bad sandbox limits: {exc}") from exc

    allowed_hosts = data.get("allowed_hosts")
    if allowed_hosts is not None and (
        not isinstance(allowed_hosts, list) or any(not isinstance(h, str) for h in allowed_hosts)
    ):
        raise ConfigError("allowed_hosts must be a list of host[:port] strings or null")

    research_sequence = tuple(data.get("research_sequence", ["web", "tool"]))
    if any(step not in ("web", "tool") for step in research_sequence):
        raise ConfigError("research_sequence entries must be 'web' or 'tool'")
    if not research_sequence:
        raise ConfigError("research_sequence may not be empty")

    mgr_backend = data.get("mgr_backend", "rules")
    if mgr_backend not in ("rules", "llm"):
        raise ConfigError("mgr_backend must be 'rules' or 'llm'")

    search_provider = data.get("search_provider", "offline")
    if search_provider not in ("offline", "remote"):
        raise ConfigError("search_provider must be 'offline' or 'remote'")

    try:
        politeness = float(data.get("politeness_delay_s", 0.5))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad politeness_delay_s: {exc}") from exc
    if politeness < 0:
        raise ConfigError("politeness_delay_s must be >= 0")

    # Input paths resolve against the config file; the output directory is a
    # user artifact and resolves against the working directory.
    output_dir = Path(str(_require(data, "output_dir")))

    routing_overrides = data.get("routing", {})
    if not isinstance(routing_overrides, dict):
        raise ConfigError("routing must map 'role/kind' to target lists")

    schema_overrides = data.get("schemas", {})
    if not isinstance(schema_overrides, dict):
        raise ConfigError("schemas must map 'role/kind' to field-spec lists")
    if schema_overrides:
        try:
            registry_with_overrides(schema_overrides)
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad schema override: {exc}") from exc

    return RunConfig(
        instruction=instruction,
        output_dir=output_dir,
        backend=backend,
        budgets=budgets,
        ablations=ablations,
        fixture_base_url=str(data.get("fixture_base_url", "")).rstrip("/"),
        fixture_dir=str(_path(data["fixture_dir"])) if data.get("fixture_dir") else "",
        fixture_autostart=bool(data.get("fixture_autostart", False)),
        allowed_hosts=allowed_hosts,
        politeness_delay_s=politeness,
        research_sequence=research_sequence,
        routing_overrides=routing_overrides,
        schema_overrides=schema_overrides,
        sandbox_limits=sandbox_limits,
        dataset_filename=str(data.get("dataset_filename", "dataset.jsonl")),
        search_provider=search_provider,
        search_endpoint=str(data.get("search_endpoint", "")),
        mgr_backend=mgr_backend,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data, base_dir=path.parent)
