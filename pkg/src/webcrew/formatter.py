"""Structures raw agent output into schema-valid messages and routes them.

Each (role, kind) pair has one schema of required fields and one routing
entry naming the receiving agents.  Free text is parsed by extracting
labeled sections (``FIELD: value`` blocks, with ``- item`` bullets for list
fields); already-structured input passes through unchanged, so formatting
is idempotent.  Both the schemas and the routing table can be overridden
from the run config; the defaults below are the wired-in contract.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from urllib.parse import urlparse
from typing import Any, Mapping

from .errors import FormatError, RoutingError, SchemaLookupError, StructuralError
from .hypergraph import (
    AGENT_NODES,
    ALL_NODES,
    EdgeSpec,
    MessageHypergraph,
    MessageKind,
    NodeId,
    StructuredMessage,
)

CACHE_ID_RE = re.compile(r"^ohc-[0-9a-f]{64}$")

#: Value shapes a schema field may declare.
SHAPES = ("text", "list-of-text", "url", "url-list", "structured-table", "cache-id")


@dataclass(frozen=True)
class FieldSpec:
    name: str
    shape: str  # one of SHAPES
    required: bool = True
    allow_empty: bool = False  # list fields only: may be present but empty

    def __post_init__(self) -> None:
        if self.shape not in SHAPES:
            raise ValueError(f"unknown field shape: {self.shape}")


@dataclass(frozen=True)
class RoleSchema:
    role: NodeId
    kind: MessageKind
    fields: tuple[FieldSpec, ...]

    def __post_init__(self) -> None:
        if not any(f.required for f in self.fields):
            raise ValueError(f"schema {self.role}/{self.kind} has no required fields")

    @property
    def field_names(self) -> list[str]:
        return [f.name for f in self.fields]


def _fields(*specs: tuple) -> tuple[FieldSpec, ...]:
    return tuple(FieldSpec(*s) for s in specs)


#: One schema per emittable (role, kind); the minimal field set each
#: downstream role needs to act without free-text guessing.
DEFAULT_SCHEMAS: dict[tuple[NodeId, MessageKind], RoleSchema] = {
    (s.role, s.kind): s
    for s in [
        RoleSchema(NodeId.PLAN, MessageKind.PLAN, _fields(
            ("GOAL", "text"),
            ("STEPS", "list-of-text"),
        )),
        RoleSchema(NodeId.WEB, MessageKind.FINDING, _fields(
            ("SOURCE_URL", "url"),
            ("FINDINGS", "text"),
            ("EVIDENCE_CACHE_IDS", "list-of-text", True, True),
        )),
        RoleSchema(NodeId.TOOL, MessageKind.FINDING, _fields(
            ("TOOL", "text"),
            ("INPUT_SUMMARY", "text"),
            ("RESULT", "text"),
            ("RESULT_CACHE_ID", "cache-id", False),
        )),
        RoleSchema(NodeId.BP, MessageKind.BLUEPRINT, _fields(
            ("TARGETS", "url-list"),
            ("ACCESS_METHOD", "text"),
            ("EXTRACTION_RULES", "list-of-text"),
            ("OUTPUT_SCHEMA", "list-of-text"),
            ("PAGINATION", "text"),
            ("VALIDATION_RULES", "list-of-text"),
        )),
        RoleSchema(NodeId.ENGR, MessageKind.CODE_REPORT, _fields(
            ("PROGRAM_CACHE_ID", "cache-id"),
            ("ENTRYPOINT", "text"),
            ("NOTES", "text"),
        )),
        RoleSchema(NodeId.TEST, MessageKind.TEST_REPORT, _fields(
            ("STATUS", "text"),
            ("STDOUT_CACHE_ID", "cache-id"),
            ("FAILURES", "list-of-text", True, True),
        )),
        RoleSchema(NodeId.VAL, MessageKind.VALIDATION_REPORT, _fields(
            ("STATUS", "text"),
            ("CHECKED_RULES", "list-of-text"),
            ("DEFECTS", "list-of-text", True, True),
        )),
        RoleSchema(NodeId.MGR, MessageKind.DIRECTIVE, _fields(
            ("NEXT_AGENT", "text"),
            ("INSTRUCTION", "text"),
        )),
        RoleSchema(NodeId.LCS, MessageKind.CACHE_ANNOUNCEMENT, _fields(
            ("CACHE_ID", "cache-id"),
            ("MEDIA_TYPE", "text"),
            ("BYTE_LENGTH", "text"),
            ("DESCRIPTION", "text"),
            ("ARTIFACT_BASE64", "text", False),  # cache-bypass ablation only
        )),
    ]
}

#: Default target sets.  The planner's entry and the cache broadcast are
#: fixed contract; the manager is added to every target set so it can track
#: progress; the rest pair each report with the roles that act on it.
DEFAULT_ROUTES: dict[tuple[NodeId, MessageKind], frozenset[NodeId]] = {
    (NodeId.PLAN, MessageKind.PLAN): frozenset(
        {NodeId.WEB, NodeId.TOOL, NodeId.BP, NodeId.MGR}
    ),
    (NodeId.WEB, MessageKind.FINDING): frozenset({NodeId.TOOL, NodeId.BP, NodeId.MGR}),
    (NodeId.TOOL, MessageKind.FINDING): frozenset({NodeId.WEB, NodeId.BP, NodeId.MGR}),
    (NodeId.BP, MessageKind.BLUEPRINT): frozenset({NodeId.ENGR, NodeId.VAL, NodeId.MGR}),
    (NodeId.ENGR, MessageKind.CODE_REPORT): frozenset({NodeId.TEST, NodeId.MGR}),
    (NodeId.TEST, MessageKind.TEST_REPORT): frozenset(
        {NodeId.ENGR, NodeId.VAL, NodeId.MGR}
    ),
    (NodeId.VAL, MessageKind.VALIDATION_REPORT): frozenset({NodeId.ENGR, NodeId.MGR}),
    (NodeId.MGR, MessageKind.DIRECTIVE): AGENT_NODES - {NodeId.MGR},
    (NodeId.LCS, MessageKind.CACHE_ANNOUNCEMENT): AGENT_NODES,
}

#: Entries that config overrides may not change.
_PINNED_ROUTES = {
    (NodeId.PLAN, MessageKind.PLAN): DEFAULT_ROUTES[(NodeId.PLAN, MessageKind.PLAN)],
    (NodeId.LCS, MessageKind.CACHE_ANNOUNCEMENT): AGENT_NODES,
}


@dataclass(frozen=True)
class RoutingTable:
    """Total mapping from (role, kind) to the receiving target set."""

    entries: dict[tuple[NodeId, MessageKind], frozenset[NodeId]] = field(
        default_factory=lambda: dict(DEFAULT_ROUTES)
    )

    def __post_init__(self) -> None:
        for (role, kind), targets in self.entries.items():
            if role in targets:
                raise RoutingError(f"routing entry {role}/{kind} targets its own role")
            if not targets:
                raise RoutingError(f"routing entry {role}/{kind} has empty targets")
            if targets - ALL_NODES:
                raise RoutingError(f"routing entry {role}/{kind} targets unknown nodes")
        for key, fixed in _PINNED_ROUTES.items():
            if key in self.entries and self.entries[key] != fixed:
                role, kind = key
                raise RoutingError(
                    f"routing entry {role}/{kind} is fixed to "
                    f"{sorted(n.value for n in fixed)} and cannot be overridden"
                )
        missing = set(DEFAULT_SCHEMAS) - set(self.entries)
        if missing:
            names = ", ".join(sorted(f"{r}/{k}" for r, k in missing))
            raise RoutingError(f"routing table incomplete, missing: {names}")

    def targets_for(self, role: NodeId, kind: MessageKind) -> frozenset[NodeId]:
        try:
            return self.entries[(role, kind)]
        except KeyError:
            raise RoutingError(f"no routing entry for {role}/{kind}") from None

    @classmethod
    def with_overrides(cls, overrides: Mapping[str, list[str]]) -> "RoutingTable":
        """Build a table from the defaults plus ``"role/kind" -> [targets]`` overrides."""
        entries = dict(DEFAULT_ROUTES)
        for key, target_names in overrides.items():
            role_name, _, kind_name = key.partition("/")
            role = NodeId(role_name)
            kind = MessageKind(kind_name)
            entries[(role, kind)] = frozenset(NodeId(t) for t in target_names)
        return cls(entries)


#: A schema registry maps (role, kind) to its RoleSchema; the defaults can
#: be overridden per-run from the config file.
SchemaRegistry = dict[tuple[NodeId, MessageKind], RoleSchema]


def lookup_schema(
    role: NodeId, kind: MessageKind, schemas: SchemaRegistry | None = None
) -> RoleSchema:
    try:
        return (schemas or DEFAULT_SCHEMAS)[(role, kind)]
    except KeyError:
        raise SchemaLookupError(f"no schema for {role}/{kind}") from None


def registry_with_overrides(overrides: Mapping[str, list]) -> SchemaRegistry:
    """Default schemas plus ``"role/kind" -> [field specs]`` replacements.

    Each field spec is ``{"name", "shape", "required"?, "allow_empty"?}``.
    """
    registry = dict(DEFAULT_SCHEMAS)
    for key, field_rows in overrides.items():
        role_name, _, kind_name = key.partition("/")
        role = NodeId(role_name)
        kind = MessageKind(kind_name)
        fields = tuple(
            FieldSpec(
                name=row["name"],
                shape=row["shape"],
                required=bool(row.get("required", True)),
                allow_empty=bool(row.get("allow_empty", False)),
            )
            for row in field_rows
        )
        registry[(role, kind)] = RoleSchema(role, kind, fields)
    return registry


def emittable_kind(role: NodeId) -> MessageKind:
    """The single kind each role emits as its committed output."""
    for (r, kind) in DEFAULT_SCHEMAS:
        if r is role:
            return kind
    raise SchemaLookupError(f"role {role} has no emittable kind")


# -- labeled-section parsing --------------------------------------------------

_LABEL_RE = re.compile(r"^([A-Z][A-Z0-9_]*):[ \t]*(.*)$")
_BULLET_RE = re.compile(r"^-\s+(.*)$")
_EMPTY_MARKERS = {"", "none", "(none)", "n/a"}


def split_labeled_sections(text: str, labels: list[str]) -> dict[str, str]:
    """Split text into ``LABEL: body`` sections, in order of appearance.

    Only names in ``labels`` start a section; anything before the first
    label, and any unknown label line, is treated as body text of the
    current section (or ignored at the top).
    """
    wanted = set(labels)
    sections: dict[str, list[str]] = {}
    current: str | None = None
    for line in text.splitlines():
        m = _LABEL_RE.match(line)
        if m and m.group(1) in wanted:
            current = m.group(1)
            sections.setdefault(current, [])
            if m.group(2).strip():
                sections[current].append(m.group(2).strip())
        elif current is not None:
            sections[current].append(line.rstrip())
    return {name: "\n".join(body).strip() for name, body in sections.items()}


def _is_url(value: str) -> bool:
    parts = urlparse(value)
    return parts.scheme in ("http", "https") and bool(parts.netloc)


def _parse_list(body: str) -> list[str]:
    items = [m.group(1).strip() for line in body.splitlines() if (m := _BULLET_RE.match(line.strip()))]
    if items:
        return [i for i in items if i]
    if body.strip().lower() in _EMPTY_MARKERS:
        return []
    return [line.strip() for line in body.splitlines() if line.strip()]


def _coerce_section(spec: FieldSpec, body: str) -> Any:
    if spec.shape == "list-of-text":
        return _parse_list(body)
    if spec.shape == "url-list":
        return _parse_list(body)
    if spec.shape == "structured-table":
        return json.loads(body)
    return body.strip()


def _check_value(spec: FieldSpec, value: Any) -> str | None:
    """Return a defect description, or None when the value fits the shape."""
    if spec.shape == "text":
        if not isinstance(value, str) or not value.strip():
            return "expected non-empty text"
    elif spec.shape == "url":
        if not isinstance(value, str) or not _is_url(value.strip()):
            return "expected an absolute http(s) URL"
    elif spec.shape == "cache-id":
        if not isinstance(value, str) or not CACHE_ID_RE.match(value.strip()):
            return "expected a cache id (ohc-<sha256 hex>)"
    elif spec.shape == "list-of-text":
        if not isinstance(value, list) or any(not isinstance(v, str) or not v.strip() for v in value):
            return "expected a list of non-empty text items"
        if not value and not spec.allow_empty:
            return "list may not be empty"
    elif spec.shape == "url-list":
        if not isinstance(value, list) or any(not isinstance(v, str) or not _is_url(v.strip()) for v in value):
            return "expected a list of absolute http(s) URLs"
        if not value and not spec.allow_empty:
            return "list may not be empty"
    elif spec.shape == "structured-table":
        if not isinstance(value, list) or any(not isinstance(row, dict) for row in value):
            return "expected a list of records"
    return None


def format(
    role: NodeId,
    kind: MessageKind,
    raw: str | Mapping[str, Any] | StructuredMessage,
    schemas: SchemaRegistry | None = None,
) -> StructuredMessage:
    """Turn raw agent output into a schema-valid structured message.

    Free text is parsed by labeled-section extraction; mappings are
    validated as-is and pass through unchanged, making the operation
    idempotent.  Raises FormatError naming every missing or malformed
    field, SchemaLookupError for unknown (role, kind).
    """
    schema = lookup_schema(role, kind, schemas)

    if isinstance(raw, StructuredMessage):
        if raw.author is not role or raw.kind is not kind:
            raise FormatError(role.value, kind.value, [], "structured message role/kind mismatch")
        payload: dict[str, Any] = dict(raw.payload)
    elif isinstance(raw, Mapping):
        payload = dict(raw)
    else:
        sections = split_labeled_sections(str(raw), schema.field_names)
        payload = {}
        bad: list[str] = []
        for spec in schema.fields:
            if spec.name not in sections:
                continue
            try:
                payload[spec.name] = _coerce_section(spec, sections[spec.name])
            except (json.JSONDecodeError, ValueError):
                bad.append(spec.name)
        if bad:
            raise FormatError(role.value, kind.value, bad, "unparseable section")

    missing: list[str] = []
    details: list[str] = []
    known = set(schema.field_names)
    unknown = [k for k in payload if k not in known]
    if unknown:
        raise FormatError(
            role.value, kind.value, unknown, "fields not declared in the role schema"
        )
    for spec in schema.fields:
        if spec.name not in payload:
            if spec.required:
                missing.append(spec.name)
            continue
        defect = _check_value(spec, payload[spec.name])
        if defect is not None:
            missing.append(spec.name)
            details.append(f"{spec.name}: {defect}")
    if missing:
        raise FormatError(role.value, kind.value, missing, "; ".join(details))

    ordered = {spec.name: payload[spec.name] for spec in schema.fields if spec.name in payload}
    return StructuredMessage(author=role, kind=kind, payload=ordered)


def format_bypass(role: NodeId, kind: MessageKind, raw: Any) -> StructuredMessage:
    """Formatter-ablation mode: wrap raw output without schema enforcement."""
    if isinstance(raw, StructuredMessage):
        return raw
    if isinstance(raw, Mapping):
        return StructuredMessage(author=role, kind=kind, payload=dict(raw))
    return StructuredMessage(author=role, kind=kind, payload={"TEXT": str(raw)})


def route(table: RoutingTable, role: NodeId, kind: MessageKind) -> EdgeSpec:
    """The oriented edge shape for a (role, kind): pure table lookup."""
    targets = table.targets_for(role, kind)
    spec = EdgeSpec(source=frozenset({role}), targets=targets)
    if len(spec.source) != 1 or not spec.targets or (spec.source & spec.targets):
        raise StructuralError("routing table produced an invalid edge shape")
    return spec


def commit_formatted(
    graph: MessageHypergraph,
    role: NodeId,
    kind: MessageKind,
    raw: str | Mapping[str, Any] | StructuredMessage,
    table: RoutingTable | None = None,
    schemas: SchemaRegistry | None = None,
    bypass: bool = False,
    broadcast: bool = False,
) -> MessageHypergraph:
    """Format, route, and commit in one atomic step.

    Formatting or routing failures propagate before anything is committed,
    so the graph value is untouched on error.  ``bypass`` applies the
    formatter-ablation wrapping; ``broadcast`` replaces the routed target
    set with every other node (routing-ablation mode).
    """
    table = table or RoutingTable()
    message = format_bypass(role, kind, raw) if bypass else format(role, kind, raw, schemas)
    edge = route(table, role, kind)
    if broadcast:
        edge = EdgeSpec(source=edge.source, targets=graph.nodes - edge.source)
    return graph.commit(edge, message)
