"""Exception hierarchy for the webcrew engine.

Every error raised by the public API derives from WebcrewError so callers
(CLI, service layer) can catch one base class and map it to an exit code or
HTTP status.
"""

from __future__ import annotations


class WebcrewError(Exception):
    """Base class for all engine errors."""


class ConfigError(WebcrewError):
    """Invalid or incomplete run configuration."""


# --- message hypergraph ----------------------------------------------------

class GraphError(WebcrewError):
    """Base class for message-hypergraph errors."""


class ConstructionError(GraphError):
    """Participant set is not the canonical node set (missing/duplicate)."""


class StructuralError(GraphError):
    """A hyperedge violates |source|=1, non-empty targets, or disjointness."""


class MembershipError(GraphError):
    """A node referenced by an edge or query is not in the graph."""


# --- formatter / routing ---------------------------------------------------

class FormatError(WebcrewError):
    """Agent output does not satisfy its role schema."""

    def __init__(self, role: str, kind: str, missing: list[str], detail: str = ""):
        self.role = role
        self.kind = kind
        self.missing = list(missing)
        msg = f"output from {role}/{kind} missing or malformed fields: {', '.join(missing)}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SchemaLookupError(WebcrewError):
    """No schema registered for this (role, kind) pair."""


class RoutingError(WebcrewError):
    """No routing entry registered for this (role, kind) pair."""


# --- artifact cache --------------------------------------------------------

class CacheError(WebcrewError):
    """Base class for artifact-cache errors."""


class CacheNotFoundError(CacheError):
    """Requested cache id has no stored entry."""


class CacheIOError(CacheError):
    """Backing store failed while persisting or reading an artifact."""


# --- agent runtime ---------------------------------------------------------

class BackendError(WebcrewError):
    """Model backend unreachable or returned a malformed wire response."""


class ScriptError(BackendError):
    """Scripted transcript exhausted or missing for the requested role."""


class BudgetExceededError(WebcrewError):
    """Deliberation loop hit its call budget without finishing."""

    def __init__(self, role: str, budget: int, trace=None):
        self.role = role
        self.budget = budget
        self.trace = trace
        super().__init__(f"{role} exhausted its deliberation budget of {budget}")


# --- toolbelt --------------------------------------------------------------

class ToolError(WebcrewError):
    """Base class for tool failures."""


class FetchError(ToolError):
    """HTTP fetch failed (non-2xx status, transport failure)."""

    def __init__(self, url: str, status: int | None = None, detail: str = ""):
        self.url = url
        self.status = status
        msg = f"fetch failed for {url}"
        if status is not None:
            msg += f" (status {status})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class FetchTimeoutError(FetchError):
    """HTTP fetch exceeded its timeout."""


class PolicyError(ToolError):
    """URL refused by the configured host allowlist or scheme rule."""


class ConversionError(ToolError):
    """Unsupported conversion pair or non-convertible payload."""


class SearchError(ToolError):
    """Search provider failed."""


class SandboxError(ToolError):
    """Sandboxed program could not be spawned."""


# --- orchestrator ----------------------------------------------------------

class SchedulingError(WebcrewError):
    """Workflow state is inconsistent with the committed graph."""


class ValidationError(WebcrewError):
    """Run input rejected before any agent executed."""


# --- bench harness ---------------------------------------------------------

class BindingError(WebcrewError):
    """Template bindings do not cover the placeholders exactly."""

    def __init__(self, missing: list[str], extra: list[str]):
        self.missing = list(missing)
        self.extra = list(extra)
        parts = []
        if missing:
            parts.append(f"missing: {', '.join(missing)}")
        if extra:
            parts.append(f"unexpected: {', '.join(extra)}")
        super().__init__("bad template bindings (" + "; ".join(parts) + ")")


class BindError(WebcrewError):
    """Fixture server could not bind its port."""
