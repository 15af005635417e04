"""The oriented message hypergraph: participants, messages, and routing edges.

Every inter-agent message is carried by exactly one oriented hyperedge, a
(source-set, target-set) pair over the participant nodes with |source| = 1,
non-empty targets, and disjoint sides.  The graph is persistent: ``commit``
returns a new value and never touches prior edges or messages, which makes
replay, auditing, and ablation diffs trivial.

Timestamps are store-assigned logical ticks (strictly increasing), never
wall-clock, so complete runs are reproducible byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Iterator

from .errors import ConstructionError, MembershipError, StructuralError


class NodeId(str, Enum):
    """The nine stable node identities: eight agents plus the cache node."""

    MGR = "mgr"
    PLAN = "plan"
    WEB = "web"
    TOOL = "tool"
    BP = "bp"
    ENGR = "engr"
    TEST = "test"
    VAL = "val"
    LCS = "lcs"

    def __str__(self) -> str:  # keep traces readable: "web", not "NodeId.WEB"
        return self.value


#: All nine graph nodes.
ALL_NODES: frozenset[NodeId] = frozenset(NodeId)

#: The eight executing agents (everything except the cache node).
AGENT_NODES: frozenset[NodeId] = frozenset(n for n in NodeId if n is not NodeId.LCS)

#: The research squad plus its planner.
RESEARCH_SQUAD: frozenset[NodeId] = frozenset(
    {NodeId.PLAN, NodeId.WEB, NodeId.TOOL, NodeId.BP}
)

#: The development squad.
DEV_SQUAD: frozenset[NodeId] = frozenset({NodeId.ENGR, NodeId.TEST, NodeId.VAL})


class MessageKind(str, Enum):
    PLAN = "plan"
    FINDING = "finding"
    BLUEPRINT = "blueprint"
    CODE_REPORT = "code-report"
    TEST_REPORT = "test-report"
    VALIDATION_REPORT = "validation-report"
    CACHE_ANNOUNCEMENT = "cache-announcement"
    DIRECTIVE = "directive"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Message:
    """A committed, timestamped, author-attributed structured payload.

    ``payload`` is an ordered field/value mapping; field order is significant
    and preserved through serialization.  Instances are never mutated after
    commit.
    """

    id: str
    author: NodeId
    time: int
    kind: MessageKind
    payload: dict[str, Any]


@dataclass(frozen=True)
class StructuredMessage:
    """Pre-commit form of a message: no id or time yet."""

    author: NodeId
    kind: MessageKind
    payload: dict[str, Any]


@dataclass(frozen=True)
class EdgeSpec:
    """The routing shape of a hyperedge: who sends, who receives."""

    source: frozenset[NodeId]
    targets: frozenset[NodeId]


@dataclass(frozen=True)
class OrientedHyperedge:
    """A committed (source-set, target-set) pair carrying one message."""

    source: frozenset[NodeId]
    targets: frozenset[NodeId]
    message_id: str


def _check_edge_shape(source: frozenset[NodeId], targets: frozenset[NodeId]) -> None:
    if len(source) != 1:
        raise StructuralError(f"hyperedge source must have exactly one node, got {len(source)}")
    if not targets:
        raise StructuralError("hyperedge target set must be non-empty")
    if source & targets:
        overlap = ", ".join(sorted(n.value for n in source & targets))
        raise StructuralError(f"hyperedge source and targets must be disjoint (overlap: {overlap})")


@dataclass(frozen=True)
class MessageHypergraph:
    """Append-only store of participants, oriented hyperedges, and messages.

    Construct fresh graphs with :func:`new_graph`; grow them with
    :meth:`commit`.  Direct construction is possible (validation and tests
    forge malformed graphs that way) but bypasses all invariant checks —
    use :meth:`validate` to audit such values.
    """

    nodes: frozenset[NodeId]
    edges: tuple[OrientedHyperedge, ...] = ()
    messages: dict[str, Message] = field(default_factory=dict)
    clock: int = 0

    # -- growth -------------------------------------------------------------

    def commit(self, edge: EdgeSpec, message: StructuredMessage) -> "MessageHypergraph":
        """Append one hyperedge and its message, assigning the next tick.

        Returns a new graph; ``self`` is untouched.  Raises StructuralError
        for malformed edges and MembershipError for unknown nodes.
        """
        _check_edge_shape(edge.source, edge.targets)
        unknown = (edge.source | edge.targets) - self.nodes
        if unknown:
            names = ", ".join(sorted(n.value for n in unknown))
            raise MembershipError(f"edge references nodes outside the graph: {names}")
        (author,) = edge.source
        if message.author is not author:
            raise StructuralError(
                f"message author {message.author} does not match edge source {author}"
            )
        tick = self.clock + 1
        mid = f"m{tick:06d}"
        committed = Message(
            id=mid,
            author=author,
            time=tick,
            kind=message.kind,
            payload=dict(message.payload),
        )
        hyperedge = OrientedHyperedge(edge.source, edge.targets, mid)
        return MessageHypergraph(
            nodes=self.nodes,
            edges=self.edges + (hyperedge,),
            messages={**self.messages, mid: committed},
            clock=tick,
        )

    # -- queries ------------------------------------------------------------

    def context(self, agent: NodeId, now: int) -> list[Message]:
        """Messages addressed to ``agent`` strictly before ``now``, oldest first.

        A message is delivered iff the carrying edge's target set contains
        the agent; authored messages are excluded unless some edge targets
        their author.
        """
        if agent not in self.nodes:
            raise MembershipError(f"unknown agent: {agent}")
        out = []
        for edge in self.edges:
            msg = self.messages[edge.message_id]
            if agent in edge.targets and msg.time < now:
                out.append(msg)
        out.sort(key=lambda m: m.time)
        return out

    def messages_in_order(self) -> list[Message]:
        return [self.messages[e.message_id] for e in self.edges]

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self) -> Iterator[OrientedHyperedge]:
        return iter(self.edges)

    # -- auditing -----------------------------------------------------------

    def validate(self) -> list[str]:
        """Report every invariant violation; empty list means valid.

        Graphs built only through :meth:`commit` always come back clean; the
        checks exist to audit deserialized or hand-built graph values.
        """
        violations: list[str] = []
        if self.nodes != ALL_NODES:
            missing = sorted(n.value for n in ALL_NODES - self.nodes)
            extra = sorted(str(n) for n in self.nodes - ALL_NODES)
            violations.append(
                f"node set is not the canonical nine (missing: {missing}, extra: {extra})"
            )
        if len(self.edges) != len(self.messages):
            violations.append(
                f"edge/message count mismatch: {len(self.edges)} edges, {len(self.messages)} messages"
            )
        seen_ids: set[str] = set()
        last_time = 0
        for i, edge in enumerate(self.edges):
            where = f"edge[{i}]"
            if len(edge.source) != 1:
                violations.append(f"{where}: source size {len(edge.source)} != 1")
            if not edge.targets:
                violations.append(f"{where}: empty target set")
            if edge.source & edge.targets:
                violations.append(f"{where}: source and targets overlap")
            if (edge.source | edge.targets) - self.nodes:
                violations.append(f"{where}: references nodes outside the graph")
            msg = self.messages.get(edge.message_id)
            if msg is None:
                violations.append(f"{where}: dangling message id {edge.message_id}")
                continue
            if edge.message_id in seen_ids:
                violations.append(f"{where}: message id {edge.message_id} carried twice")
            seen_ids.add(edge.message_id)
            if msg.time <= last_time:
                violations.append(
                    f"{where}: non-monotone time {msg.time} after {last_time}"
                )
            last_time = max(last_time, msg.time)
            if len(edge.source) == 1:
                (src,) = edge.source
                if msg.author is not src:
                    violations.append(f"{where}: author {msg.author} != source {src}")
            if msg.time > self.clock:
                violations.append(f"{where}: time {msg.time} beyond clock {self.clock}")
        orphaned = set(self.messages) - seen_ids
        for mid in sorted(orphaned):
            violations.append(f"message {mid} has no carrying edge")
        return violations


def new_graph(participants: Iterable[NodeId]) -> MessageHypergraph:
    """Build an empty graph over the canonical participant set.

    Rejects missing, unknown, or duplicate participants: the node set is
    fixed to the eight agents plus the cache node for the graph's lifetime.
    """
    seen: list[NodeId] = []
    for p in participants:
        try:
            node = NodeId(p)
        except ValueError:
            raise ConstructionError(f"unknown participant: {p!r}") from None
        if node in seen:
            raise ConstructionError(f"duplicate participant: {node}")
        seen.append(node)
    missing = ALL_NODES - set(seen)
    if missing:
        names = ", ".join(sorted(n.value for n in missing))
        raise ConstructionError(f"missing participants: {names}")
    return MessageHypergraph(nodes=frozenset(seen))


# -- trace serialization ----------------------------------------------------
#
# One JSON object per line, keys in fixed order (time, author, source,
# targets, kind, payload), compact separators, node lists sorted.  The
# writer is canonical: parse(write(g)) == g and write(parse(t)) == t byte
# for byte.

def edge_record(graph: MessageHypergraph, edge: OrientedHyperedge) -> dict[str, Any]:
    msg = graph.messages[edge.message_id]
    return {
        "time": msg.time,
        "author": msg.author.value,
        "source": sorted(n.value for n in edge.source),
        "targets": sorted(n.value for n in edge.targets),
        "kind": msg.kind.value,
        "payload": msg.payload,
    }


def to_trace_lines(graph: MessageHypergraph) -> list[str]:
    return [
        json.dumps(edge_record(graph, edge), ensure_ascii=False, separators=(",", ":"))
        for edge in graph.edges
    ]


def to_trace_text(graph: MessageHypergraph) -> str:
    lines = to_trace_lines(graph)
    return "\n".join(lines) + ("\n" if lines else "")


def from_trace_text(text: str) -> MessageHypergraph:
    """Rebuild a graph from its line-delimited trace representation."""
    graph = new_graph(ALL_NODES)
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise StructuralError(f"trace line {lineno} is not valid JSON: {exc}") from exc
        edge = EdgeSpec(
            source=frozenset(NodeId(n) for n in rec["source"]),
            targets=frozenset(NodeId(n) for n in rec["targets"]),
        )
        draft = StructuredMessage(
            author=NodeId(rec["author"]),
            kind=MessageKind(rec["kind"]),
            payload=rec["payload"],
        )
        graph = graph.commit(edge, draft)
        committed = graph.messages_in_order()[-1]
        if committed.time != rec["time"]:
            raise StructuralError(
                f"trace line {lineno}: recorded time {rec['time']} does not "
                f"replay to {committed.time}; trace is not a faithful commit sequence"
            )
    return graph
