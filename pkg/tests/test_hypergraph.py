import dataclasses
import random

import pytest

from conftest import random_valid_graph
from oracles import context_oracle
from webcrew.errors import ConstructionError, MembershipError, StructuralError
from webcrew.hypergraph import (
    AGENT_NODES,
    ALL_NODES,
    EdgeSpec,
    MessageKind,
    NodeId,
    OrientedHyperedge,
    StructuredMessage,
    from_trace_text,
    new_graph,
    to_trace_text,
)


def _draft(author: NodeId, kind=MessageKind.FINDING, **payload) -> StructuredMessage:
    return StructuredMessage(author=author, kind=kind, payload=payload or {"F": "x"})


def _edge(source: NodeId, *targets: NodeId) -> EdgeSpec:
    return EdgeSpec(frozenset({source}), frozenset(targets))


class TestConstruction:
    def test_canonical_nine_nodes(self):
        graph = new_graph(ALL_NODES)
        assert len(graph.edges) == 0
        assert len(graph.messages) == 0
        assert graph.clock == 0
        assert graph.nodes == ALL_NODES

    def test_missing_cache_node_rejected(self):
        with pytest.raises(ConstructionError, match="lcs"):
            new_graph(AGENT_NODES)

    def test_duplicate_participant_rejected(self):
        participants = list(ALL_NODES) + [NodeId.WEB]
        with pytest.raises(ConstructionError, match="duplicate"):
            new_graph(participants)


class TestCommit:
    def test_plan_fanout_commits_at_time_one(self):
        graph = new_graph(ALL_NODES)
        edge = _edge(NodeId.PLAN, NodeId.WEB, NodeId.TOOL, NodeId.BP, NodeId.MGR)
        committed = graph.commit(edge, _draft(NodeId.PLAN, MessageKind.PLAN, GOAL="g"))
        assert len(committed.edges) == 1
        message = committed.messages_in_order()[0]
        assert message.time == 1
        assert committed.edges[0].targets == frozenset(
            {NodeId.WEB, NodeId.TOOL, NodeId.BP, NodeId.MGR}
        )

    def test_source_in_targets_rejected(self):
        graph = new_graph(ALL_NODES)
        edge = _edge(NodeId.WEB, NodeId.WEB, NodeId.BP)
        with pytest.raises(StructuralError, match="disjoint"):
            graph.commit(edge, _draft(NodeId.WEB))

    def test_empty_targets_rejected(self):
        graph = new_graph(ALL_NODES)
        with pytest.raises(StructuralError, match="non-empty"):
            graph.commit(EdgeSpec(frozenset({NodeId.WEB}), frozenset()), _draft(NodeId.WEB))

    def test_multi_source_rejected(self):
        graph = new_graph(ALL_NODES)
        edge = EdgeSpec(frozenset({NodeId.WEB, NodeId.TOOL}), frozenset({NodeId.BP}))
        with pytest.raises(StructuralError, match="exactly one"):
            graph.commit(edge, _draft(NodeId.WEB))

    def test_author_must_match_source(self):
        graph = new_graph(ALL_NODES)
        with pytest.raises(StructuralError, match="author"):
            graph.commit(_edge(NodeId.WEB, NodeId.BP), _draft(NodeId.TOOL))

    def test_clock_is_strictly_monotone(self):
        graph = new_graph(ALL_NODES)
        graph = graph.commit(_edge(NodeId.PLAN, NodeId.WEB), _draft(NodeId.PLAN))
        graph = graph.commit(_edge(NodeId.WEB, NodeId.BP), _draft(NodeId.WEB))
        times = [m.time for m in graph.messages_in_order()]
        assert times == [1, 2]

    def test_commit_is_persistent_and_append_only(self):
        graph = new_graph(ALL_NODES)
        g1 = graph.commit(_edge(NodeId.PLAN, NodeId.WEB), _draft(NodeId.PLAN))
        g2 = g1.commit(_edge(NodeId.WEB, NodeId.BP), _draft(NodeId.WEB))
        assert len(graph.edges) == 0
        assert len(g1.edges) == 1
        assert g2.edges[: len(g1.edges)] == g1.edges
        assert all(g2.messages[m.id] == m for m in g1.messages_in_order())


class TestContext:
    def test_empty_graph_yields_empty_context(self):
        graph = new_graph(ALL_NODES)
        assert graph.context(NodeId.WEB, 5) == []

    def test_delivery_follows_target_membership_and_time(self):
        # plan sends m1 to web at t=1; bp sends m2 elsewhere at t=2;
        # tool sends m3 to web at t=3: web's context at t=4 is [m1, m3].
        graph = new_graph(ALL_NODES)
        graph = graph.commit(
            _edge(NodeId.PLAN, NodeId.WEB, NodeId.TOOL, NodeId.BP, NodeId.MGR),
            _draft(NodeId.PLAN, MessageKind.PLAN),
        )
        graph = graph.commit(_edge(NodeId.BP, NodeId.ENGR), _draft(NodeId.BP))
        graph = graph.commit(_edge(NodeId.TOOL, NodeId.WEB, NodeId.MGR), _draft(NodeId.TOOL))
        delivered = graph.context(NodeId.WEB, 4)
        assert [m.time for m in delivered] == [1, 3]
        assert [m.author for m in delivered] == [NodeId.PLAN, NodeId.TOOL]

    def test_now_boundary_is_strict(self):
        graph = new_graph(ALL_NODES)
        graph = graph.commit(_edge(NodeId.PLAN, NodeId.WEB), _draft(NodeId.PLAN))
        assert graph.context(NodeId.WEB, 1) == []
        assert len(graph.context(NodeId.WEB, 2)) == 1

    def test_unknown_agent_rejected(self):
        graph = dataclasses.replace(new_graph(ALL_NODES), nodes=AGENT_NODES)
        with pytest.raises(MembershipError):
            graph.context(NodeId.LCS, 1)

    def test_matches_oracle_on_random_graphs(self):
        rng = random.Random(1234)
        for _ in range(60):
            graph = random_valid_graph(rng, rng.randint(0, 40))
            now = rng.randint(0, graph.clock + 2)
            for agent in ALL_NODES:
                assert graph.context(agent, now) == context_oracle(graph, agent, now)

    def test_broadcast_twin_delivers_superset(self):
        rng = random.Random(99)
        for _ in range(20):
            graph = random_valid_graph(rng, rng.randint(1, 30))
            twin_edges = tuple(
                OrientedHyperedge(e.source, graph.nodes - e.source, e.message_id)
                for e in graph.edges
            )
            twin = dataclasses.replace(graph, edges=twin_edges)
            for agent in ALL_NODES:
                now = rng.randint(0, graph.clock + 1)
                narrow = [m.id for m in graph.context(agent, now)]
                wide = [m.id for m in twin.context(agent, now)]
                it = iter(wide)
                assert all(mid in it for mid in narrow)  # subsequence


class TestValidate:
    def test_committed_graphs_are_clean(self):
        rng = random.Random(7)
        graph = random_valid_graph(rng, 10)
        assert graph.validate() == []

    def test_edge_message_count_mismatch_reported(self):
        graph = random_valid_graph(random.Random(8), 3)
        forged = dataclasses.replace(graph, edges=graph.edges[:-1])
        violations = forged.validate()
        assert any("mismatch" in v for v in violations)

    def test_non_monotone_times_reported(self):
        graph = random_valid_graph(random.Random(9), 3)
        forged = dataclasses.replace(graph, edges=graph.edges[::-1])
        assert any("non-monotone" in v for v in forged.validate())

    def test_overlapping_forged_edge_reported(self):
        graph = random_valid_graph(random.Random(10), 1)
        edge = graph.edges[0]
        bad = OrientedHyperedge(edge.source, edge.targets | edge.source, edge.message_id)
        forged = dataclasses.replace(graph, edges=(bad,))
        assert any("overlap" in v for v in forged.validate())


class TestTraceRoundTrip:
    def test_round_trip_is_byte_exact(self):
        rng = random.Random(4242)
        graph = random_valid_graph(rng, 25)
        text = to_trace_text(graph)
        rebuilt = from_trace_text(text)
        assert to_trace_text(rebuilt) == text
        assert rebuilt.messages_in_order() == graph.messages_in_order()
        assert [ (e.source, e.targets) for e in rebuilt.edges ] == [
            (e.source, e.targets) for e in graph.edges
        ]

    def test_empty_graph_serializes_to_empty_text(self):
        assert to_trace_text(new_graph(ALL_NODES)) == ""

    def test_tampered_time_detected(self):
        graph = random_valid_graph(random.Random(5), 2)
        lines = to_trace_text(graph).splitlines()
        lines[1] = lines[1].replace('"time":2', '"time":9')
        with pytest.raises(StructuralError, match="faithful"):
            from_trace_text("\n".join(lines))
