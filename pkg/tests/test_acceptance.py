"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``).

Criterion 10 (live remote-backend smoke) needs open network and a config
pointed at a real model endpoint; it is skipped unless LIVE_SMOKE_CONFIG
is set and is excluded from CI by default.
"""

import dataclasses
import functools
import json
import os
import random
import time
from fractions import Fraction

import pytest

from conftest import FIXTURES, make_academic_config, random_valid_graph
from oracles import context_oracle, metric_oracle
from webcrew.bench.driver import run_benchmark
from webcrew.bench.metrics import compare
from webcrew.bench.records import GroundTruth, RecordSchema, load_ground_truth
from webcrew.cache import Artifact, ArtifactCache, store
from webcrew.config import Ablations, load_config
from webcrew.formatter import RoutingTable, route
from webcrew.hypergraph import (
    AGENT_NODES,
    ALL_NODES,
    MessageKind,
    NodeId,
    new_graph,
    to_trace_text,
)
from webcrew.orchestrator import Phase, run
from webcrew.toolbelt import ExecLimits, execute_program


def criterion(number: int, name: str):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"\nACCEPTANCE {number:02d} {name}: FAIL", flush=True)
                raise
            print(f"\nACCEPTANCE {number:02d} {name}: PASS", flush=True)
            return result

        return wrapper

    return deco


@criterion(1, "routing-oracle-equivalence")
def test_context_matches_brute_force_on_1000_graphs():
    rng = random.Random(20250809)
    started = time.monotonic()
    for _ in range(1000):
        graph = random_valid_graph(rng, rng.randint(0, 50))
        now = rng.randint(0, graph.clock + 1)
        for agent in ALL_NODES:
            assert graph.context(agent, graph.clock + 1) == context_oracle(
                graph, agent, graph.clock + 1
            )
            assert graph.context(agent, now) == context_oracle(graph, agent, now)
    elapsed = time.monotonic() - started
    assert elapsed < 5.0, f"oracle equivalence took {elapsed:.2f}s (budget 5s)"


@criterion(2, "structural-invariants-under-random-commits")
def test_10000_commit_sequences_never_violate_invariants():
    rng = random.Random(31337)
    for _ in range(10_000):
        graph = random_valid_graph(rng, rng.randint(1, 5))
        last_time = 0
        for edge in graph.edges:
            assert len(edge.source) == 1
            assert edge.targets
            assert not (edge.source & edge.targets)
            message = graph.messages[edge.message_id]
            assert message.time > last_time
            last_time = message.time
        assert graph.validate() == []


@criterion(3, "paper-fixed-routing")
def test_plan_route_and_announcement_shape(tmp_path):
    spec = route(RoutingTable(), NodeId.PLAN, MessageKind.PLAN)
    assert spec.source == frozenset({NodeId.PLAN})
    assert spec.targets == frozenset({NodeId.WEB, NodeId.TOOL, NodeId.BP, NodeId.MGR})

    graph = new_graph(ALL_NODES)
    cache = ArtifactCache(tmp_path / "cache")
    for i in range(5):
        _, cache, graph = store(
            graph,
            cache,
            Artifact(data=bytes([i]) * 16, media_type="text/html", description="d", origin="web"),
        )
    assert len(graph.edges) == 5
    for edge in graph.edges:
        assert edge.source == frozenset({NodeId.LCS})
        assert edge.targets == AGENT_NODES
        assert len(edge.targets) == 8


@criterion(4, "cache-round-trip-and-channel-hygiene")
def test_200_artifact_round_trips(tmp_path):
    rng = random.Random(424242)
    started = time.monotonic()
    graph = new_graph(ALL_NODES)
    cache = ArtifactCache(tmp_path / "cache")
    sizes = [rng.randint(1, 8 * 1024) for _ in range(195)] + [
        256 * 1024,
        1024 * 1024,
        2 * 1024 * 1024,
        3 * 1024 * 1024,
        4 * 1024 * 1024,
    ]
    stored: list[tuple[str, bytes]] = []
    for size in sizes:
        data = rng.randbytes(size)
        cid, cache, graph = store(
            graph,
            cache,
            Artifact(data=data, media_type="application/octet-stream", description="blob", origin="t"),
        )
        stored.append((cid, data))
    for cid, data in stored:
        assert cache.retrieve(cid).data == data

    # Duplicate stores dedup to one entry (and still announce).
    dup_cid, dup_data = stored[0]
    before = len(cache)
    again, cache, graph = store(
        graph,
        cache,
        Artifact(data=dup_data, media_type="application/octet-stream", description="blob", origin="t"),
    )
    assert again == dup_cid
    assert len(cache) == before

    # No announcement payload contains artifact bytes.
    trace = to_trace_text(graph).encode("utf-8")
    for cid, data in stored:
        if len(data) >= 64:
            for offset in range(0, min(len(data), 1 << 20), 128 * 1024):
                assert data[offset : offset + 64] not in trace
    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"cache round-trip took {elapsed:.2f}s (budget 30s)"


@criterion(5, "deterministic-end-to-end-fixture-run")
def test_scripted_run_is_perfect_and_reproducible(tmp_path, fixture_server):
    outcomes = []
    for name in ("first", "second"):
        started = time.monotonic()
        config = make_academic_config(tmp_path / name)
        outcome = run(config, fixture_server=fixture_server)
        elapsed = time.monotonic() - started
        assert elapsed < 10.0, f"run took {elapsed:.2f}s (budget 10s)"
        assert outcome.state.phase is Phase.DONE
        outcomes.append(outcome)

    truth = load_ground_truth(
        FIXTURES / "truth" / "academic_2017_2019.jsonl",
        "academic",
        substitutions={"BASE_URL": fixture_server.base_url},
    )
    report = compare(outcomes[-1].records, truth)
    p, r, f1 = report.exact
    assert f1 == Fraction(1)
    assert f"{report.f1:.4f}" == "1.0000"

    first = outcomes[0].trace_path.read_bytes()
    second = outcomes[1].trace_path.read_bytes()
    assert first == second, "consecutive scripted runs must produce byte-identical traces"


@criterion(6, "metric-oracle-agreement")
def test_compare_matches_unit_counting_oracle_on_500_instances():
    rng = random.Random(987654)
    schema = RecordSchema("mini", ("K", "a", "b", "c", "d", "e"), "K")
    fields = list(schema.fields[1:])
    for _ in range(500):
        n_truth = rng.randint(0, 10)
        truth_records = [
            {
                "K": f"k{i}",
                **{
                    f: str(rng.choice([0, 1, 2.5, "x y", "None"]))
                    for f in rng.sample(fields, rng.randint(1, 5))
                },
            }
            for i in range(n_truth)
        ]
        collected = []
        for _ in range(rng.randint(0, 12)):
            record: dict = {"K": f"k{rng.randint(0, n_truth + 3)}"}
            for f in rng.sample(fields, rng.randint(0, 5)):
                record[f] = str(rng.choice([0, 1, 2.5, "x y", "corrupt"]))
            roll = rng.random()
            if roll < 0.08:
                record.pop("K")
            elif roll < 0.16:
                record["ROGUE_FIELD"] = "z"
            collected.append(record)
        truth = GroundTruth(tuple(truth_records), schema, "K")
        report = compare(collected, truth)
        expected = metric_oracle(collected, truth_records, set(schema.fields), ("K",))
        got = (report.matched_units, report.collected_units, report.truth_units)
        assert got == expected
        # Exact rational agreement, not just float closeness.
        m, c, t = expected
        assert report.exact[0] == (Fraction(m, c) if c else Fraction(0))
        assert report.exact[1] == (Fraction(m, t) if t else Fraction(0))

    # The worked example: 6 truth units, 4 matched of 5 collected.
    truth = GroundTruth(
        (
            {"K": "r1", "a": "1", "b": "2", "c": "3"},
            {"K": "r2", "a": "4", "b": "5", "c": "6"},
        ),
        RecordSchema("mini3", ("K", "a", "b", "c"), "K"),
        "K",
    )
    collected = [
        {"K": "r1", "a": "1", "b": "2", "c": "wrong"},
        {"K": "r2", "a": "4", "b": "5"},
    ]
    report = compare(collected, truth)
    assert round(report.precision, 4) == 0.8
    assert round(report.recall, 4) == 0.6667
    assert round(report.f1, 4) == 0.7273


@criterion(7, "broadcast-ablation-accounting")
def test_broadcast_context_is_larger_and_ratio_reported(tmp_path, fixture_server):
    default = run(make_academic_config(tmp_path / "oriented"), fixture_server=fixture_server)
    broadcast = run(
        make_academic_config(tmp_path / "broadcast", ablations=Ablations(broadcast=True)),
        fixture_server=fixture_server,
    )
    assert default.state.phase is Phase.DONE and broadcast.state.phase is Phase.DONE
    oriented_chars = default.accounting["delivered_context_chars"]["total"]
    broadcast_chars = broadcast.accounting["delivered_context_chars"]["total"]
    assert broadcast_chars >= oriented_chars
    assert broadcast_chars > oriented_chars  # fixture trace has non-broadcast edges

    bench_report = run_benchmark(
        FIXTURES / "suites" / "academic_only.json", output_root=tmp_path / "bench"
    )
    section = bench_report["ablations"]["broadcast"]
    ratio = section["per_task"]["academic-t3"]["ratio_vs_default"]
    assert ratio > 1.0
    on_disk = json.loads((tmp_path / "bench" / "report.json").read_text())
    assert on_disk["ablations"]["broadcast"]["per_task"]["academic-t3"]["ratio_vs_default"] == ratio


@criterion(8, "cache-bypass-trace-growth")
def test_cache_bypass_trace_strictly_larger(tmp_path, fixture_server):
    default = run(make_academic_config(tmp_path / "default"), fixture_server=fixture_server)
    bypass = run(
        make_academic_config(tmp_path / "bypass", ablations=Ablations(cache_bypass=True)),
        fixture_server=fixture_server,
    )
    assert default.state.phase is Phase.DONE and bypass.state.phase is Phase.DONE
    assert default.accounting["cache_entries"] >= 1
    assert bypass.trace_path.stat().st_size > default.trace_path.stat().st_size


@criterion(9, "sandbox-limits-and-isolation")
def test_sandbox_timeout_and_network_block(tmp_path, fixture_server):
    busy = Artifact(
        data=b"while True: pass", media_type="text/x-python", description="busy", origin="t"
    )
    result = execute_program(
        busy, "python3 program.py", ExecLimits(wall_clock_s=1.0), tmp_path / "busy"
    )
    assert result.timed_out
    assert result.exit_status is None
    assert result.duration_s <= 3.0

    probe_src = (
        "import urllib.request\n"
        "try:\n"
        f"    urllib.request.urlopen({fixture_server.base_url!r}, timeout=3)\n"
        "    print('CONNECTED')\n"
        "except Exception:\n"
        "    print('BLOCKED')\n"
    )
    probe = Artifact(
        data=probe_src.encode(), media_type="text/x-python", description="probe", origin="t"
    )
    result = execute_program(
        probe,
        "python3 program.py",
        ExecLimits(wall_clock_s=15.0, network_allowed=False),
        tmp_path / "probe",
    )
    assert result.stdout.strip() == b"BLOCKED"


@pytest.mark.live
@pytest.mark.skipif(
    not os.environ.get("LIVE_SMOKE_CONFIG"),
    reason="live smoke needs LIVE_SMOKE_CONFIG pointing at a remote-backend run config",
)
@criterion(10, "live-remote-backend-smoke")
def test_live_remote_backend_smoke(tmp_path):
    config = load_config(os.environ["LIVE_SMOKE_CONFIG"])
    config = dataclasses.replace(config, output_dir=tmp_path / "live")
    outcome = run(config)
    assert outcome.state.round <= config.budgets.max_rounds
    assert outcome.state.phase in (Phase.DONE, Phase.FAILED)
    if outcome.state.phase is Phase.DONE:
        assert outcome.records, "a completed live run must emit a schema-valid dataset"
        assert all(isinstance(r, dict) and r for r in outcome.records)
