from __future__ import annotations

import dataclasses
import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from webcrew.bench.fixture import serve_fixture
from webcrew.config import load_config
from webcrew.hypergraph import (
    ALL_NODES,
    EdgeSpec,
    MessageHypergraph,
    MessageKind,
    StructuredMessage,
    new_graph,
)
from webcrew.orchestrator import run

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def fixture_server(fixtures_dir):
    server = serve_fixture(fixtures_dir / "site")
    yield server
    server.stop()


def make_academic_config(output_dir: Path, **overrides):
    config = load_config(FIXTURES / "configs" / "academic.json")
    config = dataclasses.replace(
        config, output_dir=output_dir, fixture_autostart=False, **overrides
    )
    return config


@pytest.fixture(scope="session")
def academic_outcome(fixture_server, tmp_path_factory):
    """One shared default-mode scripted run; tests that only read it reuse this."""
    config = make_academic_config(tmp_path_factory.mktemp("academic-shared"))
    return run(config, fixture_server=fixture_server)


def random_valid_graph(rng: random.Random, n_messages: int) -> MessageHypergraph:
    """A graph grown by ``n_messages`` random valid commits."""
    graph = new_graph(ALL_NODES)
    nodes = sorted(ALL_NODES)
    kinds = list(MessageKind)
    for _ in range(n_messages):
        source = rng.choice(nodes)
        others = [n for n in nodes if n is not source]
        targets = frozenset(rng.sample(others, rng.randint(1, len(others))))
        payload = {"SEQ": str(rng.randint(0, 10**6))}
        graph = graph.commit(
            EdgeSpec(frozenset({source}), targets),
            StructuredMessage(author=source, kind=rng.choice(kinds), payload=payload),
        )
    return graph
