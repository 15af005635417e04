"""webcrew: a multi-agent engine for automated web data collection.

A crew of eight role-specialized agents (manager, planner, web, tool,
blueprint, engineering, test, validation) collects a dataset from web
sources given a one-sentence instruction.  Inter-agent messages travel
over an oriented message hypergraph with per-role routing; bulky artifacts
live in a content-addressed cache behind a ninth graph node and are
announced by id only.  A deterministic fixture website, scripted backend
transcripts, and an attribute-level evaluation harness make complete runs
reproducible byte for byte.
"""

__version__ = "0.1.0"

from .hypergraph import (
    AGENT_NODES,
    ALL_NODES,
    EdgeSpec,
    Message,
    MessageHypergraph,
    MessageKind,
    NodeId,
    OrientedHyperedge,
    StructuredMessage,
    new_graph,
)
from .cache import Artifact, ArtifactCache, CacheEntry, store
from .config import RunConfig, load_config
from .orchestrator import Orchestrator, Phase, RunOutcome, WorkflowState, replay, run

__all__ = [
    "__version__",
    "AGENT_NODES",
    "ALL_NODES",
    "Artifact",
    "ArtifactCache",
    "CacheEntry",
    "EdgeSpec",
    "Message",
    "MessageHypergraph",
    "MessageKind",
    "NodeId",
    "Orchestrator",
    "OrientedHyperedge",
    "Phase",
    "RunConfig",
    "RunOutcome",
    "StructuredMessage",
    "WorkflowState",
    "load_config",
    "new_graph",
    "replay",
    "run",
    "store",
]
