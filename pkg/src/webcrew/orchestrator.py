"""The manager node: sequential scheduling through the research → blueprint
→ development → validation workflow, with bounded retries and termination.

The workflow is a linear pipeline with fail-loops: planning produces the
plan, the research squad gathers findings, the blueprint gates engineering,
test and validation reports gate completion, and failed reports loop back
to engineering while retries remain.  Every run terminates within the
configured round budget regardless of backend behavior; budget exhaustion
is a failed state, never an exception escape.

The manager itself is rule-based by default (the phase machine fully
determines its decisions); config can make it model-backed, in which case
its directives are formatted and committed like any other agent output.
"""

from __future__ import annotations

import json
import shutil
import time as _time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from . import formatter
from .cache import ArtifactCache, CacheRecorder
from .config import RunConfig
from .errors import (
    BudgetExceededError,
    ConfigError,
    FormatError,
    SchedulingError,
    ValidationError,
    WebcrewError,
)
from .bench.fixture import FixtureServer
from .bench.records import DatasetRecord, load_records
from .hypergraph import (
    ALL_NODES,
    Message,
    MessageHypergraph,
    MessageKind,
    NodeId,
    new_graph,
    to_trace_text,
)
from .profiles import build_default_profiles
from .runtime import (
    Backend,
    ReActTrace,
    RemoteBackend,
    ScriptedBackend,
    load_transcripts,
    react_loop,
    render_context,
)
from .toolbelt import (
    ExecutionLog,
    OfflineSearchProvider,
    RemoteSearchProvider,
    Toolbelt,
    build_default_toolbelt,
)


class Phase(str, Enum):
    PLANNING = "planning"
    RESEARCHING = "researching"
    BLUEPRINTING = "blueprinting"
    ENGINEERING = "engineering"
    TESTING = "testing"
    VALIDATING = "validating"
    DONE = "done"
    FAILED = "failed"

    def __str__(self) -> str:
        return self.value


TERMINAL_PHASES = {Phase.DONE, Phase.FAILED}

_PHASE_AGENT = {
    Phase.PLANNING: NodeId.PLAN,
    Phase.BLUEPRINTING: NodeId.BP,
    Phase.ENGINEERING: NodeId.ENGR,
    Phase.TESTING: NodeId.TEST,
    Phase.VALIDATING: NodeId.VAL,
}


@dataclass(frozen=True)
class WorkflowState:
    phase: Phase = Phase.PLANNING
    round: int = 0
    rounds_used: dict[str, int] = field(default_factory=dict)
    retries_used: dict[str, int] = field(default_factory=dict)
    research_step: int = 0
    directives_issued: int = 0
    last_error: str | None = None

    @property
    def terminal(self) -> bool:
        return self.phase in TERMINAL_PHASES


def _report_status(message: Message) -> str:
    """STATUS field of a report, tolerating formatter-bypass payloads."""
    status = message.payload.get("STATUS")
    if isinstance(status, str):
        return status.strip().lower()
    text = message.payload.get("TEXT", "")
    if isinstance(text, str):
        for line in text.splitlines():
            if line.strip().upper().startswith("STATUS:"):
                return line.split(":", 1)[1].strip().lower()
    return ""


def _latest_directive_target(graph: MessageHypergraph) -> NodeId:
    for message in reversed(graph.messages_in_order()):
        if message.kind is MessageKind.DIRECTIVE:
            name = str(message.payload.get("NEXT_AGENT", "")).strip()
            try:
                return NodeId(name)
            except ValueError:
                break
    return NodeId.WEB


def schedule_next(state: WorkflowState, graph: MessageHypergraph) -> NodeId | Phase:
    """Deterministic mapping from workflow phase to the next agent.

    Research steps follow the latest committed manager directive's
    NEXT_AGENT field (defaulting to the web agent).  Terminal phases return
    themselves.  Raises SchedulingError when the phase contradicts the
    graph (engineering scheduled with no blueprint committed).
    """
    if state.phase in TERMINAL_PHASES:
        return state.phase
    if state.phase is Phase.RESEARCHING:
        agent = _latest_directive_target(graph)
        if agent not in (NodeId.WEB, NodeId.TOOL):
            raise SchedulingError(f"directive names non-research agent {agent}")
        return agent
    agent = _PHASE_AGENT[state.phase]
    kinds_present = {m.kind for m in graph.messages_in_order()}
    if state.phase in (Phase.ENGINEERING, Phase.TESTING, Phase.VALIDATING):
        if MessageKind.BLUEPRINT not in kinds_present:
            raise SchedulingError(f"{state.phase} scheduled but no blueprint committed")
    if state.phase is Phase.VALIDATING and MessageKind.TEST_REPORT not in kinds_present:
        raise SchedulingError("validating scheduled but no test report committed")
    return agent


@dataclass
class RunOutcome:
    state: WorkflowState
    graph: MessageHypergraph
    output_dir: Path
    trace_path: Path
    dataset_path: Path | None
    records: list[DatasetRecord]
    accounting: dict
    react_traces: list[tuple[str, ReActTrace]]

    @property
    def ok(self) -> bool:
        return self.state.phase is Phase.DONE


class Orchestrator:
    """Owns one run: the single-writer commit path and the phase machine."""

    def __init__(self, config: RunConfig, fixture_server: FixtureServer | None = None):
        self.config = config
        self._external_fixture = fixture_server
        self._own_fixture: FixtureServer | None = None

    # -- wiring ---------------------------------------------------------------

    def _effective_base_url(self) -> str:
        if self._external_fixture is not None:
            return self._external_fixture.base_url
        if self._own_fixture is not None:
            return self._own_fixture.base_url
        return self.config.fixture_base_url

    def _start_fixture_if_needed(self) -> None:
        if self._external_fixture is not None or not self.config.fixture_autostart:
            return
        if not self.config.fixture_dir:
            raise ConfigError("fixture_autostart requires fixture_dir")
        port = 0
        if self.config.fixture_base_url:
            from urllib.parse import urlparse

            parsed = urlparse(self.config.fixture_base_url)
            port = parsed.port or 0
        self._own_fixture = FixtureServer(self.config.fixture_dir, port=port).start()

    def _build_backend(self, substitutions: dict[str, str]) -> Backend:
        b = self.config.backend
        if b.variant == "scripted":
            return ScriptedBackend(load_transcripts(b.transcript_dir, substitutions))
        return RemoteBackend(
            endpoint=b.endpoint,
            model=b.model,
            api_key_env=b.api_key_env,
            timeout_s=b.timeout_s,
            max_retries=b.max_retries,
        )

    def _build_toolbelt(
        self, recorder: CacheRecorder, base_url: str, log: ExecutionLog
    ) -> Toolbelt:
        cfg = self.config
        provider = None
        if cfg.search_provider == "offline" and cfg.fixture_dir and base_url:
            provider = OfflineSearchProvider(cfg.fixture_dir, base_url)
        elif cfg.search_provider == "remote" and cfg.search_endpoint:
            provider = RemoteSearchProvider(cfg.search_endpoint)
        allowed = cfg.allowed_hosts
        if allowed is not None and base_url:
            from urllib.parse import urlparse

            netloc = urlparse(base_url).netloc
            if netloc and netloc not in allowed:
                allowed = allowed + [netloc]
        return build_default_toolbelt(
            recorder,
            allowed_hosts=allowed,
            politeness_delay_s=cfg.politeness_delay_s,
            search_provider=provider,
            exec_limits=cfg.sandbox_limits,
            sandbox_root=cfg.output_dir / "sandbox",
            execution_log=log,
        )

    # -- the run ----------------------------------------------------------------

    def run(self) -> RunOutcome:
        cfg = self.config
        if not cfg.instruction.strip():
            raise ValidationError("instruction must be non-empty")

        started = _time.monotonic()
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        self._start_fixture_if_needed()
        try:
            return self._run_inner(started)
        finally:
            if self._own_fixture is not None:
                self._own_fixture.stop()
                self._own_fixture = None

    def _run_inner(self, started: float) -> RunOutcome:
        cfg = self.config
        base_url = self._effective_base_url()
        substitutions = {"BASE_URL": base_url} if base_url else {}

        cache = ArtifactCache(cfg.output_dir / "cache")
        recorder = CacheRecorder(cache)
        exec_log = ExecutionLog()
        belt = self._build_toolbelt(recorder, base_url, exec_log)
        backend = self._build_backend(substitutions)
        profiles = build_default_profiles()
        table = cfg.routing_table()

        schemas = cfg.schema_registry()
        for node, profile in profiles.items():
            unknown_tools = [t for t in profile.tools if t not in belt.names()]
            if unknown_tools:
                raise ConfigError(
                    f"profile {node.value} names unregistered tools: {unknown_tools}"
                )

        graph = new_graph(ALL_NODES)
        state = WorkflowState()
        accounting: dict[str, dict[str, int]] = {
            n.value: {"executions": 0, "context_chars": 0} for n in ALL_NODES
        }
        react_traces: list[tuple[str, ReActTrace]] = []

        def commit_agent_output(g: MessageHypergraph, role: NodeId, raw) -> MessageHypergraph:
            return formatter.commit_formatted(
                g,
                role,
                formatter.emittable_kind(role),
                raw,
                table=table,
                schemas=schemas,
                bypass=cfg.ablations.formatter_bypass,
                broadcast=cfg.ablations.broadcast,
            )

        def drain_announcements(g: MessageHypergraph) -> MessageHypergraph:
            for cid in recorder.drain():
                g = cache.announce(
                    g, cid, table=table, embed_bytes=cfg.ablations.cache_bypass
                )
            return g

        def emit_directive(g: MessageHypergraph, next_agent: NodeId, text: str) -> MessageHypergraph:
            payload = {"NEXT_AGENT": next_agent.value, "INSTRUCTION": text}
            return formatter.commit_formatted(
                g,
                NodeId.MGR,
                MessageKind.DIRECTIVE,
                payload,
                table=table,
                schemas=schemas,
                bypass=cfg.ablations.formatter_bypass,
                broadcast=cfg.ablations.broadcast,
            )

        def execute(role: NodeId, g: MessageHypergraph, extra: tuple[str, ...]) -> tuple[str, MessageHypergraph]:
            profile = profiles[role]
            context = g.context(role, g.clock + 1)
            rendered = render_context(profile, context, belt)
            delivered = sum(len(e["content"]) for e in rendered[1:]) + sum(len(x) for x in extra)
            accounting[role.value]["executions"] += 1
            accounting[role.value]["context_chars"] += delivered
            raw, trace = react_loop(
                profile, context, belt, backend, cfg.budgets.react_budget, extra=extra
            )
            react_traces.append((role.value, trace))
            return raw, g

        # The run instruction enters the graph as the manager's first directive.
        graph = emit_directive(graph, NodeId.PLAN, cfg.instruction)

        while not state.terminal:
            if state.round >= cfg.budgets.max_rounds:
                state = replace(state, phase=Phase.FAILED, last_error="round budget exhausted")
                break
            try:
                if state.phase is Phase.RESEARCHING and state.directives_issued <= state.research_step:
                    next_name = cfg.research_sequence[state.research_step]
                    step_text = (
                        f"research step {state.research_step + 1} of "
                        f"{len(cfg.research_sequence)}: continue per the plan"
                    )
                    if cfg.mgr_backend == "llm":
                        raw, graph = execute(NodeId.MGR, graph, ())
                        state = replace(state, round=state.round + 1)
                        graph = drain_announcements(graph)
                        graph = commit_agent_output(graph, NodeId.MGR, raw)
                    else:
                        graph = emit_directive(graph, NodeId(next_name), step_text)
                    state = replace(state, directives_issued=state.directives_issued + 1)
                    if state.round >= cfg.budgets.max_rounds:
                        state = replace(
                            state, phase=Phase.FAILED, last_error="round budget exhausted"
                        )
                        break

                agent = schedule_next(state, graph)
                assert isinstance(agent, NodeId)

                raw, graph = execute(agent, graph, ())
                state = replace(
                    state,
                    round=state.round + 1,
                    rounds_used={
                        **state.rounds_used,
                        state.phase.value: state.rounds_used.get(state.phase.value, 0) + 1,
                    },
                )
                graph = drain_announcements(graph)
                try:
                    graph = commit_agent_output(graph, agent, raw)
                except FormatError as exc:
                    # One reformat round: re-invoke with the error appended.
                    if state.round >= cfg.budgets.max_rounds:
                        state = replace(
                            state, phase=Phase.FAILED, last_error="round budget exhausted"
                        )
                        break
                    raw, graph = execute(agent, graph, (f"FORMAT ERROR: {exc}",))
                    state = replace(state, round=state.round + 1)
                    graph = drain_announcements(graph)
                    try:
                        graph = commit_agent_output(graph, agent, raw)
                    except FormatError as exc2:
                        state = replace(
                            state,
                            phase=Phase.FAILED,
                            last_error=f"{agent.value} output rejected twice: {exc2}",
                        )
                        break
                state = self._advance(state, graph)
            except (WebcrewError, ValueError) as exc:
                if isinstance(exc, BudgetExceededError):
                    detail = f"deliberation budget exceeded for {exc.role}"
                else:
                    detail = str(exc)
                state = replace(state, phase=Phase.FAILED, last_error=detail)
                break

        return self._finalize(state, graph, cache, exec_log, accounting, react_traces, started)

    # -- transitions ---------------------------------------------------------------

    def _advance(self, state: WorkflowState, graph: MessageHypergraph) -> WorkflowState:
        message = graph.messages_in_order()[-1]
        cfg = self.config
        phase = state.phase
        if phase is Phase.PLANNING and message.kind is MessageKind.PLAN:
            return replace(state, phase=Phase.RESEARCHING, research_step=0, directives_issued=0)
        if phase is Phase.RESEARCHING and message.kind is MessageKind.FINDING:
            step = state.research_step + 1
            if step >= len(cfg.research_sequence):
                return replace(state, phase=Phase.BLUEPRINTING, research_step=step)
            return replace(state, research_step=step)
        if phase is Phase.BLUEPRINTING and message.kind is MessageKind.BLUEPRINT:
            defect = self._blueprint_defect(message)
            if defect:
                return replace(state, phase=Phase.FAILED, last_error=f"blueprint invalid: {defect}")
            return replace(state, phase=Phase.ENGINEERING)
        if phase is Phase.ENGINEERING and message.kind is MessageKind.CODE_REPORT:
            return replace(state, phase=Phase.TESTING)
        if phase is Phase.TESTING and message.kind is MessageKind.TEST_REPORT:
            if _report_status(message) == "pass":
                return replace(state, phase=Phase.VALIDATING)
            return self._consume_retry(state, "testing")
        if phase is Phase.VALIDATING and message.kind is MessageKind.VALIDATION_REPORT:
            if _report_status(message) == "pass":
                return replace(state, phase=Phase.DONE)
            return self._consume_retry(state, "validating")
        return state

    def _consume_retry(self, state: WorkflowState, phase_name: str) -> WorkflowState:
        used = state.retries_used.get(phase_name, 0) + 1
        if used > self.config.budgets.phase_retries:
            return replace(
                state,
                phase=Phase.FAILED,
                retries_used={**state.retries_used, phase_name: used},
                last_error=f"{phase_name} failures exhausted {self.config.budgets.phase_retries} retries",
            )
        return replace(
            state,
            phase=Phase.ENGINEERING,
            retries_used={**state.retries_used, phase_name: used},
        )

    def _blueprint_defect(self, message: Message) -> str | None:
        if self.config.ablations.formatter_bypass:
            return None  # free-text payloads carry no inspectable fields
        method = str(message.payload.get("ACCESS_METHOD", "")).strip().lower()
        if method not in ("crawl", "rest-api"):
            return f"ACCESS_METHOD must be crawl or rest-api, got {method!r}"
        targets = message.payload.get("TARGETS") or []
        if not targets:
            return "TARGETS is empty"
        schema = message.payload.get("OUTPUT_SCHEMA") or []
        if not schema:
            return "OUTPUT_SCHEMA names no attributes"
        return None

    # -- outputs ------------------------------------------------------------------

    def _finalize(
        self,
        state: WorkflowState,
        graph: MessageHypergraph,
        cache: ArtifactCache,
        exec_log: ExecutionLog,
        accounting: dict,
        react_traces: list[tuple[str, ReActTrace]],
        started: float,
    ) -> RunOutcome:
        cfg = self.config
        out = cfg.output_dir
        trace_text = to_trace_text(graph)
        trace_path = out / "trace.jsonl"
        trace_path.write_text(trace_text, encoding="utf-8")

        dataset_path: Path | None = None
        records: list[DatasetRecord] = []
        if state.phase is Phase.DONE:
            last = exec_log.last
            product = None
            if last is not None and cfg.dataset_filename in last.products:
                product = Path(last.sandbox_dir) / cfg.dataset_filename
            if product is None or not product.is_file():
                state = replace(
                    state,
                    phase=Phase.FAILED,
                    last_error=f"run completed but produced no {cfg.dataset_filename}",
                )
            else:
                dataset_path = out / cfg.dataset_filename
                shutil.copyfile(product, dataset_path)
                records = load_records(dataset_path)

        total_chars = sum(a["context_chars"] for a in accounting.values())
        report = {
            "phase": state.phase.value,
            "rounds": state.round,
            "rounds_used": dict(sorted(state.rounds_used.items())),
            "retries_used": dict(sorted(state.retries_used.items())),
            "last_error": state.last_error,
            "edges": len(graph.edges),
            "messages": len(graph.messages),
            "cache_entries": len(cache),
            "trace_bytes": len(trace_text.encode("utf-8")),
            "dataset_records": len(records),
            "delivered_context_chars": {
                "total": total_chars,
                "per_agent": {k: v["context_chars"] for k, v in sorted(accounting.items())},
            },
            "executions_per_agent": {
                k: v["executions"] for k, v in sorted(accounting.items())
            },
            "ablations": {
                "broadcast": cfg.ablations.broadcast,
                "formatter_bypass": cfg.ablations.formatter_bypass,
                "cache_bypass": cfg.ablations.cache_bypass,
            },
        }
        (out / "report.json").write_text(
            json.dumps(report, ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
        )
        # Wall clock lives in a sidecar so report.json stays byte-reproducible.
        (out / "timing.json").write_text(
            json.dumps({"wall_clock_s": round(_time.monotonic() - started, 3)}) + "\n",
            encoding="utf-8",
        )
        self._write_agent_log(out / "agent_log.txt", react_traces)
        (out / "state.json").write_text(
            json.dumps(
                {
                    "phase": state.phase.value,
                    "round": state.round,
                    "rounds_used": state.rounds_used,
                    "retries_used": state.retries_used,
                    "last_error": state.last_error,
                },
                ensure_ascii=False,
                indent=1,
            )
            + "\n",
            encoding="utf-8",
        )
        return RunOutcome(
            state=state,
            graph=graph,
            output_dir=out,
            trace_path=trace_path,
            dataset_path=dataset_path,
            records=records,
            accounting=report,
            react_traces=react_traces,
        )

    @staticmethod
    def _write_agent_log(path: Path, react_traces: list[tuple[str, ReActTrace]]) -> None:
        lines = []
        for i, (role, trace) in enumerate(react_traces, start=1):
            lines.append(f"=== execution {i}: {role} ({len(trace)} steps) ===")
            for step in trace.steps:
                lines.append(f"THOUGHT: {step.thought}")
                lines.append(f"ACTION: {step.action}")
                if step.observation:
                    lines.append(f"OBSERVATION: {step.observation}")
        path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def run(config: RunConfig, fixture_server: FixtureServer | None = None) -> RunOutcome:
    """Execute one collection run end to end."""
    return Orchestrator(config, fixture_server=fixture_server).run()


# -- offline replay -----------------------------------------------------------

@dataclass(frozen=True)
class ReplayReport:
    edges: int
    messages: int
    violations: tuple[str, ...]
    contexts_rendered: int

    @property
    def ok(self) -> bool:
        return not self.violations


def replay(trace_path: str | Path) -> ReplayReport:
    """Rebuild a trace, validate every invariant, and re-render all contexts."""
    from .hypergraph import from_trace_text

    text = Path(trace_path).read_text(encoding="utf-8")
    try:
        graph = from_trace_text(text)
    except WebcrewError as exc:
        return ReplayReport(edges=0, messages=0, violations=(str(exc),), contexts_rendered=0)
    violations = tuple(graph.validate())
    profiles = build_default_profiles()
    rendered = 0
    for message in graph.messages_in_order():
        if message.author is NodeId.LCS:
            continue
        context = graph.context(message.author, message.time)
        render_context(profiles[message.author], context)
        rendered += 1
    return ReplayReport(
        edges=len(graph.edges),
        messages=len(graph.messages),
        violations=violations,
        contexts_rendered=rendered,
    )
