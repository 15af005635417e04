"""One agent step: context rendering, model backends, and the ReAct loop.

A step renders the agent's delivered context into a role-tagged request
document, sends it to a backend (deterministic scripted transcripts, or a
remote chat-completion endpoint), and — inside the deliberation loop —
alternates tool invocations with further backend calls until the agent
emits its final output or the call budget runs out.

Tool invocations are recorded as observations only; they never create
hyperedges.  Only the agent's final formatted output is committed.
"""

from __future__ import annotations

import json
import os
import time as _time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Protocol

import requests

from .errors import BackendError, BudgetExceededError, ScriptError, WebcrewError
from .formatter import split_labeled_sections
from .hypergraph import Message, NodeId
from .profiles import AgentProfile, output_fields_hint

RequestDocument = list[dict[str, str]]

_REACT_LABELS = ["THOUGHT", "ACTION", "ACTION_INPUT", "FINAL"]


# -- rendering ---------------------------------------------------------------

def render_payload(payload: dict[str, Any]) -> str:
    """Payload fields as ``FIELD: value`` lines, bullets for text lists."""
    lines: list[str] = []
    for name, value in payload.items():
        if isinstance(value, list) and all(isinstance(v, str) for v in value):
            if value:
                lines.append(f"{name}:")
                lines.extend(f"- {item}" for item in value)
            else:
                lines.append(f"{name}: (none)")
        elif isinstance(value, (list, dict)):
            lines.append(f"{name}: {json.dumps(value, ensure_ascii=False)}")
        else:
            lines.append(f"{name}: {value}")
    return "\n".join(lines)


def render_message(message: Message) -> str:
    header = f"[{message.author}/{message.kind} t={message.time}]"
    body = render_payload(message.payload)
    return f"{header}\n{body}" if body else header


class ToolDescriber(Protocol):
    def describe(self, names: tuple[str, ...]) -> str: ...


def render_system(profile: AgentProfile, tools: ToolDescriber | None = None) -> str:
    tool_text = tools.describe(profile.tools) if tools is not None else (
        "\n".join(f"- {name}" for name in profile.tools) or "(none)"
    )
    return profile.prompt_template.format(
        role=profile.node.value,
        objective=profile.objective,
        constraints=profile.constraints,
        tools=tool_text or "(none)",
        fields=output_fields_hint(profile.node),
    )


def render_context(
    profile: AgentProfile,
    context: list[Message],
    tools: ToolDescriber | None = None,
) -> RequestDocument:
    """The request document: one system entry, then one entry per message.

    History entries keep delivery order and are tagged with the author role
    and message kind, so the backend sees exactly the agent's delivered
    context and nothing else.
    """
    doc: RequestDocument = [{"role": "system", "content": render_system(profile, tools)}]
    for message in context:
        doc.append({"role": "user", "content": render_message(message)})
    return doc


# -- backends ----------------------------------------------------------------

class Backend(Protocol):
    def complete(self, role: NodeId, request: RequestDocument) -> str: ...


class ScriptedBackend:
    """Deterministic playback: output i for role r is transcript[r][i].

    Requesting beyond the end of a role's transcript raises ScriptError;
    there is never silent looping.
    """

    def __init__(self, transcripts: dict[str, list[str]]):
        self.transcripts = {role: list(outputs) for role, outputs in transcripts.items()}
        self._cursor: dict[str, int] = {role: 0 for role in self.transcripts}

    def complete(self, role: NodeId, request: RequestDocument) -> str:
        key = role.value
        outputs = self.transcripts.get(key)
        if outputs is None:
            raise ScriptError(f"no transcript for role {key}")
        i = self._cursor.get(key, 0)
        if i >= len(outputs):
            raise ScriptError(f"transcript for role {key} exhausted after {i} outputs")
        self._cursor[key] = i + 1
        return outputs[i]

    def remaining(self, role: NodeId) -> int:
        key = role.value
        return len(self.transcripts.get(key, [])) - self._cursor.get(key, 0)


def load_transcripts(
    directory: str | Path, substitutions: dict[str, str] | None = None
) -> dict[str, list[str]]:
    """Load per-role ordered transcript files.

    Layout: ``<dir>/<role>/<NN>.txt``, ordered by filename within each role.
    Occurrences of ``{NAME}`` for each substitution key are replaced at load
    time (used to point static transcripts at the current fixture base URL).
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ScriptError(f"transcript directory not found: {directory}")
    transcripts: dict[str, list[str]] = {}
    for role_dir in sorted(p for p in directory.iterdir() if p.is_dir()):
        outputs = []
        for path in sorted(role_dir.glob("*.txt")):
            text = path.read_text(encoding="utf-8")
            for key, value in (substitutions or {}).items():
                text = text.replace("{" + key + "}", value)
            outputs.append(text)
        transcripts[role_dir.name] = outputs
    return transcripts


class RemoteBackend:
    """HTTP chat-completion backend: POSTs the request document, returns text.

    Transport failures are retried up to ``max_retries`` times with
    exponential backoff; malformed completions are never retried — they
    surface to the formatter, whose error becomes the manager's problem.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = "",
        timeout_s: float = 30.0,
        max_retries: int = 2,
        backoff_base_s: float = 1.0,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self.backoff_base_s = backoff_base_s

    def complete(self, role: NodeId, request: RequestDocument) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        body = {"model": self.model, "messages": request}
        last_exc: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = requests.post(
                    self.endpoint, json=body, headers=headers, timeout=self.timeout_s
                )
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_exc = exc
                if attempt < self.max_retries:
                    _time.sleep(self.backoff_base_s * (2**attempt))
                continue
            if resp.status_code != 200:
                raise BackendError(
                    f"backend returned status {resp.status_code} for {role.value}"
                )
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendError(f"malformed completion payload: {exc}") from exc
        raise BackendError(
            f"backend unreachable after {self.max_retries + 1} attempts: {last_exc}"
        )


def step(profile: AgentProfile, context: list[Message], backend: Backend,
         tools: ToolDescriber | None = None) -> str:
    """A single backend call on the rendered context; output returned verbatim."""
    return backend.complete(profile.node, render_context(profile, context, tools))


# -- the deliberation loop -----------------------------------------------------

@dataclass(frozen=True)
class ReActStep:
    thought: str
    action: str  # tool name, or "finish"
    observation: str


@dataclass(frozen=True)
class ReActTrace:
    steps: tuple[ReActStep, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class ParsedOutput:
    thought: str
    action: str | None
    action_input: dict[str, Any]
    final: str | None


def parse_react(raw: str) -> ParsedOutput:
    """Split one model output into its THOUGHT/ACTION/ACTION_INPUT/FINAL blocks.

    ``FINAL`` wins over ``ACTION`` when both appear.  Output with neither is
    treated as a bare final answer by the loop.
    """
    sections = split_labeled_sections(raw, _REACT_LABELS)
    thought = sections.get("THOUGHT", "")
    final = sections.get("FINAL")
    action = sections.get("ACTION")
    args: dict[str, Any] = {}
    if final is None and action is not None:
        action = action.strip()
        raw_input = sections.get("ACTION_INPUT", "").strip()
        if raw_input:
            try:
                parsed = json.loads(raw_input)
                args = parsed if isinstance(parsed, dict) else {"input": parsed}
            except json.JSONDecodeError:
                args = {"input": raw_input}
    return ParsedOutput(thought=thought, action=action, action_input=args, final=final)


class ToolDispatcher(Protocol):
    def dispatch(self, caller: NodeId, name: str, args: dict[str, Any],
                 allowed: tuple[str, ...]) -> str: ...
    def describe(self, names: tuple[str, ...]) -> str: ...


def react_loop(
    profile: AgentProfile,
    context: list[Message],
    tools: ToolDispatcher,
    backend: Backend,
    budget: int,
    extra: tuple[str, ...] = (),
) -> tuple[str, ReActTrace]:
    """Alternate backend calls and tool invocations until the agent finishes.

    Returns the raw final output plus the step trace.  Unknown tools and
    tool failures become error observations and the loop continues; budget
    exhaustion raises BudgetExceededError carrying the partial trace.
    Never performs more than ``budget`` backend calls.  ``extra`` entries
    (reformat-round error notes) are appended to the request after the
    delivered context.
    """
    if budget < 1:
        raise ValueError("deliberation budget must be at least 1")
    conversation = render_context(profile, context, tools)
    conversation += [{"role": "user", "content": note} for note in extra]
    steps: list[ReActStep] = []
    for _ in range(budget):
        raw = backend.complete(profile.node, conversation)
        parsed = parse_react(raw)
        if parsed.final is not None or parsed.action is None:
            final = parsed.final if parsed.final is not None else raw
            steps.append(ReActStep(thought=parsed.thought, action="finish", observation=""))
            return final, ReActTrace(tuple(steps))
        try:
            observation = tools.dispatch(
                profile.node, parsed.action, parsed.action_input, profile.tools
            )
        except (WebcrewError, ValueError) as exc:
            observation = f"ERROR: {exc}"
        steps.append(ReActStep(thought=parsed.thought, action=parsed.action, observation=observation))
        conversation = conversation + [
            {"role": "assistant", "content": raw},
            {"role": "user", "content": f"OBSERVATION: {observation}"},
        ]
    raise BudgetExceededError(profile.node.value, budget, ReActTrace(tuple(steps)))
