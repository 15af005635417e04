"""Default agent profiles: objectives, constraints, and tool assignments.

Each of the eight agents carries one profile per run.  The prompt template
is rendered into the leading system entry of every model request; the
``{tools}`` and ``{fields}`` slots are filled from the toolbelt registry
and the role's output schema.
"""

from __future__ import annotations

from dataclasses import dataclass

from .formatter import DEFAULT_SCHEMAS, emittable_kind
from .hypergraph import NodeId

DEFAULT_PROMPT_TEMPLATE = """\
You are the {role} agent on a multi-agent web data collection crew.

OBJECTIVE: {objective}
CONSTRAINTS: {constraints}

TOOLS:
{tools}

Work in deliberate steps. Reply with labeled blocks:
THOUGHT: what you are reasoning about
ACTION: <tool name>            (only when invoking a tool)
ACTION_INPUT: <JSON arguments for the tool>
FINAL: <your finished output>  (only when done)

When you emit FINAL, provide these labeled fields:
{fields}"""


@dataclass(frozen=True)
class AgentProfile:
    """Role identity plus the prompt material and tool set for one run."""

    node: NodeId
    objective: str
    constraints: str
    prompt_template: str = DEFAULT_PROMPT_TEMPLATE
    tools: tuple[str, ...] = ()


_ROLE_OBJECTIVES: dict[NodeId, tuple[str, str, tuple[str, ...]]] = {
    NodeId.MGR: (
        "Track workflow progress and direct which agent acts next.",
        "Issue one directive at a time; never do another role's work.",
        (),
    ),
    NodeId.PLAN: (
        "Break the data collection instruction into a concrete, ordered plan.",
        "Keep steps small, verifiable, and tied to the instruction.",
        (),
    ),
    NodeId.WEB: (
        "Visit the target pages and report the structure and evidence they contain.",
        "Fetch only allowed hosts; cache page evidence instead of pasting it into messages.",
        ("fetch_url", "clean_html", "search", "cache_get"),
    ),
    NodeId.TOOL: (
        "Run utility tools (search, format conversion) and summarize the results.",
        "Report tool output faithfully; cache bulky results and reference the id.",
        ("search", "convert", "cache_get"),
    ),
    NodeId.BP: (
        "Condense the squad's findings into an actionable development blueprint.",
        "Name concrete targets, extraction rules, and validation rules; no vague guidance.",
        ("cache_get",),
    ),
    NodeId.ENGR: (
        "Write the collection program exactly as the blueprint prescribes and cache it.",
        "Follow the blueprint's targets and output schema; cache the program, never inline it.",
        ("cache_get", "cache_store"),
    ),
    NodeId.TEST: (
        "Execute the cached program in the sandbox and report the outcome.",
        "Report pass or fail honestly, with the stdout cache id and every failure seen.",
        ("cache_get", "execute_program"),
    ),
    NodeId.VAL: (
        "Check the collected data against the blueprint's validation rules.",
        "Check every declared rule; report defects precisely or an explicit pass.",
        ("cache_get",),
    ),
}


def build_default_profiles() -> dict[NodeId, AgentProfile]:
    return {
        node: AgentProfile(node=node, objective=obj, constraints=cons, tools=tools)
        for node, (obj, cons, tools) in _ROLE_OBJECTIVES.items()
    }


def output_fields_hint(node: NodeId) -> str:
    """The ``{fields}`` slot: one line per schema field of the role's output."""
    try:
        kind = emittable_kind(node)
    except Exception:
        return "(free text)"
    schema = DEFAULT_SCHEMAS[(node, kind)]
    lines = []
    for spec in schema.fields:
        suffix = "" if spec.required else ", optional"
        lines.append(f"- {spec.name} ({spec.shape}{suffix})")
    return "\n".join(lines)
