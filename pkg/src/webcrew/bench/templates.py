"""Symbolic instruction templates for the three benchmark domains.

A template is a sentence with bracketed placeholders; instantiation
substitutes a complete binding and refuses partial or surplus bindings.
Academic and stock tasks are exercised end to end against the fixture
corpus; the sport templates are carried for completeness and instantiate
the same way.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from ..errors import BindingError

_PLACEHOLDER_RE = re.compile(r"\[([^\[\]]+)\]")


@dataclass(frozen=True)
class InstructionTemplate:
    id: str
    pattern: str
    domain: str
    record_schema: str  # key into RECORD_SCHEMAS

    def __post_init__(self) -> None:
        if not self.placeholder_names:
            # templates without placeholders are legal (none shipped today)
            return
        seen = set()
        for name in self.placeholder_names:
            if name in seen:
                raise ValueError(f"template {self.id} repeats placeholder [{name}]")
            seen.add(name)

    @property
    def placeholder_names(self) -> list[str]:
        return _PLACEHOLDER_RE.findall(self.pattern)


TEMPLATES: dict[str, InstructionTemplate] = {
    t.id: t
    for t in [
        # academic
        InstructionTemplate(
            "T1", "Collect all papers accepted in [Conference] [Year].", "academic", "academic"
        ),
        InstructionTemplate(
            "T2",
            "Collect all papers accepted in [Conference] [Year] [Track].",
            "academic",
            "academic",
        ),
        InstructionTemplate(
            "T3",
            "Collect all papers accepted in [Conference] from [Start Year] to [End Year].",
            "academic",
            "academic",
        ),
        # stock
        InstructionTemplate(
            "T4", "Collect daily stock information for [Stock] in [Year].", "stock", "stock"
        ),
        InstructionTemplate(
            "T5",
            "Collect daily stock information for [Stock] between [Start Date] and [End Date].",
            "stock",
            "stock",
        ),
        InstructionTemplate(
            "T6", "Collect daily stock information for [Stocks] on [Date].", "stock", "stock"
        ),
        # basketball, team level
        InstructionTemplate(
            "T7",
            "Collect NBA [Team Name] all regular season stats until 2024.",
            "sport",
            "nba-team",
        ),
        InstructionTemplate(
            "T8",
            "Collect NBA [Team Name] regular season stats from [Start Year] to [End Year].",
            "sport",
            "nba-team",
        ),
        InstructionTemplate(
            "T9", "Collect all NBA regular season stats in [Year].", "sport", "nba-team"
        ),
        # basketball, player level
        InstructionTemplate(
            "T10",
            "Collect NBA player [Name] all regular season stats until 2024.",
            "sport",
            "nba-player",
        ),
        InstructionTemplate(
            "T11",
            "Collect NBA player [Name] regular season stats from [Start Year] to [End Year].",
            "sport",
            "nba-player",
        ),
        InstructionTemplate(
            "T12",
            "Collect NBA players [Names] regular season stats in [Year].",
            "sport",
            "nba-player",
        ),
        # baseball, hitting
        InstructionTemplate(
            "T13",
            "Collect MLB [Team] all regular season hitting stats until 2024.",
            "sport",
            "mlb-hitting",
        ),
        InstructionTemplate(
            "T14",
            "Collect MLB [Team] regular season hitting stats from [Start Year] to [End Year].",
            "sport",
            "mlb-hitting",
        ),
        InstructionTemplate(
            "T15",
            "Collect all MLB teams regular season hitting stats in [Year].",
            "sport",
            "mlb-hitting",
        ),
        # baseball, pitching
        InstructionTemplate(
            "T16",
            "Collect MLB [Team] all regular season pitching stats until 2024.",
            "sport",
            "mlb-pitching",
        ),
        InstructionTemplate(
            "T17",
            "Collect MLB [Team] regular season pitch stats from [Start Year] to [End Year].",
            "sport",
            "mlb-pitching",
        ),
        InstructionTemplate(
            "T18",
            "Collect all MLB teams' regular season pitching stats in [Year].",
            "sport",
            "mlb-pitching",
        ),
    ]
}


def instantiate_template(template: InstructionTemplate, bindings: Mapping[str, str]) -> str:
    """Substitute placeholder bindings into the template pattern.

    Bindings must cover the placeholder names exactly; BindingError lists
    what is missing or unexpected.  No bracketed token survives in the
    output.
    """
    names = template.placeholder_names
    missing = [n for n in names if n not in bindings]
    extra = [k for k in bindings if k not in names]
    if missing or extra:
        raise BindingError(missing, extra)
    text = template.pattern
    for name in names:
        text = text.replace(f"[{name}]", str(bindings[name]))
    leftover = _PLACEHOLDER_RE.findall(text)
    if leftover:
        raise BindingError(leftover, [])
    return text
