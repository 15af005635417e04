"""Dataset record schemas, ground-truth containers, and JSONL loaders.

A dataset (collected or ground truth) is line-delimited JSON: one record
per line with field names exactly as its schema declares.  Records are
aligned by the schema's key attribute; composite keys join field names
with ``+`` (sport schemas key on team or player plus year).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..errors import ValidationError

DatasetRecord = dict[str, Any]


def normalize_value(value: Any) -> str:
    """Canonical comparison form for one attribute value: trim, collapse
    whitespace runs, and normalize comma-separated sequences (author lists)
    to ``a, b`` spacing.  JSON null and Python None become the literal
    string ``None``."""
    s = "None" if value is None else str(value)
    s = " ".join(s.split())
    if "," in s:
        s = ", ".join(seg.strip() for seg in s.split(","))
    return s


@dataclass(frozen=True)
class RecordSchema:
    name: str
    fields: tuple[str, ...]
    key_attribute: str  # field name, or "A+B" for composite keys

    @property
    def key_fields(self) -> tuple[str, ...]:
        return tuple(self.key_attribute.split("+"))

    @property
    def value_fields(self) -> tuple[str, ...]:
        keys = set(self.key_fields)
        return tuple(f for f in self.fields if f not in keys)


RECORD_SCHEMAS: dict[str, RecordSchema] = {
    s.name: s
    for s in [
        RecordSchema(
            "academic",
            (
                "TITLE",
                "AUTHORS",
                "ABSTRACT",
                "CONFERENCE",
                "ABBR",
                "TRACK",
                "PAPER_LINK",
                "BIBTEX_LINK",
                "SUPP_LINK",
            ),
            "TITLE",
        ),
        RecordSchema(
            "stock",
            (
                "Date",
                "Open",
                "High",
                "Low",
                "Close",
                "Volume",
                "adjOpen",
                "adjHigh",
                "adjLow",
                "adjClose",
                "adjVolume",
                "divCash",
            ),
            "Date",
        ),
        RecordSchema(
            "nba-team",
            (
                "TEAM_NAME", "YEAR", "GP", "W", "L", "MIN", "FGM", "FGA", "FG3M",
                "FG3A", "FTM", "FTA", "OREB", "DREB", "REB", "AST", "TOV", "STL",
                "BLK", "BLKA", "PF", "PFD", "PTS",
            ),
            "TEAM_NAME+YEAR",
        ),
        RecordSchema(
            "nba-player",
            (
                "PLAYER_NAME", "YEAR", "BIRTHDATE", "COUNTRY", "HEIGHT", "WEIGHT",
                "DRAFT_YEAR", "DRAFT_ROUND", "DRAFT_NUMBER", "TEAM_ABBR", "GP",
                "GS", "MIN", "FGM", "FGA", "FG3M", "FG3A", "FTM", "FTA", "OREB",
                "DREB", "REB", "AST", "STL", "BLK", "TOV", "PF", "PTS",
            ),
            "PLAYER_NAME+YEAR",
        ),
        RecordSchema(
            "mlb-hitting",
            (
                "TEAM_NAME", "TEAM_ABBR", "YEAR", "AB", "R", "HR", "H", "2B",
                "3B", "RBI", "BB", "SO", "SB", "CS",
            ),
            "TEAM_NAME+YEAR",
        ),
        RecordSchema(
            "mlb-pitching",
            (
                "TEAM_NAME", "TEAM_ABBR", "YEAR", "W", "L", "ERA", "G", "GS",
                "CG", "SHO", "SV", "IP", "H", "R", "ER", "HR", "HB", "BB", "SO",
            ),
            "TEAM_NAME+YEAR",
        ),
    ]
}


@dataclass(frozen=True)
class GroundTruth:
    records: tuple[DatasetRecord, ...]
    schema: RecordSchema
    key_attribute: str

    def __post_init__(self) -> None:
        seen = set()
        key_fields = tuple(self.key_attribute.split("+"))
        for i, record in enumerate(self.records):
            if any(f not in record or record[f] is None for f in key_fields):
                raise ValidationError(f"ground-truth record {i} is missing its key attribute")
            key = tuple(normalize_value(record[f]) for f in key_fields)
            if not all(key):
                raise ValidationError(f"ground-truth record {i} has an empty key attribute")
            if key in seen:
                raise ValidationError(f"ground-truth record {i} repeats key {key}")
            seen.add(key)


def load_records(
    path: str | Path, substitutions: dict[str, str] | None = None
) -> list[DatasetRecord]:
    """Read a line-delimited JSON dataset.

    ``{NAME}`` placeholders in the raw text are substituted before parsing,
    which lets shipped fixtures refer to the current fixture server URL.
    """
    text = Path(path).read_text(encoding="utf-8")
    for key, value in (substitutions or {}).items():
        text = text.replace("{" + key + "}", value)
    records: list[DatasetRecord] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise ValidationError(f"{path}:{lineno}: record must be a JSON object")
        records.append(record)
    return records


def load_ground_truth(
    path: str | Path,
    schema: RecordSchema | str,
    key_attribute: str | None = None,
    substitutions: dict[str, str] | None = None,
) -> GroundTruth:
    if isinstance(schema, str):
        schema = RECORD_SCHEMAS[schema]
    records = load_records(path, substitutions)
    return GroundTruth(
        records=tuple(records),
        schema=schema,
        key_attribute=key_attribute or schema.key_attribute,
    )


def infer_schema(records: list[DatasetRecord], key_attribute: str) -> RecordSchema:
    """Ad-hoc schema from a dataset's own fields (CLI eval without --schema)."""
    fields: list[str] = []
    for record in records:
        for name in record:
            if name not in fields:
                fields.append(name)
    for key_field in key_attribute.split("+"):
        if key_field not in fields:
            raise ValidationError(f"key attribute {key_field!r} absent from records")
    return RecordSchema("inferred", tuple(fields), key_attribute)


def write_records(path: str | Path, records: list[DatasetRecord]) -> None:
    lines = [json.dumps(r, ensure_ascii=False, separators=(",", ":")) for r in records]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
