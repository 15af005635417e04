"""Independent reference implementations the tests check the engine against.

These deliberately reimplement the documented contracts with different
code paths (quadratic scans, regex extraction) and stay free of engine
internals beyond the public data types.
"""

from __future__ import annotations

import html as html_utils
import re
from decimal import Decimal, ROUND_HALF_EVEN

from webcrew.hypergraph import Message, MessageHypergraph, NodeId


def context_oracle(graph: MessageHypergraph, agent: NodeId, now: int) -> list[Message]:
    """Brute-force delivery filter: every message whose carrying edge
    targets the agent and whose time is strictly before ``now``."""
    delivered = []
    for mid, msg in graph.messages.items():
        carrying = [e for e in graph.edges if e.message_id == mid]
        if not carrying:
            continue
        if agent in carrying[0].targets and msg.time < now:
            delivered.append(msg)
    delivered.sort(key=lambda m: m.time)
    return delivered


# --- attribute-unit scoring ---------------------------------------------------

_NUM = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")


def _norm(value) -> str:
    s = "None" if value is None else str(value)
    s = " ".join(s.split())
    if "," in s:
        s = ", ".join(part.strip() for part in s.split(","))
    return s


def _values_equal(a: str, b: str, places: int) -> bool:
    if _NUM.fullmatch(a) and _NUM.fullmatch(b):
        q = Decimal(1).scaleb(-places)
        return Decimal(a).quantize(q, rounding=ROUND_HALF_EVEN) == Decimal(b).quantize(
            q, rounding=ROUND_HALF_EVEN
        )
    return a == b


def metric_oracle(
    collected: list[dict],
    truth_records: list[dict],
    schema_fields: set[str],
    key_fields: tuple[str, ...],
    places: int = 4,
) -> tuple[int, int, int]:
    """(matched, collected_units, truth_units) by exhaustive unit counting.

    First occurrence of a key aligns; later duplicates and records with a
    missing key or undeclared fields contribute only unmatched units.
    """
    truth_by_key: dict[tuple[str, ...], dict[str, str]] = {}
    truth_units = 0
    for record in truth_records:
        key = tuple(_norm(record[f]) for f in key_fields)
        values = {a: _norm(v) for a, v in record.items() if a not in key_fields}
        truth_by_key[key] = values
        truth_units += len(values)

    matched = 0
    collected_units = 0
    seen: set[tuple[str, ...]] = set()
    for record in collected:
        values = [(a, v) for a, v in record.items() if a not in key_fields]
        collected_units += len(values)

        usable = True
        key_parts = []
        for f in key_fields:
            if f not in record or record[f] is None or not _norm(record[f]):
                usable = False
                break
            key_parts.append(_norm(record[f]))
        if usable and any(a not in schema_fields for a, _ in values):
            usable = False
        if not usable:
            continue
        key = tuple(key_parts)
        if key in seen:
            continue
        seen.add(key)
        aligned = truth_by_key.get(key)
        if aligned is None:
            continue
        for attr, value in values:
            if attr in aligned and _values_equal(_norm(value), aligned[attr], places):
                matched += 1
    return matched, collected_units, truth_units


# --- visible text -----------------------------------------------------------------

def visible_text_oracle(html_text: str) -> str:
    """Regex-based visible-text extraction: drop comments, script/style
    subtrees, and tags; decode entities; collapse whitespace."""
    text = re.sub(r"<!--.*?-->", " ", html_text, flags=re.DOTALL)
    text = re.sub(r"<script\b.*?</script\s*>", " ", text, flags=re.DOTALL | re.IGNORECASE)
    text = re.sub(r"<style\b.*?</style\s*>", " ", text, flags=re.DOTALL | re.IGNORECASE)
    text = re.sub(r"<[^>]*>", " ", text)
    return " ".join(html_utils.unescape(text).split())
