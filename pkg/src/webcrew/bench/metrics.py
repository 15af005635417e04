"""Attribute-unit precision/recall/F1 between a collected dataset and truth.

Records align by the schema's key attribute (exact match after whitespace
normalization); every non-key attribute of an aligned record is one scoring
unit.  Values compare case-sensitively after trimming and collapsing
whitespace; values that look numeric on both sides compare after rounding
to four decimal places.  Counts are integers throughout, so the derived
precision/recall/F1 are exact rationals until final float rendering.

Conventions: precision is matched/collected (0 when nothing was
collected); recall is matched/truth (0 and flagged degenerate when the
truth is empty); F1 is the harmonic mean, 0 when P+R is 0.  Duplicate keys
in the collected set score once; the extra copies count as unmatched
collected units.  Records that do not conform to the schema count all
their units as wrong.  Micro (unit-pooled) averaging is the default;
macro averages per-record scores instead.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation, ROUND_HALF_EVEN
from fractions import Fraction
from typing import Any

from .records import DatasetRecord, GroundTruth, normalize_value

_NUMERIC_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def quantize(text: str, places: int = 4) -> Decimal:
    q = Decimal(1).scaleb(-places)
    return Decimal(text).quantize(q, rounding=ROUND_HALF_EVEN)


def units_equal(a: str, b: str, places: int = 4) -> bool:
    """Equality of two normalized values; numeric-looking pairs compare
    after rounding to ``places`` decimals."""
    if _NUMERIC_RE.match(a) and _NUMERIC_RE.match(b):
        try:
            return quantize(a, places) == quantize(b, places)
        except InvalidOperation:
            return a == b
    return a == b


def f1_from_counts(matched: int, collected: int, truth: int) -> tuple[Fraction, Fraction, Fraction]:
    """Exact (precision, recall, f1) under the stated 0/0 conventions."""
    p = Fraction(matched, collected) if collected else Fraction(0)
    r = Fraction(matched, truth) if truth else Fraction(0)
    f1 = 2 * p * r / (p + r) if (p + r) else Fraction(0)
    return p, r, f1


@dataclass(frozen=True)
class AttributeCounts:
    matched: int = 0
    collected: int = 0
    truth: int = 0


@dataclass(frozen=True)
class MetricReport:
    precision: float
    recall: float
    f1: float
    matched_units: int
    collected_units: int
    truth_units: int
    per_attribute: dict[str, AttributeCounts]
    average: str = "micro"
    degenerate: bool = False
    notes: tuple[str, ...] = ()

    @property
    def exact(self) -> tuple[Fraction, Fraction, Fraction]:
        """Exact micro precision/recall/F1 from the unit counts."""
        return f1_from_counts(self.matched_units, self.collected_units, self.truth_units)

    def to_dict(self) -> dict[str, Any]:
        return {
            "precision": round(self.precision, 4),
            "recall": round(self.recall, 4),
            "f1": round(self.f1, 4),
            "matched_units": self.matched_units,
            "collected_units": self.collected_units,
            "truth_units": self.truth_units,
            "average": self.average,
            "degenerate": self.degenerate,
            "notes": list(self.notes),
            "per_attribute": {
                name: {
                    "matched": c.matched,
                    "collected": c.collected,
                    "truth": c.truth,
                }
                for name, c in self.per_attribute.items()
            },
        }


def _record_key(record: DatasetRecord, key_fields: tuple[str, ...]) -> tuple[str, ...] | None:
    """Normalized key tuple, or None when any key part is missing or empty."""
    parts = []
    for f in key_fields:
        if f not in record or record[f] is None:
            return None
        part = normalize_value(record[f])
        if not part:
            return None
        parts.append(part)
    return tuple(parts)


def compare(
    collected: list[DatasetRecord],
    truth: GroundTruth,
    rounding: int = 4,
    average: str = "micro",
) -> MetricReport:
    """Score a collected dataset against ground truth, unit by unit."""
    if average not in ("micro", "macro"):
        raise ValueError("average must be 'micro' or 'macro'")
    key_fields = tuple(truth.key_attribute.split("+"))
    schema_fields = set(truth.schema.fields)
    notes: list[str] = []

    # Truth units, indexed by normalized key.
    truth_index: dict[tuple[str, ...], dict[str, str]] = {}
    truth_units = 0
    truth_attr_counts: dict[str, int] = {}
    for record in truth.records:
        key = _record_key(record, key_fields)
        units = {
            attr: normalize_value(value)
            for attr, value in record.items()
            if attr not in key_fields
        }
        truth_index[key] = units
        truth_units += len(units)
        for attr in units:
            truth_attr_counts[attr] = truth_attr_counts.get(attr, 0) + 1

    matched = 0
    collected_units = 0
    attr_counts: dict[str, list[int]] = {}  # attr -> [matched, collected]
    per_record: list[tuple[int, int]] = []  # (matched, units) per collected record
    matched_per_truth: dict[tuple[str, ...], int] = {}
    seen_keys: set[tuple[str, ...]] = set()
    n_dupes = 0
    n_nonconforming = 0

    def _count(attr: str, hit: bool) -> None:
        nonlocal matched, collected_units
        collected_units += 1
        row = attr_counts.setdefault(attr, [0, 0])
        row[1] += 1
        if hit:
            matched += 1
            row[0] += 1

    for i, record in enumerate(collected):
        value_attrs = [(a, v) for a, v in record.items() if a not in key_fields]
        key = _record_key(record, key_fields)
        conforming = key is not None and all(a in schema_fields for a, _ in value_attrs)
        if not conforming:
            n_nonconforming += 1
            for attr, _ in value_attrs:
                _count(attr, False)
            per_record.append((0, len(value_attrs)))
            continue
        if key in seen_keys:
            n_dupes += 1
            for attr, _ in value_attrs:
                _count(attr, False)
            per_record.append((0, len(value_attrs)))
            continue
        seen_keys.add(key)
        aligned = truth_index.get(key)
        record_matched = 0
        for attr, value in value_attrs:
            hit = (
                aligned is not None
                and attr in aligned
                and units_equal(normalize_value(value), aligned[attr], rounding)
            )
            _count(attr, hit)
            if hit:
                record_matched += 1
        if aligned is not None:
            matched_per_truth[key] = record_matched
        per_record.append((record_matched, len(value_attrs)))

    if n_nonconforming:
        notes.append(f"{n_nonconforming} collected record(s) do not conform to the schema")
    if n_dupes:
        notes.append(f"{n_dupes} duplicate collected key(s); extras scored as unmatched")

    degenerate = truth_units == 0 or collected_units == 0
    if degenerate:
        notes.append("degenerate comparison: empty collected or empty truth unit set")

    if average == "micro":
        p, r, f1 = f1_from_counts(matched, collected_units, truth_units)
    else:
        if per_record:
            p = Fraction(
                sum(Fraction(m, u) if u else Fraction(0) for m, u in per_record),
                len(per_record),
            )
        else:
            p = Fraction(0)
        if truth_index:
            r = Fraction(
                sum(
                    Fraction(matched_per_truth.get(key, 0), len(units)) if units else Fraction(0)
                    for key, units in truth_index.items()
                ),
                len(truth_index),
            )
        else:
            r = Fraction(0)
        f1 = 2 * p * r / (p + r) if (p + r) else Fraction(0)

    per_attribute: dict[str, AttributeCounts] = {}
    attr_names = list(truth.schema.fields) + sorted(
        (set(attr_counts) | set(truth_attr_counts)) - set(truth.schema.fields)
    )
    for attr in attr_names:
        if attr in key_fields:
            continue
        c = attr_counts.get(attr, [0, 0])
        t = truth_attr_counts.get(attr, 0)
        if c == [0, 0] and t == 0:
            continue
        if attr not in per_attribute:
            per_attribute[attr] = AttributeCounts(matched=c[0], collected=c[1], truth=t)

    return MetricReport(
        precision=float(p),
        recall=float(r),
        f1=float(f1),
        matched_units=matched,
        collected_units=collected_units,
        truth_units=truth_units,
        per_attribute=per_attribute,
        average=average,
        degenerate=degenerate,
        notes=tuple(notes),
    )


def render_table(report: MetricReport, title: str = "evaluation") -> str:
    """Human-readable fixed-width table with four-decimal scores."""
    lines = [
        f"== {title} ==",
        f"precision: {report.precision:.4f}  recall: {report.recall:.4f}  f1: {report.f1:.4f}",
        f"units: matched={report.matched_units} collected={report.collected_units} "
        f"truth={report.truth_units}  ({report.average})",
    ]
    if report.per_attribute:
        width = max(len(a) for a in report.per_attribute)
        lines.append(f"{'attribute'.ljust(width)}  matched  collected  truth")
        for name, c in report.per_attribute.items():
            lines.append(
                f"{name.ljust(width)}  {str(c.matched).rjust(7)}  {str(c.collected).rjust(9)}  "
                f"{str(c.truth).rjust(5)}"
            )
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines)
