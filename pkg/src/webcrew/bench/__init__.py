"""Instruction-to-dataset evaluation: templates, metrics, fixture site, driver."""

from .templates import TEMPLATES, InstructionTemplate, instantiate_template
from .records import GroundTruth, RecordSchema, RECORD_SCHEMAS, load_records
from .metrics import MetricReport, compare, f1_from_counts
from .fixture import FixtureServer, serve_fixture

__all__ = [
    "TEMPLATES",
    "InstructionTemplate",
    "instantiate_template",
    "GroundTruth",
    "RecordSchema",
    "RECORD_SCHEMAS",
    "load_records",
    "MetricReport",
    "compare",
    "f1_from_counts",
    "FixtureServer",
    "serve_fixture",
]
