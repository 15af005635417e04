"""Benchmark driver: run suites of instruction tasks and score the results.

A suite file is JSON::

    {
      "fixture_dir": "../site",        # corpus served for every task
      "fixture_port": 8473,            # fixed port keeps reports reproducible
      "tasks": [
        {"id": "academic-t3",
         "template": "T3",
         "bindings": {"Conference": "MiniConf", ...},
         "truth": "../truth/academic_2017_2019.jsonl",
         "schema": "academic",
         "config": "../configs/academic.json"}
      ],
      "ablation_compare": ["broadcast", "cache-bypass"]
    }

Relative paths resolve against the suite file.  Each task instantiates its
instruction template, runs the engine, and scores the collected dataset
against its ground truth; a failing task scores as an empty collection and
the suite continues.  Ablation comparison reruns every task under the
named mode and reports accounting ratios against the default run.

``report.json`` and ``report.txt`` are byte-reproducible for scripted
suites; wall-clock numbers go to the ``timing.json`` sidecar instead.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace
from pathlib import Path

from ..config import Ablations, RunConfig, load_config
from ..errors import ConfigError, WebcrewError
from ..orchestrator import Phase, run as run_engine
from .fixture import FixtureServer
from .metrics import MetricReport, compare
from .records import RECORD_SCHEMAS, load_ground_truth
from .templates import TEMPLATES, instantiate_template

_ABLATION_FLAGS = {
    "broadcast": Ablations(broadcast=True),
    "no-formatter": Ablations(formatter_bypass=True),
    "formatter-bypass": Ablations(formatter_bypass=True),
    "no-cache": Ablations(cache_bypass=True),
    "cache-bypass": Ablations(cache_bypass=True),
}


@dataclass
class BenchTask:
    id: str
    template_id: str
    bindings: dict[str, str]
    truth_path: Path
    schema_name: str
    config_path: Path | None
    key: str | None


def _load_suite(path: Path) -> tuple[dict, list[BenchTask]]:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read suite {path}: {exc}") from exc
    base = path.parent

    def _p(value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else base / p

    tasks = []
    for i, t in enumerate(raw.get("tasks", [])):
        if "template" not in t or "truth" not in t:
            raise ConfigError(f"suite task {i} needs 'template' and 'truth'")
        tasks.append(
            BenchTask(
                id=t.get("id", f"task-{i}"),
                template_id=t["template"],
                bindings=t.get("bindings", {}),
                truth_path=_p(t["truth"]),
                schema_name=t.get("schema", ""),
                config_path=_p(t["config"]) if t.get("config") else None,
                key=t.get("key"),
            )
        )
    if not tasks:
        raise ConfigError("suite has no tasks")
    if raw.get("fixture_dir"):
        raw["fixture_dir"] = str(_p(raw["fixture_dir"]))
    return raw, tasks


def _task_config(task: BenchTask, base_config: RunConfig | None) -> RunConfig:
    if task.config_path is not None:
        return load_config(task.config_path)
    if base_config is None:
        raise ConfigError(f"task {task.id} has no config and no --config was given")
    return base_config


def _run_one(
    task: BenchTask,
    config: RunConfig,
    output_dir: Path,
    server: FixtureServer | None,
    ablations: Ablations | None,
) -> dict:
    template = TEMPLATES.get(task.template_id)
    if template is None:
        raise ConfigError(f"unknown template {task.template_id}")
    instruction = instantiate_template(template, task.bindings)
    cfg = replace(
        config,
        instruction=instruction,
        output_dir=output_dir,
        fixture_autostart=server is None and config.fixture_autostart,
    )
    if ablations is not None:
        cfg = replace(cfg, ablations=ablations)
    base_url = server.base_url if server is not None else cfg.fixture_base_url
    substitutions = {"BASE_URL": base_url} if base_url else {}

    failure = None
    records: list[dict] = []
    accounting: dict = {}
    try:
        outcome = run_engine(cfg, fixture_server=server)
        accounting = outcome.accounting
        if outcome.state.phase is Phase.DONE:
            records = outcome.records
        else:
            failure = outcome.state.last_error or f"run ended in {outcome.state.phase}"
    except WebcrewError as exc:
        failure = str(exc)

    schema = RECORD_SCHEMAS.get(task.schema_name) if task.schema_name else None
    if schema is None:
        raise ConfigError(f"task {task.id} needs a known record schema, got {task.schema_name!r}")
    truth = load_ground_truth(
        task.truth_path, schema, key_attribute=task.key, substitutions=substitutions
    )
    report: MetricReport = compare(records, truth)
    return {
        "id": task.id,
        "instruction": instruction,
        "phase": "done" if failure is None else "failed",
        "failure": failure,
        "precision": round(report.precision, 4),
        "recall": round(report.recall, 4),
        "f1": round(report.f1, 4),
        "matched_units": report.matched_units,
        "collected_units": report.collected_units,
        "truth_units": report.truth_units,
        "records_collected": len(records),
        "rounds": accounting.get("rounds", 0),
        "trace_bytes": accounting.get("trace_bytes", 0),
        "delivered_context_chars": accounting.get("delivered_context_chars", {}).get("total", 0),
        "delivered_context_chars_per_agent": accounting.get(
            "delivered_context_chars", {}
        ).get("per_agent", {}),
        "cache_entries": accounting.get("cache_entries", 0),
    }


def run_benchmark(
    suite_path: str | Path,
    base_config: RunConfig | None = None,
    output_root: str | Path = "bench-out",
) -> dict:
    """Run every suite task (plus requested ablation reruns) and emit reports."""
    suite_path = Path(suite_path)
    raw, tasks = _load_suite(suite_path)
    output_root = Path(output_root)
    output_root.mkdir(parents=True, exist_ok=True)

    server: FixtureServer | None = None
    if raw.get("fixture_dir"):
        server = FixtureServer(raw["fixture_dir"], port=int(raw.get("fixture_port", 0))).start()

    timings: dict[str, float] = {}
    try:
        rows = []
        for task in tasks:
            config = _task_config(task, base_config)
            started = time.monotonic()
            rows.append(_run_one(task, config, output_root / task.id, server, None))
            timings[task.id] = round(time.monotonic() - started, 3)

        ablation_section: dict[str, dict] = {}
        for mode in raw.get("ablation_compare", []):
            flags = _ABLATION_FLAGS.get(mode)
            if flags is None:
                raise ConfigError(f"unknown ablation mode {mode!r}")
            per_task = {}
            ratios = []
            for task, default_row in zip(tasks, rows):
                config = _task_config(task, base_config)
                started = time.monotonic()
                row = _run_one(
                    task, config, output_root / f"{task.id}--{mode}", server, flags
                )
                timings[f"{task.id}--{mode}"] = round(time.monotonic() - started, 3)
                if mode == "broadcast":
                    numer = row["delivered_context_chars"]
                    denom = default_row["delivered_context_chars"]
                    metric = "delivered_context_chars"
                else:
                    numer = row["trace_bytes"]
                    denom = default_row["trace_bytes"]
                    metric = "trace_bytes"
                ratio = round(numer / denom, 4) if denom else 0.0
                ratios.append(ratio)
                per_task[task.id] = {
                    metric: numer,
                    f"default_{metric}": denom,
                    "ratio_vs_default": ratio,
                    "f1": row["f1"],
                }
            ablation_section[mode] = {
                "per_task": per_task,
                "mean_ratio": round(sum(ratios) / len(ratios), 4) if ratios else 0.0,
            }

        n = len(rows)
        aggregate = {
            "tasks": n,
            "mean_precision": round(sum(r["precision"] for r in rows) / n, 4),
            "mean_recall": round(sum(r["recall"] for r in rows) / n, 4),
            "mean_f1": round(sum(r["f1"] for r in rows) / n, 4),
        }
        report = {
            "suite": suite_path.stem,
            "tasks": rows,
            "aggregate": aggregate,
            "ablations": ablation_section,
        }
    finally:
        if server is not None:
            server.stop()

    (output_root / "report.json").write_text(
        json.dumps(report, ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
    )
    (output_root / "report.txt").write_text(render_bench_table(report), encoding="utf-8")
    (output_root / "timing.json").write_text(
        json.dumps(timings, indent=1) + "\n", encoding="utf-8"
    )
    return report


def render_bench_table(report: dict) -> str:
    lines = [f"benchmark: {report['suite']}"]
    header = f"{'task':<18} {'f1':>8} {'prec':>8} {'reca':>8} {'units':>11} {'status':<8}"
    lines.append(header)
    lines.append("-" * len(header))
    for row in report["tasks"]:
        units = f"{row['matched_units']}/{row['truth_units']}"
        status = "ok" if row["failure"] is None else "FAILED"
        lines.append(
            f"{row['id']:<18} {row['f1']:>8.4f} {row['precision']:>8.4f} "
            f"{row['recall']:>8.4f} {units:>11} {status:<8}"
        )
        if row["failure"]:
            lines.append(f"    failure: {row['failure']}")
    agg = report["aggregate"]
    lines.append(
        f"mean over {agg['tasks']} task(s): f1={agg['mean_f1']:.4f} "
        f"precision={agg['mean_precision']:.4f} recall={agg['mean_recall']:.4f}"
    )
    for mode, section in report.get("ablations", {}).items():
        lines.append(f"ablation {mode}: mean ratio vs default = {section['mean_ratio']:.4f}")
        for task_id, data in section["per_task"].items():
            lines.append(f"    {task_id}: ratio {data['ratio_vs_default']:.4f}")
    return "\n".join(lines) + "\n"
