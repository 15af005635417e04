"""Command-line interface: thin argument parsing over the core package.

Exit codes for ``run``: 0 the workflow finished, 2 it failed, 3 the
configuration was rejected.  ``replay`` exits 2 on invariant violations;
``serve-fixture`` exits 3 when the port cannot be bound.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .bench.driver import render_bench_table, run_benchmark
from .bench.fixture import FixtureServer
from .bench.metrics import compare, render_table
from .bench.records import RECORD_SCHEMAS, GroundTruth, infer_schema, load_records
from .config import Ablations, load_config
from .errors import BindError, WebcrewError
from .orchestrator import Phase, replay, run

EXIT_OK = 0
EXIT_FAILED = 2
EXIT_CONFIG = 3


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
        ablations = Ablations(
            broadcast=args.broadcast or config.ablations.broadcast,
            formatter_bypass=args.no_formatter or config.ablations.formatter_bypass,
            cache_bypass=args.no_cache or config.ablations.cache_bypass,
        )
        config = dataclasses.replace(config, ablations=ablations)
        if args.output:
            config = dataclasses.replace(config, output_dir=Path(args.output))
    except WebcrewError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        outcome = run(config)
    except WebcrewError as exc:
        # Setup-stage failures (empty instruction, missing transcripts,
        # unbindable fixture port) happen before any agent executes.
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = outcome.accounting
    print(
        f"phase={outcome.state.phase} rounds={outcome.state.round} "
        f"edges={report['edges']} cache_entries={report['cache_entries']} "
        f"records={report['dataset_records']}"
    )
    print(f"trace: {outcome.trace_path}")
    if outcome.dataset_path:
        print(f"dataset: {outcome.dataset_path}")
    if outcome.state.last_error:
        print(f"error: {outcome.state.last_error}", file=sys.stderr)
    return EXIT_OK if outcome.state.phase is Phase.DONE else EXIT_FAILED


def _cmd_replay(args: argparse.Namespace) -> int:
    path = Path(args.trace)
    if not path.is_file():
        print(f"no trace file at {path}", file=sys.stderr)
        return EXIT_CONFIG
    report = replay(path)
    print(
        f"edges={report.edges} messages={report.messages} "
        f"contexts_rendered={report.contexts_rendered}"
    )
    if report.violations:
        for v in report.violations:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_FAILED
    print("trace valid")
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace) -> int:
    substitutions = {"BASE_URL": args.base_url.rstrip("/")} if args.base_url else {}
    try:
        collected = load_records(args.collected, substitutions)
        truth_records = load_records(args.truth, substitutions)
        if args.schema:
            schema = RECORD_SCHEMAS.get(args.schema)
            if schema is None:
                print(f"unknown schema: {args.schema}", file=sys.stderr)
                return EXIT_CONFIG
        else:
            schema = infer_schema(truth_records, args.key)
        truth = GroundTruth(
            records=tuple(truth_records), schema=schema, key_attribute=args.key
        )
        report = compare(collected, truth, average="macro" if args.macro else "micro")
    except (WebcrewError, OSError) as exc:
        print(f"eval error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.json:
        print(json.dumps(report.to_dict(), ensure_ascii=False, indent=1))
    else:
        print(render_table(report, title=f"{args.collected} vs {args.truth}"))
    return EXIT_OK


def _cmd_serve_fixture(args: argparse.Namespace) -> int:
    try:
        server = FixtureServer(args.dir, port=args.port, host=args.host)
    except BindError as exc:
        print(f"bind error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"serving {args.dir} at {server.base_url} (Ctrl-C to stop)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace) -> int:
    try:
        base_config = load_config(args.config) if args.config else None
        report = run_benchmark(args.suite, base_config, output_root=args.output)
    except WebcrewError as exc:
        print(f"bench error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(render_bench_table(report), end="")
    print(f"reports written under {args.output}")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="webcrew", description="multi-agent web data collection engine"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one collection run")
    p_run.add_argument("--config", required=True, help="run config JSON")
    p_run.add_argument("--broadcast", action="store_true", help="ablate routing to broadcast")
    p_run.add_argument("--no-formatter", action="store_true", help="ablate message formatting")
    p_run.add_argument("--no-cache", action="store_true", help="embed artifacts in messages")
    p_run.add_argument("--output", help="override the output directory")
    p_run.set_defaults(fn=_cmd_run)

    p_replay = sub.add_parser("replay", help="validate a trace file offline")
    p_replay.add_argument("--trace", required=True)
    p_replay.set_defaults(fn=_cmd_replay)

    p_eval = sub.add_parser("eval", help="score a collected dataset against ground truth")
    p_eval.add_argument("--collected", required=True)
    p_eval.add_argument("--truth", required=True)
    p_eval.add_argument("--key", required=True, help="key attribute (A+B for composite)")
    p_eval.add_argument("--schema", help="registered record schema name")
    p_eval.add_argument("--macro", action="store_true", help="macro-average per record")
    p_eval.add_argument("--base-url", default="", help="substitute {BASE_URL} in both files")
    p_eval.add_argument("--json", action="store_true", help="machine-readable output")
    p_eval.set_defaults(fn=_cmd_eval)

    p_fix = sub.add_parser("serve-fixture", help="serve the fixture corpus")
    p_fix.add_argument("--dir", required=True)
    p_fix.add_argument("--port", type=int, default=8473)
    p_fix.add_argument("--host", default="127.0.0.1")
    p_fix.set_defaults(fn=_cmd_serve_fixture)

    p_bench = sub.add_parser("bench", help="run a benchmark suite")
    p_bench.add_argument("--suite", required=True)
    p_bench.add_argument("--config", help="base run config for tasks without their own")
    p_bench.add_argument("--output", default="bench-out")
    p_bench.set_defaults(fn=_cmd_bench)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(fn=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
