"""Command-line entry points: single runs, benchmark runs, trace inspection.

Machine-readable contract for ``run``: the figure path is always the last
stdout line, so other programs can compose the CLI. Exit codes: 0 when a
figure was produced (even if some feedback budgets ran out), 1 for plan or
code failures, 2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import load_benchmark, run_benchmark
from .config import CliConfig, resolve_config
from .errors import PlotGenError
from .gateway import Gateway, LiveBackend, RecordBackend, ReplayBackend
from .orchestrator import load_trace, run_session
from .planner import UserRequest
from .report import render_comparison_table, render_summary_table, write_report
from .table import DataTable

_OK_OUTCOMES = ("success", "feedback-exhausted-with-figure")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotgen",
        description="Turn a natural-language request plus a data table into a verified figure.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one request end to end")
    run_p.add_argument("--request", required=True, help="text file holding the request")
    run_p.add_argument("--data", required=True, help="CSV data file")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--config", help="JSON config file")
    run_p.add_argument("--replay", help="serve model calls from this cassette directory")
    run_p.add_argument("--record", help="record model calls into this cassette directory")
    run_p.add_argument("--time-limit", type=float, dest="time_limit")

    bench_p = sub.add_parser("bench", help="run the benchmark harness over a dataset")
    bench_p.add_argument("--dataset", required=True, help="dataset root directory")
    bench_p.add_argument("--out", required=True, help="output directory")
    bench_p.add_argument("--workers", type=int, default=1)
    bench_p.add_argument("--config", help="JSON config file")
    bench_p.add_argument("--replay", help="serve model calls from this cassette directory")
    bench_p.add_argument("--record", help="record model calls into this cassette directory")
    bench_p.add_argument(
        "--baselines",
        help="JSON file of stored mean scores {method: {backbone: mean}} for the comparison table",
    )

    trace_p = sub.add_parser("trace", help="inspect session traces")
    trace_sub = trace_p.add_subparsers(dest="trace_command", required=True)
    show_p = trace_sub.add_parser("show", help="pretty-print a trace file")
    show_p.add_argument("trace_file", help="trace.jsonl path")

    return parser


def build_request(request_file: str | Path, data_file: str | Path, out_dir: str | Path) -> UserRequest:
    request_file = Path(request_file)
    text = request_file.read_text(encoding="utf-8").strip()
    # generated code and the runner run from other working directories, so
    # the paths they see must be absolute
    return UserRequest(
        id=request_file.stem,
        text=text,
        data_path=Path(data_file).resolve(),
        output_dir=Path(out_dir).resolve(),
    )


def _resolve(args: argparse.Namespace) -> CliConfig:
    flags = {}
    if getattr(args, "time_limit", None) is not None:
        flags["time_limit"] = args.time_limit
    config = resolve_config(config_path=getattr(args, "config", None), flag_overrides=flags)
    return config


def _gateway_for(args: argparse.Namespace, config: CliConfig) -> Gateway:
    settings = config.gateway
    if getattr(args, "replay", None):
        return Gateway(ReplayBackend(cassette_dir=Path(args.replay)))
    if getattr(args, "record", None):
        return Gateway(
            RecordBackend(
                base_url=settings.base_url,
                cassette_dir=Path(args.record),
                credential_env=settings.credential_env,
            )
        )
    if settings.mode == "replay":
        return Gateway(ReplayBackend(cassette_dir=Path(settings.cassette_dir)))
    if settings.mode == "record":
        return Gateway(
            RecordBackend(
                base_url=settings.base_url,
                cassette_dir=Path(settings.cassette_dir),
                credential_env=settings.credential_env,
            )
        )
    return Gateway(LiveBackend(base_url=settings.base_url, credential_env=settings.credential_env))


def _cmd_run(args: argparse.Namespace) -> int:
    config = _resolve(args)
    gateway = _gateway_for(args, config)
    request = build_request(args.request, args.data, args.out)
    DataTable.from_csv(request.data_path)  # fail fast on unreadable data
    result, trace = run_session(gateway, request, config.pipeline)
    print(f"session {trace.session_id}: {result.outcome} ({trace.llm_calls} model calls)")
    if result.outcome in _OK_OUTCOMES and result.figure_path is not None:
        print(result.figure_path)
        return 0
    print("no figure produced", file=sys.stderr)
    return 1


def _cmd_bench(args: argparse.Namespace) -> int:
    config = _resolve(args)
    gateway = _gateway_for(args, config)
    items = load_benchmark(args.dataset)
    if not items:
        print(f"no benchmark items under {args.dataset}", file=sys.stderr)
        return 1
    summary = run_benchmark(
        gateway, items, config.pipeline, workers=args.workers, out_dir=args.out
    )
    baselines = None
    if args.baselines:
        baselines = json.loads(Path(args.baselines).read_text(encoding="utf-8"))
    write_report(summary, args.out, baselines=baselines)
    print(render_summary_table(summary))
    if baselines:
        print()
        print(render_comparison_table(baselines))
    return 0


def _format_event(index: int, kind: str, data: dict) -> str:
    parts = []
    for key in ("version", "provenance", "status", "agent_kind", "verdict", "iteration", "outcome"):
        if key in data and data[key] is not None:
            parts.append(f"{key}={data[key]}")
    if kind == "plan_made":
        parts.append(f"steps={len(data.get('steps', []))}" if data.get("ok") else "failed")
    detail = " ".join(parts)
    return f"[{index:>2}] {kind:<16} {detail}".rstrip()


def _cmd_trace_show(args: argparse.Namespace) -> int:
    trace = load_trace(args.trace_file)
    for i, event in enumerate(trace.events, start=1):
        print(_format_event(i, event.kind, event.data))
    return 0


def dispatch(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse prints the synopsis to stderr itself
        return int(exc.code or 0)

    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "trace":
            return _cmd_trace_show(args)
    except PlotGenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled command {args.command!r}")


def main() -> None:
    sys.exit(dispatch())
