"""Command-line entry point: sessions, benchmark harness, HTTP service."""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import bench as bench_mod
from .errors import HasodError
from .figures import render_benchmark_figures
from .session import (
    SessionConfig,
    SessionState,
    canonical_json,
    load_session,
    save_session,
)


def _atomic_write(path: str, data: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def batch_csv(state: SessionState) -> str:
    header = "run_id," + ",".join(f"f{i + 1}" for i in range(state.config.k))
    lines = [header]
    for row_id, levels in state.propose_runs():
        lines.append(f"{row_id}," + ",".join(f"{v:.17g}" for v in levels))
    return "\n".join(lines) + "\n"


def parse_responses_csv(text: str) -> list[tuple[int, float]]:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty responses file")
    start = 1 if lines[0].lower().replace(" ", "") in ("run_id,y", "row_id,y") else 0
    out = []
    for ln in lines[start:]:
        parts = ln.split(",")
        if len(parts) != 2:
            raise ValueError(f"malformed responses line: {ln!r}")
        out.append((int(parts[0]), float(parts[1])))
    return out


def _cmd_new(args) -> int:
    config = SessionConfig(k=args.factors, seed=args.seed)
    state = SessionState(config)
    save_session(state, args.out)
    base, _ = os.path.splitext(args.out)
    batch_path = base + ".batch.csv"
    _atomic_write(batch_path, batch_csv(state))
    print(batch_path)
    return 0


def _cmd_propose(args) -> int:
    state = load_session(args.session)
    sys.stdout.write(batch_csv(state))
    return 0


def _cmd_ingest(args) -> int:
    try:
        with open(args.responses) as fh:
            responses = parse_responses_csv(fh.read())
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    state = load_session(args.session)
    state.ingest_responses(responses)
    save_session(state, args.session)
    print(state.phase)
    return 0


def _cmd_status(args) -> int:
    state = load_session(args.session)
    d = state.to_dict()
    out = {
        "phase": d["phase"],
        "k": state.config.k,
        "pending": len(state.propose_runs()) if state.phase != "Complete" else 0,
        "classification": d["classification"],
        "strategy": d["strategy"],
    }
    sys.stdout.write(canonical_json(out))
    return 0


def _cmd_report(args) -> int:
    state = load_session(args.session)
    result = state.finalize_report()
    from .session import _result_to_dict

    sys.stdout.write(canonical_json(_result_to_dict(result)))
    return 0


def _cmd_bench(args) -> int:
    if args.scenarios == "all":
        names = list(bench_mod.SCENARIO_NAMES)
    else:
        names = [s.strip() for s in args.scenarios.split(",") if s.strip()]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if args.scenario_file:
        with open(args.scenario_file) as fh:
            overrides = {d["name"]: bench_mod.scenario_from_dict(d) for d in json.load(fh)}
    else:
        overrides = {}
    scenarios = [
        overrides.get(name, None) or bench_mod.make_scenario(name) for name in names
    ]
    metrics = bench_mod.run_benchmark(methods, scenarios, args.reps, args.seed)
    os.makedirs(args.out, exist_ok=True)
    _atomic_write(os.path.join(args.out, "results.csv"), bench_mod.metrics_to_csv(metrics))
    report = bench_mod.aggregate_report(metrics)
    _atomic_write(os.path.join(args.out, "report.md"), bench_mod.report_markdown(report))
    render_benchmark_figures(metrics, args.out)
    print(os.path.join(args.out, "results.csv"))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import make_app

    sessions_dir = args.sessions_dir or os.environ.get(
        "HASOD_SESSIONS_DIR", "./sessions"
    )
    os.makedirs(sessions_dir, exist_ok=True)
    app = make_app(sessions_dir, static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hasod")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("new", help="create a session and emit the first run batch")
    p.add_argument("--factors", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_new)

    p = sub.add_parser("propose", help="print pending runs as CSV")
    p.add_argument("--session", required=True)
    p.set_defaults(func=_cmd_propose)

    p = sub.add_parser("ingest", help="ingest responses from a CSV file")
    p.add_argument("--session", required=True)
    p.add_argument("--responses", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("status", help="print phase and classification summary")
    p.add_argument("--session", required=True)
    p.set_defaults(func=_cmd_status)

    p = sub.add_parser("report", help="print the final result as JSON")
    p.add_argument("--session", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("bench", help="run the benchmark grid")
    p.add_argument("--scenarios", default="all")
    p.add_argument("--methods", default=",".join(bench_mod.METHOD_NAMES))
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--scenario-file", default=None)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--port", type=int, default=8712)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--sessions-dir", default=None)
    p.add_argument("--static-dir", default=None, help="directory of built UI assets")
    p.set_defaults(func=_cmd_serve)

    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except HasodError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
