"""Operator entry points: serve, query, bench, dataset.

Exit codes are stable for CI scripting:

    0  success
    2  usage / configuration error
    3  planning failure
    4  realization failure
    5  I/O error
    6  validation failure (dataset or plan rejected)

Every subcommand takes ``--format text|structured``; ``--backend`` accepts
``scripted:<fixture-file>`` for fully offline runs or ``http`` to use the
configured endpoint.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

from . import actor
from .bench import (
    SuiteRunConfig,
    format_report,
    oracle_fixtures,
    run_suite,
)
from .config import ConfigError, ServiceConfig, load_config
from .gateway import (
    Backend,
    GatewayError,
    ScriptedBackend,
    backend_from_config,
    load_fixtures,
)
from .kb import load_kb
from .plan import plan_to_wire_text, render_steps
from .planner import PlanningFailure, plan_query
from .suite import load_suite, write_suite_file
from .synthetic import GeneratorConfig, export_csv, generate
from .table import canonical_table_text, load_csv, validate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PLANNING = 3
EXIT_REALIZATION = 4
EXIT_IO = 5
EXIT_VALIDATION = 6


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _emit(payload: dict[str, Any], text: str, fmt: str, out=None) -> None:
    out = out if out is not None else sys.stdout
    if fmt == "structured":
        out.write(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")
    else:
        out.write(text if text.endswith("\n") else text + "\n")


def _resolve_backend(spec: str | None, config: ServiceConfig) -> Backend:
    if spec is None or spec == "config":
        return backend_from_config(config.backend)
    if spec.startswith("scripted:"):
        path = spec.split(":", 1)[1]
        try:
            return ScriptedBackend(load_fixtures(path))
        except OSError as exc:
            raise CliError(f"cannot read fixture file: {exc}", EXIT_IO)
        except ValueError as exc:
            raise CliError(f"bad fixture file: {exc}", EXIT_CONFIG)
    if spec == "http":
        if config.backend.kind != "http":
            raise CliError(
                "--backend http requires an http backend in the config file",
                EXIT_CONFIG,
            )
        return backend_from_config(config.backend)
    raise CliError(f"unknown backend spec {spec!r}", EXIT_CONFIG)


def _load_dataset(csv_path: str, kb_path: str):
    try:
        kb = load_kb(Path(kb_path))
    except OSError as exc:
        raise CliError(f"cannot read KB: {exc}", EXIT_IO)
    except Exception as exc:
        raise CliError(f"bad KB: {exc}", EXIT_VALIDATION)
    try:
        table = load_csv(Path(csv_path).read_bytes(), kb.schema)
    except OSError as exc:
        raise CliError(f"cannot read dataset: {exc}", EXIT_IO)
    except Exception as exc:
        raise CliError(f"bad dataset: {exc}", EXIT_VALIDATION)
    return table, kb


def _render_table(table, max_rows: int = 40) -> str:
    names = list(table.schema.names)
    from .table import render_value

    rows = [
        [render_value(v) for v in table.row(i)]
        for i in range(min(table.row_count, max_rows))
    ]
    widths = [
        max(len(names[j]), *(len(r[j]) for r in rows)) if rows else len(names[j])
        for j in range(len(names))
    ]
    lines = [
        "  ".join(n.ljust(w) for n, w in zip(names, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    if table.row_count > max_rows:
        lines.append(f"... ({table.row_count} rows total)")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# subcommands

def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    config = load_config(args.config)
    if args.port is not None:
        config = ServiceConfig(port=args.port, data_dir=config.data_dir,
                               workers=config.workers, backend=config.backend)
    if args.data_dir is not None:
        config = ServiceConfig(port=config.port, data_dir=args.data_dir,
                               workers=config.workers, backend=config.backend)
    app = create_app(config)
    _emit(
        {"serving": True, "port": config.port, "data_dir": config.data_dir,
         "workers": config.workers, "backend_kind": config.backend.kind},
        f"serving on port {config.port} (data dir {config.data_dir}, "
        f"{config.workers} workers, {config.backend.kind} backend)",
        args.format,
    )
    uvicorn.run(app, host=args.host, port=config.port, log_level="warning")
    return EXIT_OK


def cmd_query(args: argparse.Namespace) -> int:
    config = load_config(args.config) if args.config else ServiceConfig()
    backend = _resolve_backend(args.backend, config)
    table, kb = _load_dataset(args.dataset, args.kb)
    try:
        decision = plan_query(args.question, kb, backend, k=args.k,
                              n_samples=args.n)
    except PlanningFailure as exc:
        _emit(
            {"status": "failed", "reason": "planning_failure",
             "errors": [{"sample_index": c.sample_index, "error": c.error}
                        for c in exc.candidates]},
            f"planning failure: {exc}", args.format, sys.stderr,
        )
        return EXIT_PLANNING
    except GatewayError as exc:
        _emit({"status": "failed", "reason": "gateway", "error": str(exc)},
              f"gateway error: {exc}", args.format, sys.stderr)
        return EXIT_CONFIG
    try:
        result = actor.run(decision, table, kb, backend,
                           actor.ReflectionConfig(mode=args.mode))
    except actor.StepRealizationError as exc:
        _emit({"status": "failed", "reason": "realization_failure",
               "error": str(exc)},
              f"realization failure: {exc}", args.format, sys.stderr)
        return EXIT_REALIZATION

    steps = render_steps(decision.chosen)
    payload = {
        "status": "done",
        "nl_steps": steps,
        "plan": json.loads(plan_to_wire_text(decision.chosen)),
        "votes": f"{decision.chosen_votes}/{decision.n_samples}",
        "reflection_attempts": result.reflection_attempts_total,
        "result": {
            "columns": list(result.final_table.schema.names),
            "row_count": result.final_table.row_count,
        },
        "timings_s": {
            "execution": round(result.trace.total_s, 6),
        },
    }
    text = "\n".join(
        ["Plan steps:"]
        + [f"  {i}. {s}" for i, s in enumerate(steps, start=1)]
        + ["", "Plan document:", plan_to_wire_text(decision.chosen), "",
           f"Votes: {decision.chosen_votes}/{decision.n_samples}",
           f"Reflection attempts: {result.reflection_attempts_total}", "",
           _render_table(result.final_table), "",
           f"Execution time: {result.trace.total_s * 1000:.1f} ms"]
    )
    if args.format == "structured":
        payload["result"]["rows"] = [
            list(map(str, result.final_table.row(i)))
            for i in range(min(result.final_table.row_count, 1000))
        ]
    _emit(payload, text, args.format)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    if args.action == "report":
        try:
            raw = json.loads(Path(args.report).read_text(encoding="utf-8"))
        except OSError as exc:
            raise CliError(f"cannot read report: {exc}", EXIT_IO)
        from .bench import report_from_dict

        report = report_from_dict(raw)
        text = format_report(report)
        if args.out in (None, "-"):
            _emit(raw, text, args.format)
        else:
            Path(args.out).write_text(
                text if args.format == "text" else json.dumps(raw, indent=2),
                encoding="utf-8",
            )
        return EXIT_OK

    if args.action == "export-suite":
        out = args.out or "suite.json"
        write_suite_file(out)
        _emit({"suite_file": str(out)}, f"wrote suite file {out}", args.format)
        return EXIT_OK

    try:
        suite = load_suite(args.suite)
    except OSError as exc:
        raise CliError(f"cannot read suite: {exc}", EXIT_IO)
    except Exception as exc:
        raise CliError(f"bad suite: {exc}", EXIT_VALIDATION)
    k_list = tuple(int(k) for k in args.k.split(","))

    if args.action == "fixtures":
        fixtures = oracle_fixtures(suite.cases, k_list, args.n, mode=args.mode)
        out = args.out or "fixtures.json"
        Path(out).write_text(json.dumps(fixtures, indent=2), encoding="utf-8")
        _emit({"fixtures_file": str(out), "count": len(fixtures)},
              f"wrote {len(fixtures)} fixtures to {out}", args.format)
        return EXIT_OK

    config = load_config(args.config) if args.config else ServiceConfig()
    backend = _resolve_backend(args.backend, config)
    report = run_suite(
        suite.cases, suite.dataset, suite.kb, backend,
        SuiteRunConfig(k_list=k_list, n_samples=args.n, mode=args.mode),
    )
    text = format_report(report)
    payload = report.to_dict()
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.txt").write_text(text, encoding="utf-8")
        (out_dir / "report.json").write_text(
            json.dumps(payload, indent=2), encoding="utf-8"
        )
    _emit(payload, text, args.format)
    return EXIT_OK if not report.incomplete else EXIT_CONFIG


def cmd_dataset(args: argparse.Namespace) -> int:
    if args.action == "generate":
        config = GeneratorConfig(seed=args.seed, n_rows=args.rows)
        table, _schema, kb = generate(config)
        csv_path = Path(args.out_csv)
        try:
            export_csv(table, csv_path)
            from .kb import save_kb

            save_kb(kb, args.out_kb)
        except OSError as exc:
            raise CliError(f"cannot write output: {exc}", EXIT_IO)
        _emit(
            {"csv": str(csv_path), "kb": str(args.out_kb),
             "rows": table.row_count, "fields": len(table.schema.fields)},
            f"wrote {table.row_count} rows x {len(table.schema.fields)} fields "
            f"to {csv_path}; KB to {args.out_kb}",
            args.format,
        )
        return EXIT_OK

    table, kb = _load_dataset(args.csv, args.kb_file)
    if args.action == "validate":
        report = validate(table)
        payload = {
            "rows": table.row_count,
            "violations": [
                {"field": v.field, "row": v.row, "reason": v.reason}
                for v in report
            ],
        }
        text = (f"OK: {table.row_count} rows, no violations" if not report
                else "\n".join(f"{v.field} row {v.row}: {v.reason}" for v in report))
        _emit(payload, text, args.format)
        return EXIT_OK if not report else EXIT_VALIDATION

    if args.action == "export":
        text = canonical_table_text(table)
        if args.out in (None, "-"):
            sys.stdout.write(text)
        else:
            try:
                Path(args.out).write_text(text, encoding="utf-8")
            except OSError as exc:
                raise CliError(f"cannot write output: {exc}", EXIT_IO)
        return EXIT_OK

    raise CliError(f"unknown dataset action {args.action!r}", EXIT_CONFIG)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relgate",
        description="Release-test table analysis assistant",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--data-dir", default=None)
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("query", help="answer one question over a dataset")
    p.add_argument("--dataset", required=True, help="CSV file")
    p.add_argument("--kb", required=True, help="knowledge-base YAML file")
    p.add_argument("--question", required=True)
    p.add_argument("--k", type=int, default=3, help="few-shot examples")
    p.add_argument("--n", type=int, default=3, help="self-consistency samples")
    p.add_argument("--mode", choices=("safe", "natural_language"), default="safe")
    p.add_argument("--backend", default=None,
                   help="scripted:<fixtures.json> | http | config")
    p.add_argument("--config", default=None)
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="benchmark suite operations")
    p.add_argument("action", choices=("run", "report", "fixtures", "export-suite"))
    p.add_argument("--suite", default="shipped",
                   help='suite file or "shipped"')
    p.add_argument("--k", default="0,1,2,3", help="comma-separated k values")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--mode", choices=("safe", "natural_language"), default="safe")
    p.add_argument("--backend", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--report", default=None, help="report JSON (for report action)")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("dataset", help="dataset generation and validation")
    p.add_argument("action", choices=("generate", "validate", "export"))
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--rows", type=int, default=55000)
    p.add_argument("--out-csv", default="dataset.csv")
    p.add_argument("--out-kb", default="kb.yaml")
    p.add_argument("--csv", default=None, help="input CSV (validate/export)")
    p.add_argument("--kb-file", default=None, help="input KB (validate/export)")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.set_defaults(func=cmd_dataset)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.code
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
