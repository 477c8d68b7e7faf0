"""HTTP service: datasets, queries, runs, benchmark operations.

Runs execute asynchronously on a bounded worker pool and are polled via
``GET /v1/runs/{id}``.  Every status transition appends the full run record
to a newline-delimited log, so the latest line per run id reconstructs state
after a crash and operators can grep the history.  Result tables inside
records are capped; the full result is always downloadable as CSV.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel

from . import actor
from .bench import SuiteRunConfig, run_suite
from .config import ServiceConfig
from .gateway import Backend, backend_from_config
from .kb import KnowledgeBaseDoc, dump_kb, load_kb
from .plan import plan_to_wire
from .planner import PlanningFailure, plan_query
from .suite import load_suite
from .table import Table, export_csv_text, load_csv, validate

RESULT_ROW_CAP = 1000


def _now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _json_cell(value: Any) -> Any:
    if isinstance(value, datetime):
        return value.strftime("%Y-%m-%dT%H:%M:%SZ")
    return value


def table_payload(table: Table, cap: int = RESULT_ROW_CAP) -> dict[str, Any]:
    rows = [
        [_json_cell(v) for v in table.row(i)]
        for i in range(min(table.row_count, cap))
    ]
    return {
        "columns": list(table.schema.names),
        "rows": rows,
        "row_count": table.row_count,
        "truncated": table.row_count > cap,
    }


@dataclass
class DatasetEntry:
    dataset_id: str
    table: Table
    kb: KnowledgeBaseDoc
    kb_id: str


class QueryRequest(BaseModel):
    dataset_id: str
    question: str
    k_shot: int = 3
    n_samples: int = 3
    mode: str = "safe"


class DatasetUpload(BaseModel):
    csv_text: str
    kb_text: str | None = None
    kb_ref: str | None = None


class BenchRequest(BaseModel):
    suite: str
    k_list: list[int] = [0, 1, 2, 3]
    mode: str = "safe"
    n_samples: int = 3


class ServiceState:
    """All mutable service state plus its append-only persistence."""

    def __init__(self, config: ServiceConfig, backend: Backend | None = None):
        self.config = config
        self.backend = backend if backend is not None else backend_from_config(
            config.backend
        )
        self.data_dir = Path(config.data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        (self.data_dir / "datasets").mkdir(exist_ok=True)
        (self.data_dir / "results").mkdir(exist_ok=True)
        self.runs_log = self.data_dir / "runs.ndjson"
        self.reports_log = self.data_dir / "bench_reports.ndjson"
        self.lock = threading.Lock()
        self.datasets: dict[str, DatasetEntry] = {}
        self.kbs: dict[str, KnowledgeBaseDoc] = {}
        self.runs: dict[str, dict[str, Any]] = {}
        self.reports: dict[str, dict[str, Any]] = {}
        self.pool = ThreadPoolExecutor(max_workers=config.workers)
        self._replay()

    # -- persistence ---------------------------------------------------

    def _append(self, log: Path, record: dict[str, Any]) -> None:
        line = json.dumps(record, ensure_ascii=False)
        with self.lock:
            with log.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()

    def _replay(self) -> None:
        for csv_path in sorted((self.data_dir / "datasets").glob("*.csv")):
            kb_path = csv_path.with_suffix(".kb.yaml")
            if not kb_path.exists():
                continue
            try:
                kb = load_kb(kb_path)
                table = load_csv(csv_path.read_bytes(), kb.schema)
            except Exception:
                continue  # damaged artifacts are skipped, not fatal
            dataset_id = csv_path.stem
            kb_id = hashlib.sha256(dump_kb(kb).encode()).hexdigest()[:16]
            self.kbs[kb_id] = kb
            self.datasets[dataset_id] = DatasetEntry(dataset_id, table, kb, kb_id)
        for log, target in ((self.runs_log, self.runs),
                            (self.reports_log, self.reports)):
            if not log.exists():
                continue
            for line in log.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError:
                    continue
                key = record.get("run_id") or record.get("report_id")
                if key:
                    target[key] = record

    def persist_run(self, record: dict[str, Any]) -> None:
        self.runs[record["run_id"]] = record
        self._append(self.runs_log, record)

    def persist_report(self, record: dict[str, Any]) -> None:
        self.reports[record["report_id"]] = record
        self._append(self.reports_log, record)

    # -- datasets -------------------------------------------------------

    def register_dataset(self, upload: DatasetUpload) -> DatasetEntry:
        if upload.kb_text is not None:
            kb = load_kb(upload.kb_text)
            kb_id = hashlib.sha256(upload.kb_text.encode()).hexdigest()[:16]
            self.kbs.setdefault(kb_id, kb)
        elif upload.kb_ref is not None:
            kb = self.kbs.get(upload.kb_ref)
            if kb is None:
                raise KeyError(upload.kb_ref)
            kb_id = upload.kb_ref
        else:
            raise ValueError("either kb_text or kb_ref is required")
        table = load_csv(upload.csv_text, kb.schema)
        report = validate(table)
        if report:
            first = report[0]
            raise ValueError(
                f"dataset invalid: field {first.field!r} row {first.row}: "
                f"{first.reason} ({len(report)} violations)"
            )
        digest = hashlib.sha256(
            upload.csv_text.encode("utf-8") + kb_id.encode()
        ).hexdigest()[:16]
        if digest not in self.datasets:
            entry = DatasetEntry(digest, table, kb, kb_id)
            (self.data_dir / "datasets" / f"{digest}.csv").write_text(
                upload.csv_text, encoding="utf-8"
            )
            (self.data_dir / "datasets" / f"{digest}.kb.yaml").write_text(
                dump_kb(kb), encoding="utf-8"
            )
            self.datasets[digest] = entry
        return self.datasets[digest]

    # -- jobs -------------------------------------------------------------

    def execute_query_job(self, run_id: str) -> None:
        record = dict(self.runs[run_id])
        entry = self.datasets[record["dataset_id"]]
        cfg = record["config"]
        t_total = time.perf_counter()
        try:
            t0 = time.perf_counter()
            decision = plan_query(
                record["question"], entry.kb, self.backend,
                k=cfg["k_shot"], n_samples=cfg["n_samples"],
            )
            planning_ms = int((time.perf_counter() - t0) * 1000)
            record["decision"] = decision.to_dict()
            record["status"] = "executing"
            record["timings"] = {"planning_ms": planning_ms}
            self.persist_run(dict(record))

            t1 = time.perf_counter()
            result = actor.run(
                decision, entry.table, entry.kb, self.backend,
                actor.ReflectionConfig(mode=cfg["mode"]),
            )
            execution_ms = int((time.perf_counter() - t1) * 1000)
            csv_path = self.data_dir / "results" / f"{run_id}.csv"
            csv_path.write_text(export_csv_text(result.final_table),
                                encoding="utf-8")
            record.update(
                status="done",
                result=table_payload(result.final_table),
                memory=[_memory_dict(m) for m in result.memory],
                plan_executed=plan_to_wire(result.plan_executed),
                reflection_attempts_total=result.reflection_attempts_total,
                timings={
                    "planning_ms": planning_ms,
                    "execution_ms": execution_ms,
                    "total_ms": max(
                        int((time.perf_counter() - t_total) * 1000),
                        planning_ms + execution_ms,
                    ),
                },
            )
        except PlanningFailure as exc:
            record.update(
                status="failed",
                failure={
                    "reason": "planning_failure",
                    "detail": str(exc),
                    "candidate_errors": [
                        {"sample_index": c.sample_index, "error": c.error}
                        for c in exc.candidates
                    ],
                },
                timings=_fail_timings(record, t_total),
            )
        except actor.StepRealizationError as exc:
            record.update(
                status="failed",
                failure={"reason": "realization_failure", "detail": str(exc)},
                memory=[_memory_dict(m) for m in exc.memory],
                timings=_fail_timings(record, t_total),
            )
        except Exception as exc:  # gateway/config faults land here
            record.update(
                status="failed",
                failure={"reason": "error", "detail": str(exc)},
                timings=_fail_timings(record, t_total),
            )
        self.persist_run(record)

    def resolve_suite(self, name: str) -> str | Path:
        if name == "shipped":
            return name
        path = Path(name)
        if not path.is_absolute():
            path = self.data_dir / "suites" / name
        return path

    def execute_bench_job(self, report_id: str) -> None:
        record = dict(self.reports[report_id])
        try:
            suite = load_suite(self.resolve_suite(record["suite"]))
            report = run_suite(
                suite.cases, suite.dataset, suite.kb, self.backend,
                SuiteRunConfig(
                    k_list=tuple(record["k_list"]),
                    n_samples=record["n_samples"],
                    mode=record["mode"],
                ),
            )
            record.update(
                status="done",
                incomplete=report.incomplete,
                report=report.to_dict(),
            )
        except Exception as exc:
            record.update(status="failed", error=str(exc))
        self.persist_report(record)


def _memory_dict(m: actor.MemoryRecord) -> dict[str, Any]:
    return {
        "attempt_index": m.attempt_index,
        "emitted_document": m.emitted_document,
        "task_context": m.task_context,
        "error": m.error,
        "execution_excerpt": m.execution_excerpt,
    }


def _fail_timings(record: dict[str, Any], t_total: float) -> dict[str, int]:
    timings = dict(record.get("timings") or {})
    timings.setdefault("planning_ms", 0)
    timings.setdefault("execution_ms", 0)
    timings["total_ms"] = max(
        int((time.perf_counter() - t_total) * 1000),
        timings["planning_ms"] + timings["execution_ms"],
    )
    return timings


def create_app(config: ServiceConfig | None = None,
               backend: Backend | None = None) -> FastAPI:
    config = config or ServiceConfig()
    state = ServiceState(config, backend=backend)
    app = FastAPI(title="relgate", version="0.1.0")
    app.state.service = state

    @app.get("/v1/health")
    def health() -> dict[str, str]:
        return {"status": "ok"}

    @app.post("/v1/datasets", status_code=201)
    def upload_dataset(upload: DatasetUpload) -> dict[str, Any]:
        try:
            entry = state.register_dataset(upload)
        except KeyError as exc:
            raise HTTPException(400, f"unknown KB reference {exc}")
        except Exception as exc:
            raise HTTPException(400, str(exc))
        return {
            "dataset_id": entry.dataset_id,
            "kb_id": entry.kb_id,
            "rows": entry.table.row_count,
            "fields": len(entry.table.schema.fields),
        }

    @app.get("/v1/datasets")
    def list_datasets() -> dict[str, Any]:
        return {
            "datasets": [
                {
                    "dataset_id": e.dataset_id,
                    "rows": e.table.row_count,
                    "fields": len(e.table.schema.fields),
                    "kb_id": e.kb_id,
                }
                for e in state.datasets.values()
            ]
        }

    @app.post("/v1/query", status_code=201)
    def submit_query(req: QueryRequest) -> dict[str, Any]:
        if req.dataset_id not in state.datasets:
            raise HTTPException(404, f"unknown dataset {req.dataset_id!r}")
        if not req.question.strip():
            raise HTTPException(422, "question must be non-empty")
        if req.mode not in ("safe", "natural_language"):
            raise HTTPException(422, f"unknown mode {req.mode!r}")
        run_id = uuid.uuid4().hex
        record = {
            "run_id": run_id,
            "dataset_id": req.dataset_id,
            "question": req.question,
            "config": {
                "k_shot": req.k_shot,
                "n_samples": req.n_samples,
                "mode": req.mode,
            },
            "status": "planning",
            "decision": None,
            "memory": [],
            "result": None,
            "failure": None,
            "timings": None,
            "created_at": _now_iso(),
        }
        state.persist_run(record)
        state.pool.submit(state.execute_query_job, run_id)
        return record

    @app.get("/v1/runs/{run_id}")
    def get_run(run_id: str) -> dict[str, Any]:
        record = state.runs.get(run_id)
        if record is None:
            raise HTTPException(404, f"unknown run {run_id!r}")
        return record

    @app.get("/v1/runs")
    def list_runs(dataset_id: str | None = None, limit: int = 50,
                  offset: int = 0) -> dict[str, Any]:
        records = [
            r for r in state.runs.values()
            if dataset_id is None or r["dataset_id"] == dataset_id
        ]
        records.sort(key=lambda r: r["created_at"], reverse=True)
        return {"runs": records[offset : offset + limit], "total": len(records)}

    @app.get("/v1/runs/{run_id}/result.csv")
    def download_result(run_id: str) -> Response:
        record = state.runs.get(run_id)
        if record is None:
            raise HTTPException(404, f"unknown run {run_id!r}")
        if record["status"] != "done":
            raise HTTPException(404, f"run {run_id!r} has no result "
                                     f"(status {record['status']})")
        path = state.data_dir / "results" / f"{run_id}.csv"
        if not path.exists():
            raise HTTPException(404, "result file missing")
        return Response(content=path.read_text(encoding="utf-8"),
                        media_type="text/csv")

    @app.post("/v1/bench/run", status_code=201)
    def bench_run(req: BenchRequest) -> dict[str, Any]:
        if req.suite != "shipped":
            resolved = state.resolve_suite(req.suite)
            if not Path(resolved).is_file():
                raise HTTPException(404, f"unknown suite {req.suite!r}")
        if not req.k_list:
            raise HTTPException(422, "k_list must be non-empty")
        report_id = uuid.uuid4().hex
        record = {
            "report_id": report_id,
            "suite": req.suite,
            "k_list": list(req.k_list),
            "mode": req.mode,
            "n_samples": req.n_samples,
            "status": "running",
            "incomplete": False,
            "report": None,
            "error": "",
            "created_at": _now_iso(),
        }
        state.persist_report(record)
        state.pool.submit(state.execute_bench_job, report_id)
        return {"report_id": report_id, "status": "running"}

    @app.get("/v1/bench/reports/{report_id}")
    def get_report(report_id: str) -> dict[str, Any]:
        record = state.reports.get(report_id)
        if record is None:
            raise HTTPException(404, f"unknown report {report_id!r}")
        return record

    @app.get("/v1/bench/reports")
    def list_reports() -> dict[str, Any]:
        records = sorted(state.reports.values(),
                         key=lambda r: r["created_at"], reverse=True)
        return {"reports": records}

    return app
