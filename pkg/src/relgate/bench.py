"""Ablation benchmark: case generation, strict matching, suite running.

A suite starts from seeds (a full ground-truth plan plus one natural-language
question per plan prefix); every prefix becomes a case whose expected table
is materialized once through the brute-force oracle.  Evaluation is strict:
same column names, same record count, records identical — positionally when
the ground-truth plan's final ordering comes from a sort, as multisets
otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

from . import actor
from .gateway import Backend, GatewayError, SamplingError
from .kb import KnowledgeBaseDoc
from .oracle import oracle_execute
from .plan import (
    AggregateStep,
    AnalysisPlan,
    SortStep,
    classify_difficulty,
    validate_plan,
)
from .planner import PlanningFailure, plan_query
from .table import Table, render_value

FLOAT_REL_TOL = 1e-9

BANDS = ((1, "1"), (2, "1-2"), (3, "1-3"), (4, "1-4"))
SHIPPED_BAND_TOTALS = {"1": 16, "1-2": 32, "1-3": 44, "1-4": 50}


class BenchmarkError(Exception):
    pass


@dataclass(frozen=True)
class MatchVerdict:
    matched: bool
    diff: str = ""


@dataclass(frozen=True)
class AblationSeed:
    """Full ground-truth plan plus one query text per plan prefix."""

    id: str
    plan: AnalysisPlan
    queries: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.queries) != len(self.plan.steps):
            raise BenchmarkError(
                f"seed {self.id!r}: {len(self.plan.steps)} steps need "
                f"{len(self.plan.steps)} queries, got {len(self.queries)}"
            )


@dataclass(frozen=True)
class BenchmarkCase:
    id: str
    query_text: str
    difficulty: int
    ground_truth_plan: AnalysisPlan
    expected: Table
    ordered: bool  # positional row comparison (ground truth ends in a sort)


def plan_is_ordered(plan: AnalysisPlan) -> bool:
    """True when the last order-affecting step (sort or aggregate) is a sort."""
    for step in reversed(plan.steps):
        if isinstance(step, SortStep):
            return True
        if isinstance(step, AggregateStep):
            return False
    return False


def generate_cases(seeds: list[AblationSeed], dataset: Table) -> list[BenchmarkCase]:
    """One case per plan prefix, expected tables via the oracle."""
    cases: list[BenchmarkCase] = []
    for seed in seeds:
        schema = seed.plan.bound()
        for n in range(1, len(seed.plan.steps) + 1):
            prefix = AnalysisPlan(steps=seed.plan.steps[:n], schema=schema)
            report = validate_plan(prefix, dataset.schema)
            if report:
                raise BenchmarkError(
                    f"seed {seed.id!r} prefix {n}: invalid plan: "
                    + "; ".join(v.reason for v in report)
                )
            cases.append(BenchmarkCase(
                id=f"{seed.id}#{n}",
                query_text=seed.queries[n - 1],
                difficulty=classify_difficulty(prefix),
                ground_truth_plan=prefix,
                expected=oracle_execute(prefix, dataset),
                ordered=plan_is_ordered(prefix),
            ))
    return cases


def band_totals(cases: list[BenchmarkCase]) -> dict[str, int]:
    return {
        label: sum(1 for c in cases if c.difficulty <= upper)
        for upper, label in BANDS
    }


def check_shipped_bands(cases: list[BenchmarkCase]) -> None:
    got = band_totals(cases)
    if got != SHIPPED_BAND_TOTALS:
        raise BenchmarkError(
            f"shipped suite band totals {got} do not match {SHIPPED_BAND_TOTALS}"
        )


# ---------------------------------------------------------------------------
# strict matching

def _value_eq(a: Any, b: Any) -> bool:
    if a is None or b is None:
        return a is None and b is None
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if isinstance(a, float) or isinstance(b, float):
        if not isinstance(a, (int, float)) or not isinstance(b, (int, float)):
            return False
        return math.isclose(a, b, rel_tol=FLOAT_REL_TOL, abs_tol=0.0)
    return type(a) is type(b) and a == b


def _row_eq(a: tuple, b: tuple) -> bool:
    return all(_value_eq(x, y) for x, y in zip(a, b))


def _row_text(row: tuple) -> str:
    return ",".join(render_value(v) for v in row)


def strict_match(actual: Table, expected: Table, ordered: bool) -> MatchVerdict:
    """Columns by name set, counts equal, rows identical (see module doc)."""
    actual_names = set(actual.schema.names)
    expected_names = set(expected.schema.names)
    if actual_names != expected_names:
        missing = sorted(expected_names - actual_names)
        extra = sorted(actual_names - expected_names)
        parts = []
        if missing:
            parts.append(f"missing columns {missing}")
        if extra:
            parts.append(f"extra columns {extra}")
        return MatchVerdict(False, "; ".join(parts))
    if actual.row_count != expected.row_count:
        return MatchVerdict(
            False,
            f"row count {actual.row_count}, expected {expected.row_count}",
        )

    # align actual's columns to expected's order
    order = [actual.schema.names.index(n) for n in expected.schema.names]
    actual_rows = [
        tuple(actual.columns[j][i] for j in order) for i in range(actual.row_count)
    ]
    expected_rows = [expected.row(i) for i in range(expected.row_count)]
    if not ordered:
        actual_rows.sort(key=_row_text)
        expected_rows.sort(key=_row_text)
    for i, (a, e) in enumerate(zip(actual_rows, expected_rows)):
        if not _row_eq(a, e):
            where = f"row {i}" if ordered else f"row {i} (canonical order)"
            return MatchVerdict(
                False,
                f"{where}: expected ({_row_text(e)}), got ({_row_text(a)})",
            )
    return MatchVerdict(True)


def success_rate(success: int, total: int) -> float:
    """Percentage to two decimals; total must be positive."""
    if total < 1:
        raise ValueError("total must be >= 1")
    if not 0 <= success <= total:
        raise ValueError("success must be within [0, total]")
    return round(100.0 * success / total, 2)


def format_rate(rate: float) -> str:
    text = f"{rate:.2f}".rstrip("0").rstrip(".")
    return f"{text}%"


# ---------------------------------------------------------------------------
# suite running

@dataclass(frozen=True)
class CaseOutcome:
    case_id: str
    k_shot: int
    difficulty: int
    success: bool
    reason: str = ""  # planning_failure | realization_failure | mismatch
    detail: str = ""


@dataclass(frozen=True)
class ReportRow:
    k_shot: int
    band: str
    total: int
    success: int
    failed: int
    rate: float


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[ReportRow, ...]
    outcomes: tuple[CaseOutcome, ...]
    incomplete: bool = False
    error: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "incomplete": self.incomplete,
            "error": self.error,
            "rows": [
                {
                    "k_shot": r.k_shot, "band": r.band, "total": r.total,
                    "success": r.success, "failed": r.failed, "rate": r.rate,
                }
                for r in self.rows
            ],
            "outcomes": [
                {
                    "case_id": o.case_id, "k_shot": o.k_shot,
                    "difficulty": o.difficulty, "success": o.success,
                    "reason": o.reason, "detail": o.detail,
                }
                for o in self.outcomes
            ],
        }


def report_from_dict(raw: dict[str, Any]) -> BenchReport:
    return BenchReport(
        rows=tuple(ReportRow(
            k_shot=r["k_shot"], band=r["band"], total=r["total"],
            success=r["success"], failed=r["failed"], rate=r["rate"],
        ) for r in raw["rows"]),
        outcomes=tuple(CaseOutcome(
            case_id=o["case_id"], k_shot=o["k_shot"], difficulty=o["difficulty"],
            success=o["success"], reason=o.get("reason", ""),
            detail=o.get("detail", ""),
        ) for o in raw["outcomes"]),
        incomplete=raw.get("incomplete", False),
        error=raw.get("error", ""),
    )


@dataclass(frozen=True)
class SuiteRunConfig:
    k_list: tuple[int, ...] = (0, 1, 2, 3)
    n_samples: int = 3
    mode: str = "safe"
    max_retries: int = 3

    def __post_init__(self) -> None:
        if not self.k_list:
            raise ValueError("k_list must be non-empty")


def _rows_from_outcomes(outcomes: list[CaseOutcome],
                        k_list: tuple[int, ...]) -> tuple[ReportRow, ...]:
    rows = []
    for k in k_list:
        for upper, label in BANDS:
            band_outcomes = [
                o for o in outcomes if o.k_shot == k and o.difficulty <= upper
            ]
            total = len(band_outcomes)
            if total == 0:
                continue
            success = sum(1 for o in band_outcomes if o.success)
            rows.append(ReportRow(
                k_shot=k, band=label, total=total, success=success,
                failed=total - success, rate=success_rate(success, total),
            ))
    return tuple(rows)


def run_suite(
    cases: list[BenchmarkCase],
    dataset: Table,
    kb: KnowledgeBaseDoc,
    backend: Backend,
    config: SuiteRunConfig = SuiteRunConfig(),
) -> BenchReport:
    """Plan, run, and strictly match every case at every k.

    Task-level failures (planning, realization, mismatch) are outcomes;
    gateway/configuration errors abort the suite and flag the partial
    report as incomplete.
    """
    if not cases:
        raise ValueError("cases must be non-empty")
    outcomes: list[CaseOutcome] = []
    reflection = actor.ReflectionConfig(max_retries=config.max_retries,
                                        mode=config.mode)
    for k in config.k_list:
        for case in cases:
            try:
                decision = plan_query(
                    case.query_text, kb, backend, k=k,
                    n_samples=config.n_samples,
                )
            except PlanningFailure as exc:
                outcomes.append(CaseOutcome(
                    case.id, k, case.difficulty, False,
                    reason="planning_failure", detail=str(exc),
                ))
                continue
            except (SamplingError, GatewayError) as exc:
                return BenchReport(
                    rows=_rows_from_outcomes(outcomes, config.k_list),
                    outcomes=tuple(outcomes),
                    incomplete=True,
                    error=f"suite aborted at case {case.id!r} (k={k}): {exc}",
                )
            try:
                result = actor.run(decision, dataset, kb, backend, reflection)
            except actor.StepRealizationError as exc:
                outcomes.append(CaseOutcome(
                    case.id, k, case.difficulty, False,
                    reason="realization_failure", detail=str(exc),
                ))
                continue
            except (SamplingError, GatewayError) as exc:
                return BenchReport(
                    rows=_rows_from_outcomes(outcomes, config.k_list),
                    outcomes=tuple(outcomes),
                    incomplete=True,
                    error=f"suite aborted at case {case.id!r} (k={k}): {exc}",
                )
            verdict = strict_match(result.final_table, case.expected, case.ordered)
            if verdict.matched:
                outcomes.append(CaseOutcome(case.id, k, case.difficulty, True))
            else:
                outcomes.append(CaseOutcome(
                    case.id, k, case.difficulty, False,
                    reason="mismatch", detail=verdict.diff,
                ))
    return BenchReport(
        rows=_rows_from_outcomes(outcomes, config.k_list),
        outcomes=tuple(outcomes),
    )


_HEADERS = ("# Examples", "Task Difficulty", "# Total Tasks", "# Success",
            "# Failed", "Performance")


def format_report(report: BenchReport) -> str:
    """Aligned text table, rows ordered by (k, band)."""
    body = [
        (
            f"{row.k_shot}-shot", row.band, str(row.total), str(row.success),
            str(row.failed), format_rate(row.rate),
        )
        for row in report.rows
    ]
    widths = [
        max(len(_HEADERS[i]), *(len(r[i]) for r in body)) if body else len(_HEADERS[i])
        for i in range(len(_HEADERS))
    ]
    def fmt(cells) -> str:
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

    lines = [fmt(_HEADERS), fmt(tuple("-" * w for w in widths))]
    last_k: int | None = None
    for row, cells in zip(report.rows, body):
        if last_k is not None and row.k_shot != last_k:
            lines.append(fmt(tuple("-" * w for w in widths)))
        last_k = row.k_shot
        lines.append(fmt(cells))
    if report.incomplete:
        lines.append("")
        lines.append(f"INCOMPLETE: {report.error}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# scripted-planner fixture builders (offline suite runs and harness checks)

def _fenced(plan: AnalysisPlan) -> str:
    from .plan import plan_to_wire_text

    return f"Reasoning: reproduce the ground-truth analysis.\n\n```json\n{plan_to_wire_text(plan)}\n```"


def oracle_fixtures(
    cases: list[BenchmarkCase],
    k_list: tuple[int, ...],
    n_samples: int,
    mode: str = "safe",
    fail_case_ids: set[str] | frozenset[str] = frozenset(),
) -> list[dict[str, Any]]:
    """Fixtures that replay each case's ground-truth plan for every sample.

    Cases in ``fail_case_ids`` get unparseable responses instead, which the
    harness reports as planning failures.  With mode natural_language one
    extra fixture per plan step feeds the actor the matching step document.
    """
    from .plan import plan_to_wire, render_steps
    import json as _json

    fixtures: list[dict[str, Any]] = []
    for _k in k_list:
        for case in cases:
            for _s in range(n_samples):
                if case.id in fail_case_ids:
                    fixtures.append({
                        "match": case.query_text,
                        "response": "I cannot express this as a plan.",
                    })
                else:
                    fixtures.append({
                        "match": case.query_text,
                        "response": _fenced(case.ground_truth_plan),
                    })
            if mode == "natural_language" and case.id not in fail_case_ids:
                steps = plan_to_wire(case.ground_truth_plan)["steps"]
                for sentence, step in zip(render_steps(case.ground_truth_plan), steps):
                    fixtures.append({
                        "match": sentence,
                        "response": f"```json\n{_json.dumps(step)}\n```",
                    })
    return fixtures
