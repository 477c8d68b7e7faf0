"""Deterministic interpreter for analysis plans over tables.

Semantics (shared with the brute-force oracle in :mod:`relgate.oracle`):

* null never satisfies any comparator except ``is_null``;
* group-by groups nulls together and orders groups by first appearance;
* sorts are stable with nulls last regardless of direction;
* aggregate functions skip nulls; ``count``/``distinct_count`` of nothing is
  0, every other aggregate of nothing is null;
* validated plans cannot fail at runtime.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Any

from .plan import (
    AggregateStep,
    AnalysisPlan,
    And,
    Condition,
    DistinctStep,
    LimitStep,
    Or,
    PlanStep,
    Predicate,
    SliceStep,
    SortStep,
    aggregate_result_spec,
)
from .table import Schema, Table


@dataclass(frozen=True)
class StepTiming:
    input_rows: int
    output_rows: int
    wall_s: float


@dataclass(frozen=True)
class ExecutionTrace:
    steps: tuple[StepTiming, ...]
    total_s: float


def _satisfies(cond: Condition, value: Any) -> bool:
    c = cond.comparator
    if c == "is_null":
        return value is None
    if value is None:
        return False
    if c == "not_null":
        return True
    op = cond.operand
    if c == "eq":
        return value == op
    if c == "ne":
        return value != op
    if c == "lt":
        return value < op
    if c == "le":
        return value <= op
    if c == "gt":
        return value > op
    if c == "ge":
        return value >= op
    if c == "in":
        return value in op
    if c == "not_in":
        return value not in op
    if c == "contains":
        return op in value
    raise AssertionError(f"unknown comparator {c}")  # pragma: no cover


def _eval_predicate(p: Predicate, row: dict[str, Any]) -> bool:
    if isinstance(p, Condition):
        return _satisfies(p, row[p.column.lower()])
    if isinstance(p, And):
        return all(_eval_predicate(c, row) for c in p.children)
    if isinstance(p, Or):
        return any(_eval_predicate(c, row) for c in p.children)
    raise AssertionError(f"unknown predicate node {p!r}")  # pragma: no cover


class _Rev:
    """Inverts comparisons for descending sort keys of any ordered type."""

    __slots__ = ("value",)

    def __init__(self, value: Any):
        self.value = value

    def __lt__(self, other: "_Rev") -> bool:
        return other.value < self.value

    def __eq__(self, other: object) -> bool:
        return isinstance(other, _Rev) and other.value == self.value


def _column_index(table: Table, name: str) -> int:
    want = name.lower()
    for i, f in enumerate(table.schema.fields):
        if f.name.lower() == want:
            return i
    raise KeyError(name)  # unreachable on validated plans


def _referenced_columns(p: Predicate) -> set[str]:
    if isinstance(p, Condition):
        return {p.column.lower()}
    out: set[str] = set()
    for c in p.children:
        out |= _referenced_columns(c)
    return out


def _exec_slice(step: SliceStep, table: Table) -> Table:
    if step.where is not None:
        # materialize only the columns the predicate actually reads
        wanted = _referenced_columns(step.where)
        pairs = [
            (f.name.lower(), col)
            for f, col in zip(table.schema.fields, table.columns)
            if f.name.lower() in wanted
        ]
        keep: list[int] = []
        for i in range(table.row_count):
            row = {n: col[i] for n, col in pairs}
            if _eval_predicate(step.where, row):
                keep.append(i)
    else:
        keep = list(range(table.row_count))

    if step.select == "all":
        specs = list(table.schema.fields)
        src = list(range(len(table.columns)))
    else:
        src = [_column_index(table, n) for n in step.select]
        specs = [table.schema.fields[j] for j in src]
    columns = [[table.columns[j][i] for i in keep] for j in src]
    return Table(Schema(tuple(specs)), columns, _skip_checks=True)


def _agg_value(func: str, values: list[Any]) -> Any:
    """Aggregate the non-null values of one group."""
    present = [v for v in values if v is not None]
    if func == "count":
        return len(present)
    if func == "distinct_count":
        return len(set(present))
    if not present:
        return None
    if func == "sum":
        return sum(present)
    if func == "mean":
        return sum(present) / len(present)
    if func == "min":
        return min(present)
    if func == "max":
        return max(present)
    if func == "median":
        ordered = sorted(present)
        n = len(ordered)
        mid = n // 2
        if n % 2 == 1:
            return float(ordered[mid])
        return (ordered[mid - 1] + ordered[mid]) / 2
    raise AssertionError(f"unknown aggregate {func}")  # pragma: no cover


def _exec_aggregate(step: AggregateStep, table: Table) -> Table:
    group_idx = [_column_index(table, n) for n in step.group_by]
    group_specs = [table.schema.fields[j] for j in group_idx]
    if step.column is not None:
        col_idx = _column_index(table, step.column)
        source_spec = table.schema.fields[col_idx]
        values = list(table.columns[col_idx])
    else:
        col_idx = None
        source_spec = None
        # count without a column counts rows, nulls included
        values = [True] * table.row_count
    result_spec = aggregate_result_spec(step, source_spec)

    if not group_idx:
        if step.column is None and step.func == "count":
            out = table.row_count
        else:
            out = _agg_value(step.func, values)
        return Table(Schema((result_spec,)), [[out]], _skip_checks=True)

    order: list[tuple[Any, ...]] = []
    buckets: dict[tuple[Any, ...], list[Any]] = {}
    for i in range(table.row_count):
        key = tuple(table.columns[j][i] for j in group_idx)
        if key not in buckets:
            buckets[key] = []
            order.append(key)
        buckets[key].append(values[i])

    columns: list[list[Any]] = [[] for _ in group_specs] + [[]]
    for key in order:
        for j, part in enumerate(key):
            columns[j].append(part)
        if step.column is None and step.func == "count":
            columns[-1].append(len(buckets[key]))
        else:
            columns[-1].append(_agg_value(step.func, buckets[key]))
    return Table(Schema(tuple(group_specs) + (result_spec,)), columns, _skip_checks=True)


def _exec_sort(step: SortStep, table: Table) -> Table:
    cols = [(_column_index(table, c), d) for c, d in step.keys]

    def key(i: int):
        parts = []
        for j, direction in cols:
            v = table.columns[j][i]
            if v is None:
                parts.append((1, _Rev(0) if direction == "desc" else 0))
            else:
                parts.append((0, _Rev(v) if direction == "desc" else v))
        return tuple(parts)

    index = sorted(range(table.row_count), key=key)
    columns = [[col[i] for i in index] for col in table.columns]
    return Table(table.schema, columns, _skip_checks=True)


def _exec_limit(step: LimitStep, table: Table) -> Table:
    columns = [col[: step.n] for col in table.columns]
    return Table(table.schema, columns, _skip_checks=True)


def _exec_distinct(step: DistinctStep, table: Table) -> Table:
    src = [_column_index(table, n) for n in step.columns]
    specs = [table.schema.fields[j] for j in src]
    seen: set[tuple[Any, ...]] = set()
    keep: list[int] = []
    for i in range(table.row_count):
        key = tuple(table.columns[j][i] for j in src)
        if key not in seen:
            seen.add(key)
            keep.append(i)
    columns = [[table.columns[j][i] for i in keep] for j in src]
    return Table(Schema(tuple(specs)), columns, _skip_checks=True)


def execute_step(step: PlanStep, table: Table) -> Table:
    """Apply one validated step; no error is reachable on validated input."""
    if isinstance(step, SliceStep):
        return _exec_slice(step, table)
    if isinstance(step, AggregateStep):
        return _exec_aggregate(step, table)
    if isinstance(step, SortStep):
        return _exec_sort(step, table)
    if isinstance(step, LimitStep):
        return _exec_limit(step, table)
    if isinstance(step, DistinctStep):
        return _exec_distinct(step, table)
    raise TypeError(f"unknown step type {type(step).__name__}")


def execute_plan(plan: AnalysisPlan, table: Table) -> tuple[Table, ExecutionTrace]:
    """Left-to-right fold of :func:`execute_step` with per-step timing."""
    t0 = time.perf_counter()
    timings: list[StepTiming] = []
    current = table
    for step in plan.steps:
        s0 = time.perf_counter()
        nxt = execute_step(step, current)
        timings.append(StepTiming(current.row_count, nxt.row_count,
                                  time.perf_counter() - s0))
        current = nxt
    return current, ExecutionTrace(tuple(timings), time.perf_counter() - t0)
