"""Brute-force reference executor.

Same contract as :func:`relgate.executor.execute_plan`, written as naive
per-row scans over row dictionaries and kept free of any code shared with
the column engine.  Used by tests for equivalence checking and by the
benchmark to materialize expected tables.
"""

from __future__ import annotations

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
    SliceStep,
    SortStep,
    aggregate_result_spec,
)
from .table import FieldSpec, Schema, Table

Row = dict[str, Any]


def _rows_of(table: Table) -> list[Row]:
    names = [f.name for f in table.schema.fields]
    out = []
    for i in range(table.row_count):
        out.append({n: table.columns[j][i] for j, n in enumerate(names)})
    return out


def _lookup(row: Row, name: str) -> Any:
    for k, v in row.items():
        if k.lower() == name.lower():
            return v
    raise KeyError(name)


def _spec_of(fields: list[FieldSpec], name: str) -> FieldSpec:
    for f in fields:
        if f.name.lower() == name.lower():
            return f
    raise KeyError(name)


def _cond_holds(cond: Condition, row: Row) -> bool:
    v = _lookup(row, cond.column)
    if cond.comparator == "is_null":
        return v is None
    if v is None:
        return False
    if cond.comparator == "not_null":
        return True
    w = cond.operand
    if cond.comparator == "eq":
        return v == w
    if cond.comparator == "ne":
        return v != w
    if cond.comparator == "lt":
        return v < w
    if cond.comparator == "le":
        return v <= w
    if cond.comparator == "gt":
        return v > w
    if cond.comparator == "ge":
        return v >= w
    if cond.comparator == "in":
        return any(v == x for x in w)
    if cond.comparator == "not_in":
        return all(v != x for x in w)
    if cond.comparator == "contains":
        return w in v
    raise AssertionError(cond.comparator)  # pragma: no cover


def _pred_holds(node: Any, row: Row) -> bool:
    if isinstance(node, Condition):
        return _cond_holds(node, row)
    if isinstance(node, And):
        for child in node.children:
            if not _pred_holds(child, row):
                return False
        return True
    if isinstance(node, Or):
        for child in node.children:
            if _pred_holds(child, row):
                return True
        return False
    raise AssertionError(node)  # pragma: no cover


def _slice_rows(step: SliceStep, rows: list[Row], fields: list[FieldSpec]
                ) -> tuple[list[Row], list[FieldSpec]]:
    kept = [r for r in rows if step.where is None or _pred_holds(step.where, r)]
    if step.select == "all":
        return [dict(r) for r in kept], fields
    out_fields = [_spec_of(fields, n) for n in step.select]
    out = [{f.name: _lookup(r, f.name) for f in out_fields} for r in kept]
    return out, out_fields


def _fold(func: str, group: list[Any]) -> Any:
    vals = [v for v in group if v is not None]
    if func == "count":
        return len(vals)
    if func == "distinct_count":
        distinct: list[Any] = []
        for v in vals:
            if all(v != d for d in distinct):
                distinct.append(v)
        return len(distinct)
    if not vals:
        return None
    if func == "min":
        best = vals[0]
        for v in vals[1:]:
            if v < best:
                best = v
        return best
    if func == "max":
        best = vals[0]
        for v in vals[1:]:
            if v > best:
                best = v
        return best
    if func == "sum":
        total = vals[0]
        for v in vals[1:]:
            total = total + v
        return total
    if func == "mean":
        total = vals[0]
        for v in vals[1:]:
            total = total + v
        return total / len(vals)
    if func == "median":
        ordered = list(vals)
        ordered.sort()
        n = len(ordered)
        if n % 2 == 1:
            return float(ordered[n // 2])
        return (ordered[n // 2 - 1] + ordered[n // 2]) / 2
    raise AssertionError(func)  # pragma: no cover


def _aggregate_rows(step: AggregateStep, rows: list[Row], fields: list[FieldSpec]
                    ) -> tuple[list[Row], list[FieldSpec]]:
    source = _spec_of(fields, step.column) if step.column is not None else None
    result = aggregate_result_spec(step, source)
    if not step.group_by:
        if step.func == "count" and step.column is None:
            value: Any = len(rows)
        else:
            value = _fold(step.func, [_lookup(r, step.column) for r in rows])
        return [{result.name: value}], [result]

    keys: list[tuple[Any, ...]] = []
    groups: list[list[Row]] = []
    for r in rows:
        key = tuple(_lookup(r, g) for g in step.group_by)
        for i, existing in enumerate(keys):
            if existing == key:
                groups[i].append(r)
                break
        else:
            keys.append(key)
            groups.append([r])

    group_fields = [_spec_of(fields, g) for g in step.group_by]
    out: list[Row] = []
    for key, members in zip(keys, groups):
        row: Row = {f.name: part for f, part in zip(group_fields, key)}
        if step.func == "count" and step.column is None:
            row[result.name] = len(members)
        else:
            row[result.name] = _fold(step.func, [_lookup(r, step.column) for r in members])
        out.append(row)
    return out, group_fields + [result]


def _sort_rows(step: SortStep, rows: list[Row]) -> list[Row]:
    # repeated stable passes from the least significant key
    out = list(rows)
    for col, direction in reversed(step.keys):
        nonnull = [r for r in out if _lookup(r, col) is not None]
        nulls = [r for r in out if _lookup(r, col) is None]
        nonnull.sort(key=lambda r: _lookup(r, col), reverse=(direction == "desc"))
        out = nonnull + nulls
    return out


def _distinct_rows(step: DistinctStep, rows: list[Row], fields: list[FieldSpec]
                   ) -> tuple[list[Row], list[FieldSpec]]:
    out_fields = [_spec_of(fields, n) for n in step.columns]
    seen: list[tuple[Any, ...]] = []
    out: list[Row] = []
    for r in rows:
        key = tuple(_lookup(r, f.name) for f in out_fields)
        if any(key == s for s in seen):
            continue
        seen.append(key)
        out.append({f.name: v for f, v in zip(out_fields, key)})
    return out, out_fields


def _apply(step: PlanStep, rows: list[Row], fields: list[FieldSpec]
           ) -> tuple[list[Row], list[FieldSpec]]:
    if isinstance(step, SliceStep):
        return _slice_rows(step, rows, fields)
    if isinstance(step, AggregateStep):
        return _aggregate_rows(step, rows, fields)
    if isinstance(step, SortStep):
        return _sort_rows(step, rows), fields
    if isinstance(step, LimitStep):
        return rows[: step.n], fields
    if isinstance(step, DistinctStep):
        return _distinct_rows(step, rows, fields)
    raise TypeError(type(step).__name__)


def oracle_execute(plan: AnalysisPlan, table: Table) -> Table:
    rows = _rows_of(table)
    fields = list(table.schema.fields)
    for step in plan.steps:
        rows, fields = _apply(step, rows, fields)
    columns: list[list[Any]] = [[] for _ in fields]
    for r in rows:
        for j, f in enumerate(fields):
            columns[j].append(r[f.name])
    return Table(Schema(tuple(fields)), columns, _skip_checks=True)
