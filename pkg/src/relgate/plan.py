"""The closed, risk-constrained plan DSL: slicing and operation steps.

A plan is an ordered list of steps from a deliberately small vocabulary:

    slice      select columns, optionally filter rows with an and/or
               predicate tree over typed conditions
    aggregate  count / sum / mean / min / max / median / distinct_count,
               optionally grouped
    sort       stable multi-key ordering
    limit      first n rows
    distinct   project to columns and keep first occurrences

The step vocabulary is closed on purpose: the parser rejects anything else,
which is the safety guarantee that lets validated plans execute without
runtime faults.

Wire format (JSON, possibly inside a fenced code block):

    {"steps": [
      {"kind": "slice", "select": ["col", ...] | "all",
       "where": {"and": [...]} | {"or": [...]} | {"col": c, "op": o, "value": v}},
      {"kind": "aggregate", "func": "count", "column": null, "group_by": [...]},
      {"kind": "sort", "keys": [{"col": c, "dir": "asc"|"desc"}, ...]},
      {"kind": "limit", "n": 5},
      {"kind": "distinct", "columns": [...]}
    ]}

Timestamps travel as ISO-8601 text; ``is_null``/``not_null`` conditions omit
``value``; ``in``/``not_in`` take a non-empty list.
"""

from __future__ import annotations

import difflib
import json
import re
from dataclasses import dataclass, replace
from datetime import datetime
from typing import Any, Union

from .table import (
    NUMERIC_TYPES,
    ORDERED_TYPES,
    ColumnType,
    FieldSpec,
    Schema,
    format_timestamp,
    parse_timestamp,
)

MAX_PREDICATE_DEPTH = 4

COMPARATORS = (
    "eq", "ne", "lt", "le", "gt", "ge",
    "in", "not_in", "contains", "is_null", "not_null",
)
ORDERING_COMPARATORS = frozenset({"lt", "le", "gt", "ge"})
NO_OPERAND_COMPARATORS = frozenset({"is_null", "not_null"})
LIST_OPERAND_COMPARATORS = frozenset({"in", "not_in"})

AGG_FUNCS = ("count", "sum", "mean", "min", "max", "median", "distinct_count")
#: Aggregates that make a step "advanced" for difficulty classification
#: even without grouping.
ADVANCED_FUNCS = frozenset({"mean", "median", "sum", "distinct_count"})


class PlanError(Exception):
    """Base class for plan parsing/validation failures."""


class PlanSyntaxError(PlanError):
    """Malformed plan document (position + message when known)."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)


class UnknownColumnError(PlanError):
    """Plan references a column not present in the running schema."""

    def __init__(self, name: str, available: list[str]):
        self.name = name
        self.available = available
        self.suggestions = difflib.get_close_matches(name, available, n=3, cutoff=0.5)
        hint = f"; did you mean {self.suggestions}?" if self.suggestions else ""
        super().__init__(
            f"unknown column {name!r} (available: {available}){hint}"
        )


class PlanValidationError(PlanError):
    """Arity, typing, or threading rule violated."""


@dataclass(frozen=True)
class Condition:
    column: str
    comparator: str
    operand: Any = None  # scalar, tuple for in/not_in, absent for null checks


@dataclass(frozen=True)
class And:
    children: tuple["Predicate", ...]


@dataclass(frozen=True)
class Or:
    children: tuple["Predicate", ...]


Predicate = Union[Condition, And, Or]


@dataclass(frozen=True)
class SliceStep:
    select: tuple[str, ...] | str  # explicit names or the string "all"
    where: Predicate | None = None
    kind = "slice"


@dataclass(frozen=True)
class AggregateStep:
    func: str
    column: str | None = None
    group_by: tuple[str, ...] = ()
    kind = "aggregate"

    @property
    def result_name(self) -> str:
        if self.column is None:
            return "count"
        return f"{self.func}_{self.column}"


@dataclass(frozen=True)
class SortStep:
    keys: tuple[tuple[str, str], ...]  # (column, "asc"|"desc")
    kind = "sort"


@dataclass(frozen=True)
class LimitStep:
    n: int
    kind = "limit"


@dataclass(frozen=True)
class DistinctStep:
    columns: tuple[str, ...]
    kind = "distinct"


OperationStep = Union[AggregateStep, SortStep, LimitStep, DistinctStep]
PlanStep = Union[SliceStep, OperationStep]


@dataclass(frozen=True)
class AnalysisPlan:
    """Ordered, non-empty step list, optionally bound to a schema.

    Plans produced by :func:`parse_plan` are bound (column names resolved to
    schema casing); canonicalization and rendering require a bound plan.
    """

    steps: tuple[PlanStep, ...]
    schema: Schema | None = None

    def bound(self) -> Schema:
        if self.schema is None:
            raise PlanValidationError("plan is not bound to a schema")
        return self.schema


@dataclass(frozen=True)
class PlanIssue:
    """One validation finding; reports are data, not faults."""

    step: int | None
    reason: str


# ---------------------------------------------------------------------------
# schema threading

_AGG_RESULT_TYPE = {
    "count": ColumnType.INT,
    "distinct_count": ColumnType.INT,
    "mean": ColumnType.FLOAT,
    "median": ColumnType.FLOAT,
}


def aggregate_result_spec(step: AggregateStep, source: FieldSpec | None) -> FieldSpec:
    """FieldSpec of the aggregate's result column."""
    if step.func in _AGG_RESULT_TYPE:
        ctype = _AGG_RESULT_TYPE[step.func]
    elif step.func == "sum":
        ctype = source.type if source is not None else ColumnType.INT
    else:  # min/max keep the source type
        assert source is not None
        ctype = source.type
    if step.func == "count" and step.column is not None:
        name = f"count_{step.column}"
    else:
        name = step.result_name
    return FieldSpec(name=name, type=ctype, description=f"{step.func} aggregate")


def _predicate_depth(p: Predicate) -> int:
    if isinstance(p, Condition):
        return 1
    return 1 + max(_predicate_depth(c) for c in p.children)


def _iter_conditions(p: Predicate):
    if isinstance(p, Condition):
        yield p
    else:
        for c in p.children:
            yield from _iter_conditions(c)


def _check_condition(cond: Condition, fields: dict[str, FieldSpec]) -> list[str]:
    issues: list[str] = []
    spec = fields.get(cond.column.lower())
    if spec is None:
        issues.append(
            str(UnknownColumnError(cond.column, [f.name for f in fields.values()]))
        )
        return issues
    comp = cond.comparator
    if comp not in COMPARATORS:
        issues.append(f"unknown comparator {comp!r}")
        return issues
    if comp in NO_OPERAND_COMPARATORS:
        if cond.operand is not None:
            issues.append(f"{comp} takes no operand")
        return issues
    if comp in LIST_OPERAND_COMPARATORS:
        if not isinstance(cond.operand, tuple) or not cond.operand:
            issues.append(f"{comp} needs a non-empty value list")
            return issues
        operands = cond.operand
    else:
        if isinstance(cond.operand, tuple):
            issues.append(f"{comp} takes a single value, not a list")
            return issues
        if cond.operand is None:
            issues.append(f"{comp} requires an operand")
            return issues
        operands = (cond.operand,)
    if comp in ORDERING_COMPARATORS and spec.type not in ORDERED_TYPES:
        issues.append(
            f"ordering comparator {comp!r} needs an int/float/timestamp column, "
            f"got {spec.type} column {spec.name!r}"
        )
    if comp == "contains" and spec.type is not ColumnType.TEXT:
        issues.append(f"contains needs a text column, got {spec.type} column {spec.name!r}")
    for op in operands:
        reason = _operand_type_issue(spec, op)
        if reason:
            issues.append(f"column {spec.name!r}: {reason}")
    return issues


def _operand_type_issue(spec: FieldSpec, operand: Any) -> str | None:
    t = spec.type
    if t is ColumnType.BOOL and not isinstance(operand, bool):
        return f"operand {operand!r} is not a bool"
    if t is ColumnType.INT and (isinstance(operand, bool) or not isinstance(operand, int)):
        return f"operand {operand!r} is not an int"
    if t is ColumnType.FLOAT and (
        isinstance(operand, bool) or not isinstance(operand, (int, float))
    ):
        return f"operand {operand!r} is not numeric"
    if t is ColumnType.TEXT and not isinstance(operand, str):
        return f"operand {operand!r} is not text"
    if t is ColumnType.TIMESTAMP and not isinstance(operand, datetime):
        return f"operand {operand!r} is not a timestamp"
    return None


def _thread_step(
    step: PlanStep,
    running: list[FieldSpec],
    step_index: int,
    issues: list[PlanIssue],
    after_scalar_aggregate: bool,
) -> tuple[list[FieldSpec], bool]:
    """Validate one step against the running schema; return the next schema."""

    def add(reason: str) -> None:
        issues.append(PlanIssue(step_index, reason))

    fields = {f.name.lower(): f for f in running}
    names = [f.name for f in running]

    if after_scalar_aggregate and not isinstance(step, LimitStep):
        add(
            "after an ungrouped aggregate the result is a single row; "
            "only limit steps are admissible"
        )

    if isinstance(step, SliceStep):
        if step.where is not None:
            if _predicate_depth(step.where) > MAX_PREDICATE_DEPTH:
                add(f"predicate deeper than {MAX_PREDICATE_DEPTH}")
            if isinstance(step.where, (And, Or)) and not step.where.children:
                add("and/or node with no children")
            for cond in _iter_conditions(step.where):
                for reason in _check_condition(cond, fields):
                    add(reason)
        if step.select == "all":
            return running, after_scalar_aggregate
        if not step.select:
            add("select list is empty")
            return running, after_scalar_aggregate
        selected: list[FieldSpec] = []
        seen: set[str] = set()
        for name in step.select:
            spec = fields.get(name.lower())
            if spec is None:
                add(str(UnknownColumnError(name, names)))
                continue
            if spec.name.lower() in seen:
                add(f"duplicate column {spec.name!r} in select")
                continue
            seen.add(spec.name.lower())
            selected.append(spec)
        return (selected or running), after_scalar_aggregate

    if isinstance(step, AggregateStep):
        if step.func not in AGG_FUNCS:
            add(f"unknown aggregate function {step.func!r}")
            return running, after_scalar_aggregate
        source: FieldSpec | None = None
        if step.func == "count":
            if step.column is not None:
                source = fields.get(step.column.lower())
                if source is None:
                    add(str(UnknownColumnError(step.column, names)))
        elif step.column is None:
            add(f"aggregate {step.func!r} requires a column")
        else:
            source = fields.get(step.column.lower())
            if source is None:
                add(str(UnknownColumnError(step.column, names)))
            elif step.func in ("sum", "mean", "median") and source.type not in NUMERIC_TYPES:
                add(f"{step.func} needs an int/float column, got {source.type} "
                    f"column {source.name!r}")
            elif step.func in ("min", "max") and source.type not in ORDERED_TYPES:
                add(f"{step.func} needs an ordered (int/float/timestamp) column, "
                    f"got {source.type} column {source.name!r}")
        group_specs: list[FieldSpec] = []
        seen = set()
        for name in step.group_by:
            spec = fields.get(name.lower())
            if spec is None:
                add(str(UnknownColumnError(name, names)))
                continue
            if spec.name.lower() in seen:
                add(f"duplicate group_by column {spec.name!r}")
                continue
            if step.column is not None and spec.name.lower() == step.column.lower():
                add(f"group_by column {spec.name!r} overlaps the aggregated column")
                continue
            seen.add(spec.name.lower())
            group_specs.append(spec)
        result = aggregate_result_spec(step, source)
        if result.name.lower() in seen:
            add(f"aggregate result column {result.name!r} collides with a group key")
        next_schema = group_specs + [result]
        return next_schema, not step.group_by

    if isinstance(step, SortStep):
        if not step.keys:
            add("sort needs at least one key")
        for col, direction in step.keys:
            if direction not in ("asc", "desc"):
                add(f"sort direction must be asc or desc, got {direction!r}")
            if col.lower() not in fields:
                add(str(UnknownColumnError(col, names)))
        return running, after_scalar_aggregate

    if isinstance(step, LimitStep):
        if not isinstance(step.n, int) or isinstance(step.n, bool) or step.n < 1:
            add(f"limit needs a positive count, got {step.n!r}")
        return running, after_scalar_aggregate

    if isinstance(step, DistinctStep):
        if not step.columns:
            add("distinct needs at least one column")
            return running, after_scalar_aggregate
        kept: list[FieldSpec] = []
        seen = set()
        for name in step.columns:
            spec = fields.get(name.lower())
            if spec is None:
                add(str(UnknownColumnError(name, names)))
                continue
            if spec.name.lower() in seen:
                add(f"duplicate column {spec.name!r} in distinct")
                continue
            seen.add(spec.name.lower())
            kept.append(spec)
        return (kept or running), after_scalar_aggregate

    add(f"unknown step kind {type(step).__name__}")  # pragma: no cover
    return running, after_scalar_aggregate


def validate_plan(plan: AnalysisPlan, schema: Schema) -> list[PlanIssue]:
    """Empty report iff every step and the step-to-step threading hold."""
    issues: list[PlanIssue] = []
    if not plan.steps:
        issues.append(PlanIssue(None, "plan has no steps"))
        return issues
    running = list(schema.fields)
    scalar = False
    for i, step in enumerate(plan.steps):
        running, scalar = _thread_step(step, running, i, issues, scalar)
    return issues


def running_schemas(plan: AnalysisPlan, schema: Schema) -> list[list[FieldSpec]]:
    """Schema before each step (index i = input schema of step i), then final."""
    out = [list(schema.fields)]
    running = list(schema.fields)
    scalar = False
    sink: list[PlanIssue] = []
    for i, step in enumerate(plan.steps):
        running, scalar = _thread_step(step, running, i, sink, scalar)
        out.append(list(running))
    if sink:
        raise PlanValidationError("; ".join(v.reason for v in sink))
    return out


def output_schema(plan: AnalysisPlan, schema: Schema) -> Schema:
    return Schema(tuple(running_schemas(plan, schema)[-1]))


# ---------------------------------------------------------------------------
# parsing

_FENCE_RE = re.compile(r"```[A-Za-z0-9_+-]*[ \t]*\r?\n(.*?)\r?\n?```", re.DOTALL)


def strip_fences(text: str) -> str:
    """If the document is wrapped in a fenced code block, return its body."""
    matches = _FENCE_RE.findall(text)
    if matches:
        return matches[-1]
    return text


def _reject_constant(name: str) -> Any:
    raise PlanSyntaxError(f"non-finite number {name!r} not allowed")


def _resolve_name(raw: Any, schema_fields: dict[str, FieldSpec], context: str) -> str:
    if not isinstance(raw, str):
        raise PlanSyntaxError(f"{context}: column name must be text, got {raw!r}")
    spec = schema_fields.get(raw.lower())
    if spec is None:
        raise UnknownColumnError(raw, [f.name for f in schema_fields.values()])
    return spec.name


def _parse_operand(raw: Any, spec: FieldSpec, context: str) -> Any:
    """Convert a JSON operand to the column's value domain."""
    t = spec.type
    if t is ColumnType.TIMESTAMP:
        if not isinstance(raw, str):
            raise PlanValidationError(
                f"{context}: timestamp operand must be ISO-8601 text, got {raw!r}"
            )
        try:
            return parse_timestamp(raw)
        except ValueError as exc:
            raise PlanValidationError(f"{context}: bad timestamp {raw!r}: {exc}") from None
    if t is ColumnType.FLOAT and isinstance(raw, int) and not isinstance(raw, bool):
        return float(raw)
    return raw


def _parse_predicate(
    node: Any, schema_fields: dict[str, FieldSpec], depth: int = 1
) -> Predicate:
    if depth > MAX_PREDICATE_DEPTH:
        raise PlanValidationError(
            f"predicate deeper than {MAX_PREDICATE_DEPTH}"
        )
    if not isinstance(node, dict):
        raise PlanSyntaxError(f"predicate node must be an object, got {node!r}")
    if "and" in node or "or" in node:
        if len(node) != 1:
            raise PlanSyntaxError(
                f"and/or node must have exactly one key, got {sorted(node)}"
            )
        op, children = next(iter(node.items()))
        if not isinstance(children, list) or not children:
            raise PlanSyntaxError(f"{op!r} needs a non-empty child list")
        parsed = tuple(_parse_predicate(c, schema_fields, depth + 1) for c in children)
        return And(parsed) if op == "and" else Or(parsed)
    unknown = set(node) - {"col", "op", "value"}
    if unknown:
        raise PlanSyntaxError(f"unknown predicate keys {sorted(unknown)}")
    if "col" not in node or "op" not in node:
        raise PlanSyntaxError(f"condition needs col and op, got {sorted(node)}")
    comp = node["op"]
    if comp not in COMPARATORS:
        raise PlanSyntaxError(
            f"unknown comparator {comp!r} (one of {list(COMPARATORS)})"
        )
    col = _resolve_name(node["col"], schema_fields, "condition")
    spec = schema_fields[col.lower()]
    context = f"condition on {col!r}"
    if comp in NO_OPERAND_COMPARATORS:
        if "value" in node and node["value"] is not None:
            raise PlanValidationError(f"{context}: {comp} takes no operand")
        return Condition(col, comp, None)
    if "value" not in node:
        raise PlanValidationError(f"{context}: {comp} requires a value")
    raw = node["value"]
    if comp in LIST_OPERAND_COMPARATORS:
        if not isinstance(raw, list) or not raw:
            raise PlanValidationError(f"{context}: {comp} needs a non-empty list")
        operand: Any = tuple(_parse_operand(v, spec, context) for v in raw)
    else:
        if isinstance(raw, list):
            raise PlanValidationError(f"{context}: {comp} takes a single value")
        operand = _parse_operand(raw, spec, context)
    cond = Condition(col, comp, operand)
    problems = _check_condition(cond, schema_fields)
    if problems:
        raise PlanValidationError("; ".join(problems))
    return cond


def _parse_step(raw: Any, running: list[FieldSpec], index: int) -> PlanStep:
    if not isinstance(raw, dict):
        raise PlanSyntaxError(f"step {index}: must be an object, got {raw!r}")
    kind = raw.get("kind")
    fields = {f.name.lower(): f for f in running}
    names = [f.name for f in running]

    if kind == "slice":
        unknown = set(raw) - {"kind", "select", "where"}
        if unknown:
            raise PlanSyntaxError(f"step {index}: unknown slice keys {sorted(unknown)}")
        sel_raw = raw.get("select", "all")
        if sel_raw == "all":
            select: tuple[str, ...] | str = "all"
        elif isinstance(sel_raw, list):
            if not sel_raw:
                raise PlanValidationError(f"step {index}: select list is empty")
            resolved: list[str] = []
            for name in sel_raw:
                canon = _resolve_name(name, fields, f"step {index} select")
                if canon in resolved:
                    raise PlanValidationError(
                        f"step {index}: duplicate column {canon!r} in select"
                    )
                resolved.append(canon)
            select = tuple(resolved)
        else:
            raise PlanSyntaxError(
                f"step {index}: select must be a list of columns or \"all\""
            )
        where = None
        if raw.get("where") is not None:
            where = _parse_predicate(raw["where"], fields)
        return SliceStep(select=select, where=where)

    if kind == "aggregate":
        unknown = set(raw) - {"kind", "func", "column", "group_by"}
        if unknown:
            raise PlanSyntaxError(f"step {index}: unknown aggregate keys {sorted(unknown)}")
        func = raw.get("func")
        if func not in AGG_FUNCS:
            raise PlanSyntaxError(
                f"step {index}: unknown aggregate function {func!r} (one of {list(AGG_FUNCS)})"
            )
        column = raw.get("column")
        if column is not None:
            column = _resolve_name(column, fields, f"step {index} aggregate")
        elif func != "count":
            raise PlanValidationError(f"step {index}: aggregate {func!r} requires a column")
        group_raw = raw.get("group_by", [])
        if not isinstance(group_raw, list):
            raise PlanSyntaxError(f"step {index}: group_by must be a list")
        group_by: list[str] = []
        for name in group_raw:
            canon = _resolve_name(name, fields, f"step {index} group_by")
            if canon in group_by:
                raise PlanValidationError(f"step {index}: duplicate group_by column {canon!r}")
            group_by.append(canon)
        return AggregateStep(func=func, column=column, group_by=tuple(group_by))

    if kind == "sort":
        unknown = set(raw) - {"kind", "keys"}
        if unknown:
            raise PlanSyntaxError(f"step {index}: unknown sort keys {sorted(unknown)}")
        keys_raw = raw.get("keys")
        if not isinstance(keys_raw, list) or not keys_raw:
            raise PlanValidationError(f"step {index}: sort needs a non-empty key list")
        keys: list[tuple[str, str]] = []
        for item in keys_raw:
            if isinstance(item, dict):
                col_raw, direction = item.get("col"), item.get("dir", "asc")
            elif isinstance(item, list) and len(item) == 2:
                col_raw, direction = item
            else:
                raise PlanSyntaxError(
                    f"step {index}: sort key must be {{'col':…, 'dir':…}}, got {item!r}"
                )
            if direction not in ("asc", "desc"):
                raise PlanValidationError(
                    f"step {index}: sort direction must be asc or desc, got {direction!r}"
                )
            keys.append((_resolve_name(col_raw, fields, f"step {index} sort"), direction))
        return SortStep(keys=tuple(keys))

    if kind == "limit":
        unknown = set(raw) - {"kind", "n"}
        if unknown:
            raise PlanSyntaxError(f"step {index}: unknown limit keys {sorted(unknown)}")
        n = raw.get("n")
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise PlanValidationError(f"step {index}: limit needs a positive count, got {n!r}")
        return LimitStep(n=n)

    if kind == "distinct":
        unknown = set(raw) - {"kind", "columns"}
        if unknown:
            raise PlanSyntaxError(f"step {index}: unknown distinct keys {sorted(unknown)}")
        cols_raw = raw.get("columns")
        if not isinstance(cols_raw, list) or not cols_raw:
            raise PlanValidationError(f"step {index}: distinct needs a non-empty column list")
        cols: list[str] = []
        for name in cols_raw:
            canon = _resolve_name(name, fields, f"step {index} distinct")
            if canon in cols:
                raise PlanValidationError(f"step {index}: duplicate column {canon!r} in distinct")
            cols.append(canon)
        return DistinctStep(columns=tuple(cols))

    raise PlanSyntaxError(
        f"step {index}: unknown step kind {kind!r} "
        "(one of slice, aggregate, sort, limit, distinct)"
    )


def parse_plan(text: str, schema: Schema) -> AnalysisPlan:
    """Parse and fully validate a plan document against ``schema``.

    Accepts the raw wire document or an LLM reply wrapping it in a fenced
    code block.  The returned plan is bound: names are in schema casing and
    ``validate_plan`` is empty by construction.
    """
    body = strip_fences(text)
    try:
        doc = json.loads(body, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise PlanSyntaxError(f"invalid plan document: {exc.msg}", exc.pos) from None
    if not isinstance(doc, dict):
        raise PlanSyntaxError(f"plan document must be an object, got {type(doc).__name__}")
    unknown = set(doc) - {"steps"}
    if unknown:
        raise PlanSyntaxError(f"unknown top-level keys {sorted(unknown)}")
    steps_raw = doc.get("steps")
    if not isinstance(steps_raw, list):
        raise PlanSyntaxError('plan document needs a "steps" list')
    if not steps_raw:
        raise PlanSyntaxError("plan has no steps")

    steps: list[PlanStep] = []
    running = list(schema.fields)
    scalar = False
    issues: list[PlanIssue] = []
    for i, raw in enumerate(steps_raw):
        step = _parse_step(raw, running, i)
        running, scalar = _thread_step(step, running, i, issues, scalar)
        if issues:
            raise PlanValidationError("; ".join(v.reason for v in issues))
        steps.append(step)
    return AnalysisPlan(steps=tuple(steps), schema=schema)


def parse_step_document(text: str, running: Schema) -> PlanStep:
    """Parse a single step document against the running schema (actor use)."""
    body = strip_fences(text)
    try:
        doc = json.loads(body, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise PlanSyntaxError(f"invalid step document: {exc.msg}", exc.pos) from None
    if isinstance(doc, dict) and "steps" in doc:
        steps = doc.get("steps")
        if isinstance(steps, list) and len(steps) == 1:
            doc = steps[0]
        else:
            raise PlanSyntaxError("expected exactly one step document")
    fields = list(running.fields)
    step = _parse_step(doc, fields, 0)
    issues: list[PlanIssue] = []
    _thread_step(step, fields, 0, issues, False)
    if issues:
        raise PlanValidationError("; ".join(v.reason for v in issues))
    return step


# ---------------------------------------------------------------------------
# wire rendering (inverse of parse_plan)

def _operand_to_wire(operand: Any) -> Any:
    if isinstance(operand, datetime):
        return format_timestamp(operand)
    return operand


def _predicate_to_wire(p: Predicate) -> dict[str, Any]:
    if isinstance(p, Condition):
        node: dict[str, Any] = {"col": p.column, "op": p.comparator}
        if p.comparator in LIST_OPERAND_COMPARATORS:
            node["value"] = [_operand_to_wire(v) for v in p.operand]
        elif p.comparator not in NO_OPERAND_COMPARATORS:
            node["value"] = _operand_to_wire(p.operand)
        return node
    key = "and" if isinstance(p, And) else "or"
    return {key: [_predicate_to_wire(c) for c in p.children]}


def step_to_wire(step: PlanStep) -> dict[str, Any]:
    if isinstance(step, SliceStep):
        node: dict[str, Any] = {"kind": "slice"}
        node["select"] = "all" if step.select == "all" else list(step.select)
        if step.where is not None:
            node["where"] = _predicate_to_wire(step.where)
        return node
    if isinstance(step, AggregateStep):
        node = {"kind": "aggregate", "func": step.func}
        if step.column is not None:
            node["column"] = step.column
        if step.group_by:
            node["group_by"] = list(step.group_by)
        return node
    if isinstance(step, SortStep):
        return {"kind": "sort", "keys": [{"col": c, "dir": d} for c, d in step.keys]}
    if isinstance(step, LimitStep):
        return {"kind": "limit", "n": step.n}
    if isinstance(step, DistinctStep):
        return {"kind": "distinct", "columns": list(step.columns)}
    raise TypeError(f"unknown step type {type(step).__name__}")  # pragma: no cover


def plan_to_wire(plan: AnalysisPlan) -> dict[str, Any]:
    return {"steps": [step_to_wire(s) for s in plan.steps]}


def plan_to_wire_text(plan: AnalysisPlan) -> str:
    return json.dumps(plan_to_wire(plan), indent=2, ensure_ascii=False)


# ---------------------------------------------------------------------------
# canonicalization (vote equality)

def _canonical_predicate(p: Predicate) -> Any:
    if isinstance(p, Condition):
        return _predicate_to_wire(p)
    key = "and" if isinstance(p, And) else "or"
    children = [_canonical_predicate(c) for c in p.children]
    children.sort(key=lambda c: json.dumps(c, sort_keys=True, ensure_ascii=False))
    return {key: children}


def canonicalize(plan: AnalysisPlan) -> str:
    """Deterministic text form used for vote equality.

    Keys sorted, sibling and/or children sorted, numeric operands in
    shortest round-trip form, field names in schema casing, ``select all``
    expanded to the explicit running column list.
    """
    schema = plan.bound()
    schemas = running_schemas(plan, schema)
    steps_out: list[dict[str, Any]] = []
    for i, step in enumerate(plan.steps):
        if isinstance(step, SliceStep):
            if step.select == "all":
                step = replace(step, select=tuple(f.name for f in schemas[i]))
            node = step_to_wire(step)
            if step.where is not None:
                node["where"] = _canonical_predicate(step.where)
            steps_out.append(node)
        else:
            steps_out.append(step_to_wire(step))
    return json.dumps({"steps": steps_out}, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False)


# ---------------------------------------------------------------------------
# natural-language rendering

_COMP_TEXT = {
    "eq": "=", "ne": "!=", "lt": "<", "le": "<=", "gt": ">", "ge": ">=",
}


def _render_operand(v: Any) -> str:
    if isinstance(v, str):
        return f"'{v}'"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, datetime):
        return format_timestamp(v)
    return str(v)


def render_predicate(p: Predicate, *, _top: bool = True) -> str:
    if isinstance(p, Condition):
        c = p.comparator
        if c == "is_null":
            return f"{p.column} is null"
        if c == "not_null":
            return f"{p.column} is not null"
        if c == "contains":
            return f"{p.column} contains {_render_operand(p.operand)}"
        if c in ("in", "not_in"):
            vals = ", ".join(_render_operand(v) for v in p.operand)
            word = "in" if c == "in" else "not in"
            return f"{p.column} {word} [{vals}]"
        return f"{p.column} {_COMP_TEXT[c]} {_render_operand(p.operand)}"
    word = " and " if isinstance(p, And) else " or "
    body = word.join(
        render_predicate(c, _top=False) if isinstance(c, Condition)
        else "(" + render_predicate(c, _top=False) + ")"
        for c in p.children
    )
    return body


def render_step(step: PlanStep) -> str:
    """One human-readable sentence including all values and column names."""
    if isinstance(step, SliceStep):
        if step.select == "all":
            what = "all columns"
        elif len(step.select) == 1:
            what = f"column {step.select[0]}"
        else:
            what = "columns " + ", ".join(step.select)
        if step.where is None:
            return f"Select {what}."
        return f"Select {what} from rows where {render_predicate(step.where)}."
    if isinstance(step, AggregateStep):
        per = (" per " + ", ".join(step.group_by)) if step.group_by else ""
        if step.func == "count" and step.column is None:
            return f"Count rows{per}."
        if step.func == "count":
            return f"Count non-null values of {step.column}{per}."
        if step.func == "distinct_count":
            return f"Count distinct values of {step.column}{per}."
        return f"Compute the {step.func} of {step.column}{per}."
    if isinstance(step, SortStep):
        parts = [
            f"{col} {'ascending' if d == 'asc' else 'descending'}"
            for col, d in step.keys
        ]
        return "Sort rows by " + ", then ".join(parts) + "."
    if isinstance(step, LimitStep):
        return f"Keep the first {step.n} row{'s' if step.n != 1 else ''}."
    if isinstance(step, DistinctStep):
        return "Keep distinct values of " + ", ".join(step.columns) + "."
    raise TypeError(f"unknown step type {type(step).__name__}")  # pragma: no cover


def render_steps(plan: AnalysisPlan) -> list[str]:
    return [render_step(s) for s in plan.steps]


# ---------------------------------------------------------------------------
# difficulty

def _is_advanced(step: PlanStep) -> bool:
    return isinstance(step, AggregateStep) and (
        bool(step.group_by) or step.func in ADVANCED_FUNCS
    )


def classify_difficulty(plan: AnalysisPlan) -> int:
    """Level 1-4 from step count and the presence of advanced aggregates."""
    total = len(plan.steps)
    advanced = sum(1 for s in plan.steps if _is_advanced(s))
    if advanced >= 2 or (advanced >= 1 and total >= 4):
        return 4
    if advanced >= 1 or total > 3:
        return 3
    if total in (2, 3):
        return 2
    return 1
