"""Seeded random tables, plans, and malformed plan documents for tests.

Everything here is driven by ``random.Random`` instances so test runs are
reproducible; the generators construct only valid instances (asserted), the
mutators deliberately break them.
"""

from __future__ import annotations

import json
import random
from datetime import datetime, timedelta, timezone
from typing import Any

from relgate.plan import (
    AggregateStep,
    AnalysisPlan,
    aggregate_result_spec,
    parse_plan,
    validate_plan,
)
from relgate.table import ColumnType, FieldSpec, Schema, Table

_TEXT_POOL = ("alpha", "beta", "gamma", "delta", "N/A", "x", "longer value",
              "UPPER", "")
_BASE = datetime(2024, 1, 1, tzinfo=timezone.utc)


def random_schema(rng: random.Random, max_cols: int = 8) -> Schema:
    n = rng.randint(2, max_cols)
    types = list(ColumnType)
    fields = []
    for i in range(n):
        fields.append(FieldSpec(f"c{i}", rng.choice(types), f"test column {i}"))
    return Schema(tuple(fields))


def _random_value(rng: random.Random, ctype: ColumnType) -> Any:
    if ctype is ColumnType.BOOL:
        return rng.random() < 0.5
    if ctype is ColumnType.INT:
        return rng.randint(-50, 50)
    if ctype is ColumnType.FLOAT:
        return round(rng.uniform(-100, 100), 3)
    if ctype is ColumnType.TEXT:
        return rng.choice(_TEXT_POOL)
    return (_BASE + timedelta(seconds=rng.randint(0, 10_000_000)))\
        .replace(microsecond=0)


def random_table(rng: random.Random, schema: Schema | None = None,
                 max_rows: int = 50, null_rate: float = 0.12) -> Table:
    schema = schema or random_schema(rng)
    n = rng.randint(0, max_rows)
    columns = []
    for spec in schema.fields:
        col = [
            None if rng.random() < null_rate else _random_value(rng, spec.type)
            for _ in range(n)
        ]
        columns.append(col)
    return Table(schema, columns)


def _sample_operand(rng: random.Random, table: Table, spec: FieldSpec) -> Any:
    # derived columns (aggregate results) have no values to sample from
    if table.schema.resolve(spec.name) is not None:
        col = [v for v in table.column(spec.name) if v is not None]
        if col and rng.random() < 0.6:
            return rng.choice(col)
    return _random_value(rng, spec.type)


def _random_condition(rng: random.Random, table: Table,
                      fields: list[FieldSpec]) -> dict:
    spec = rng.choice(fields)
    ordered = spec.type in (ColumnType.INT, ColumnType.FLOAT, ColumnType.TIMESTAMP)
    choices = ["eq", "ne", "is_null", "not_null", "in", "not_in"]
    if ordered:
        choices += ["lt", "le", "gt", "ge"]
    if spec.type is ColumnType.TEXT:
        choices.append("contains")
    op = rng.choice(choices)
    node: dict[str, Any] = {"col": spec.name, "op": op}
    if op in ("is_null", "not_null"):
        return node
    if op in ("in", "not_in"):
        node["value"] = [
            _wire_value(_sample_operand(rng, table, spec))
            for _ in range(rng.randint(1, 3))
        ]
        return node
    if op == "contains":
        base = _sample_operand(rng, table, spec)
        text = base if isinstance(base, str) else "x"
        if text and rng.random() < 0.7:
            i = rng.randrange(len(text))
            j = rng.randint(i + 1, len(text))
            node["value"] = text[i:j]
        else:
            node["value"] = rng.choice(("a", "al", "N/"))
        return node
    node["value"] = _wire_value(_sample_operand(rng, table, spec))
    return node


def _wire_value(v: Any) -> Any:
    if isinstance(v, datetime):
        return v.strftime("%Y-%m-%dT%H:%M:%SZ")
    return v


def _random_predicate(rng: random.Random, table: Table,
                      fields: list[FieldSpec], depth: int = 1) -> dict:
    if depth >= 3 or rng.random() < 0.55:
        return _random_condition(rng, table, fields)
    op = rng.choice(("and", "or"))
    return {op: [
        _random_predicate(rng, table, fields, depth + 1)
        for _ in range(rng.randint(1, 3))
    ]}


def random_plan_document(rng: random.Random, table: Table) -> dict:
    """A valid wire document for a random 1-4 step plan against the table."""
    running = list(table.schema.fields)
    steps: list[dict] = []
    n_steps = rng.randint(1, 4)
    scalar = False
    while len(steps) < n_steps:
        if scalar:
            steps.append({"kind": "limit", "n": rng.randint(1, 5)})
            continue
        kind = rng.choices(
            ("slice", "aggregate", "sort", "limit", "distinct"),
            weights=(4, 2, 2, 1, 1),
        )[0]
        if kind == "slice":
            step: dict[str, Any] = {"kind": "slice"}
            if rng.random() < 0.5:
                step["select"] = "all"
            else:
                k = rng.randint(1, len(running))
                picked = rng.sample(running, k)
                step["select"] = [f.name for f in picked]
                running = picked
            if rng.random() < 0.75:
                step["where"] = _random_predicate(
                    rng, table,
                    list(running) if step["select"] != "all" else running,
                )
            # where may reference pre-projection columns; keep it simple and
            # reference only surviving ones
            steps.append(step)
        elif kind == "aggregate":
            numeric = [f for f in running
                       if f.type in (ColumnType.INT, ColumnType.FLOAT)]
            ordered = [f for f in running
                       if f.type in (ColumnType.INT, ColumnType.FLOAT,
                                     ColumnType.TIMESTAMP)]
            options: list[tuple[str, FieldSpec | None]] = [("count", None)]
            options += [(f, rng.choice(numeric)) for f in ("sum", "mean", "median")
                        if numeric]
            options += [(f, rng.choice(ordered)) for f in ("min", "max") if ordered]
            options += [("distinct_count", rng.choice(running))]
            func, column = rng.choice(options)
            step = {"kind": "aggregate", "func": func}
            if column is not None:
                step["column"] = column.name
            groupable = [f for f in running
                         if column is None or f.name != column.name]
            result_name = "count" if column is None else f"{func}_{column.name}"
            groupable = [f for f in groupable if f.name.lower() != result_name]
            group = rng.sample(groupable, rng.randint(0, min(2, len(groupable)))) \
                if groupable and rng.random() < 0.7 else []
            if group:
                step["group_by"] = [f.name for f in group]
                running = group + [aggregate_result_spec(
                    AggregateStep(func=func,
                                  column=column.name if column else None,
                                  group_by=tuple(f.name for f in group)),
                    column,
                )]
            else:
                scalar = True
                running = [aggregate_result_spec(
                    AggregateStep(func=func,
                                  column=column.name if column else None),
                    column,
                )]
            steps.append(step)
        elif kind == "sort":
            keys = rng.sample(running, rng.randint(1, min(2, len(running))))
            steps.append({"kind": "sort", "keys": [
                {"col": f.name, "dir": rng.choice(("asc", "desc"))} for f in keys
            ]})
        elif kind == "limit":
            steps.append({"kind": "limit", "n": rng.randint(1, 12)})
        else:
            cols = rng.sample(running, rng.randint(1, min(3, len(running))))
            steps.append({"kind": "distinct", "columns": [f.name for f in cols]})
            running = list(cols)
    return {"steps": steps}


def random_plan(rng: random.Random, table: Table) -> AnalysisPlan:
    doc = random_plan_document(rng, table)
    plan = parse_plan(json.dumps(doc), table.schema)
    assert not validate_plan(plan, table.schema)
    return plan


# ---------------------------------------------------------------------------
# malformed documents for the safety-gate fuzz

_JUNK = ('', '{', '{"steps": }', 'not json at all', '[1,2,3]', '{"steps": []}',
         '{"steps": [{"kind": "drop_table"}]}', '{"plan": []}', 'null', '"x"')


def _mutate_text(rng: random.Random, text: str) -> str:
    kind = rng.randrange(6)
    if kind == 0 and len(text) > 2:  # truncate
        return text[: rng.randrange(1, len(text))]
    if kind == 1:  # corrupt one char
        i = rng.randrange(len(text))
        return text[:i] + rng.choice('}{[]",:x') + text[i + 1:]
    if kind == 2:  # rename a column to something unknown
        return text.replace('"c0"', '"c0_missing"', 1)
    if kind == 3:  # illegal comparator / kind / func
        return (text.replace('"eq"', '"matches"', 1)
                    .replace('"slice"', '"explode"', 1)
                    .replace('"count"', '"tally"', 1))
    if kind == 4:  # wrong arity: strip values
        return text.replace('"value":', '"no_value":')
    return text + rng.choice(("}", "]", '{"kind": "slice"}'))


def malformed_documents(rng: random.Random, table: Table, count: int):
    """Yield ``count`` documents, most broken, a few accidentally valid."""
    for _ in range(count):
        roll = rng.random()
        if roll < 0.25:
            yield rng.choice(_JUNK) + (rng.choice(("", " ", "\n")) if roll < 0.1
                                       else "")
        else:
            doc = json.dumps(random_plan_document(rng, table))
            if roll < 0.9:
                doc = _mutate_text(rng, doc)
                if rng.random() < 0.3:
                    doc = _mutate_text(rng, doc)
            yield doc
