from __future__ import annotations

import json

import pytest

from relgate.kb import KnowledgeBaseDoc
from relgate.plan import parse_plan
from relgate.synthetic import GeneratorConfig, generate
from relgate.table import ColumnType, FieldSpec, Schema, Table


@pytest.fixture(scope="session")
def t0_schema() -> Schema:
    return Schema((
        FieldSpec("release_candidate", ColumnType.TEXT, "build under test"),
        FieldSpec("status", ColumnType.TEXT, "outcome",
                  states=("passed", "failed", "N/A", "blocked")),
        FieldSpec("test_function", ColumnType.TEXT, "function exercised"),
    ))


@pytest.fixture(scope="session")
def t0(t0_schema: Schema) -> Table:
    rows = [
        ("RC1", "failed", "braking"),
        ("RC1", "passed", "braking"),
        ("RC2", "failed", "steering"),
        ("RC1", "N/A", "braking"),
    ]
    return Table(t0_schema, list(zip(*rows)))


@pytest.fixture(scope="session")
def small_dataset() -> tuple[Table, Schema, KnowledgeBaseDoc]:
    return generate(GeneratorConfig(seed=11, n_rows=400))


@pytest.fixture(scope="session")
def small_table(small_dataset) -> Table:
    return small_dataset[0]


@pytest.fixture(scope="session")
def small_kb(small_dataset) -> KnowledgeBaseDoc:
    return small_dataset[2]


def make_plan(schema: Schema, steps: list[dict]):
    return parse_plan(json.dumps({"steps": steps}), schema)


@pytest.fixture(scope="session")
def level4_plan(t0_schema: Schema):
    return make_plan(t0_schema, [
        {"kind": "slice", "select": "all",
         "where": {"col": "status", "op": "eq", "value": "failed"}},
        {"kind": "aggregate", "func": "count", "group_by": ["test_function"]},
        {"kind": "sort", "keys": [{"col": "count", "dir": "desc"}]},
        {"kind": "limit", "n": 1},
    ])
