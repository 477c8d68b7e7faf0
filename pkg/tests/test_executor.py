from __future__ import annotations

import json
import random

from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_plan
from randgen import random_plan, random_table
from relgate.bench import strict_match
from relgate.executor import execute_plan, execute_step
from relgate.oracle import oracle_execute
from relgate.plan import parse_plan
from relgate.table import canonical_table_text


class TestSlice:
    def test_t0_rc1_failed(self, t0, t0_schema):
        plan = make_plan(t0_schema, [{
            "kind": "slice", "select": ["test_function"],
            "where": {"and": [
                {"col": "release_candidate", "op": "eq", "value": "RC1"},
                {"col": "status", "op": "eq", "value": "failed"},
            ]},
        }])
        out = execute_step(plan.steps[0], t0)
        assert out.row_count == 1
        assert out.column("test_function") == ("braking",)

    def test_identity_slice(self, t0, t0_schema):
        plan = make_plan(t0_schema, [{"kind": "slice", "select": "all"}])
        out = execute_step(plan.steps[0], t0)
        assert out == t0

    def test_no_match_keeps_selected_schema(self, t0, t0_schema):
        plan = make_plan(t0_schema, [{
            "kind": "slice", "select": ["status"],
            "where": {"col": "release_candidate", "op": "eq", "value": "RC99"},
        }])
        out = execute_step(plan.steps[0], t0)
        assert out.row_count == 0
        assert out.schema.names == ("status",)

    def test_null_never_satisfies_except_is_null(self, t0_schema):
        from relgate.table import Table

        t = Table(t0_schema, [["RC1", None], ["failed", None], ["braking", "x"]])
        ne = make_plan(t0_schema, [{
            "kind": "slice", "select": "all",
            "where": {"col": "status", "op": "ne", "value": "failed"},
        }])
        assert execute_step(ne.steps[0], t).row_count == 0  # null excluded
        isnull = make_plan(t0_schema, [{
            "kind": "slice", "select": "all",
            "where": {"col": "status", "op": "is_null"},
        }])
        assert execute_step(isnull.steps[0], t).row_count == 1


class TestAggregate:
    def test_mean_over_empty_is_null_count_zero(self, t0, t0_schema):
        empty = execute_step(make_plan(t0_schema, [{
            "kind": "slice", "select": "all",
            "where": {"col": "status", "op": "eq", "value": "nope"},
        }]).steps[0], t0)
        from relgate.plan import AggregateStep

        counted = execute_step(AggregateStep(func="count"), empty)
        assert counted.column("count") == (0,)
        # mean needs a numeric column; build a numeric table
        rng = random.Random(0)
        t = random_table(rng, max_rows=0)
        numeric = next((f for f in t.schema.fields if f.type.value in
                        ("int", "float")), None)
        if numeric is not None:
            meaned = execute_step(
                AggregateStep(func="mean", column=numeric.name), t)
            assert meaned.column(f"mean_{numeric.name}") == (None,)

    def test_group_by_first_appearance_order(self, t0, t0_schema):
        plan = make_plan(t0_schema, [
            {"kind": "aggregate", "func": "count", "group_by": ["test_function"]}
        ])
        out = execute_step(plan.steps[0], t0)
        assert out.column("test_function") == ("braking", "steering")
        assert out.column("count") == (3, 1)

    def test_count_with_column_skips_nulls(self, t0_schema):
        from relgate.table import Table

        t = Table(t0_schema, [["RC1", "RC1"], ["failed", None], ["x", "x"]])
        plan = make_plan(t0_schema, [
            {"kind": "aggregate", "func": "count", "column": "status"}
        ])
        out = execute_step(plan.steps[0], t)
        assert out.column("count_status") == (1,)

    def test_group_counts_sum_to_input(self, small_table):
        plan = make_plan(small_table.schema, [
            {"kind": "aggregate", "func": "count", "group_by": ["test_status"]}
        ])
        out = execute_step(plan.steps[0], small_table)
        assert sum(out.column("count")) == small_table.row_count


class TestSortLimitDistinct:
    def test_stable_sort_nulls_last_both_directions(self, t0_schema):
        from relgate.table import Table

        t = Table(t0_schema, [
            ["RC2", "RC1", "RC2", "RC1"],
            ["passed", "failed", None, "blocked"],
            ["f1", "f2", "f3", "f4"],
        ])
        for direction in ("asc", "desc"):
            plan = make_plan(t0_schema, [
                {"kind": "sort", "keys": [{"col": "status", "dir": direction}]}
            ])
            out = execute_step(plan.steps[0], t)
            assert out.column("status")[-1] is None

    def test_sort_stability_on_ties(self, t0, t0_schema):
        plan = make_plan(t0_schema, [
            {"kind": "sort", "keys": [{"col": "release_candidate", "dir": "asc"}]}
        ])
        out = execute_step(plan.steps[0], t0)
        # RC1 rows keep input order: failed, passed, N/A
        assert out.column("status")[:3] == ("failed", "passed", "N/A")

    def test_limit(self, t0, t0_schema):
        plan = make_plan(t0_schema, [{"kind": "limit", "n": 2}])
        assert execute_step(plan.steps[0], t0).row_count == 2

    def test_distinct_projects_and_keeps_first(self, t0, t0_schema):
        plan = make_plan(t0_schema, [
            {"kind": "distinct", "columns": ["release_candidate"]}
        ])
        out = execute_step(plan.steps[0], t0)
        assert out.schema.names == ("release_candidate",)
        assert out.column("release_candidate") == ("RC1", "RC2")


class TestExecutePlan:
    def test_t0_level4(self, t0, level4_plan):
        out, trace = execute_plan(level4_plan, t0)
        assert out.row_count == 1
        assert out.column("test_function") == ("braking",)  # stable tie order
        assert len(trace.steps) == 4
        assert trace.steps[0].input_rows == 4
        assert trace.total_s >= 0

    def test_empty_predicate_slice_is_identity(self, t0, t0_schema):
        plan = make_plan(t0_schema, [{"kind": "slice", "select": "all"}])
        out, _ = execute_plan(plan, t0)
        assert out == t0

    def test_no_match_propagates_empty(self, t0, t0_schema):
        plan = make_plan(t0_schema, [
            {"kind": "slice", "select": ["status"],
             "where": {"col": "status", "op": "eq", "value": "zzz"}},
            {"kind": "sort", "keys": [{"col": "status", "dir": "asc"}]},
            {"kind": "limit", "n": 3},
        ])
        out, _ = execute_plan(plan, t0)
        assert out.row_count == 0 and out.schema.names == ("status",)

    def test_determinism_byte_identical(self, small_table):
        plan = make_plan(small_table.schema, [
            {"kind": "slice", "select": ["test_status", "duration_s"],
             "where": {"col": "test_status", "op": "in",
                       "value": ["failed", "passed"]}},
            {"kind": "sort", "keys": [{"col": "duration_s", "dir": "desc"}]},
            {"kind": "limit", "n": 10},
        ])
        a, _ = execute_plan(plan, small_table)
        b, _ = execute_plan(plan, small_table)
        assert canonical_table_text(a) == canonical_table_text(b)


class TestOracleEquivalence:
    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 100_000))
    def test_engine_matches_oracle(self, seed):
        rng = random.Random(seed)
        table = random_table(rng)
        plan = random_plan(rng, table)
        engine, _ = execute_plan(plan, table)
        oracle = oracle_execute(plan, table)
        verdict = strict_match(engine, oracle, ordered=True)
        assert verdict.matched, verdict.diff

    def test_oracle_identity_slice(self, t0, t0_schema):
        plan = make_plan(t0_schema, [{"kind": "slice", "select": "all"}])
        assert oracle_execute(plan, t0) == t0

    def test_single_step_plans_on_empty_table(self, t0_schema):
        from relgate.table import Table

        empty = Table(t0_schema, [[], [], []])
        for doc in (
            [{"kind": "slice", "select": "all"}],
            [{"kind": "sort", "keys": [{"col": "status", "dir": "asc"}]}],
            [{"kind": "limit", "n": 3}],
            [{"kind": "distinct", "columns": ["status"]}],
        ):
            plan = make_plan(t0_schema, doc)
            assert oracle_execute(plan, empty).row_count == 0
            out, _ = execute_plan(plan, empty)
            assert out.row_count == 0


class TestConservation:
    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_non_aggregates_never_invent_values(self, seed):
        rng = random.Random(seed)
        table = random_table(rng)
        plan = random_plan(rng, table)
        from relgate.plan import AggregateStep

        current = table
        for step in plan.steps:
            nxt = execute_step(step, current)
            if not isinstance(step, AggregateStep):
                input_cells = set()
                for col in current.columns:
                    input_cells.update(col)
                for col in nxt.columns:
                    assert set(col) <= input_cells
            current = nxt


class TestFilterFirstLegality:
    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_slice_hoists_over_sort(self, seed):
        rng = random.Random(seed)
        table = random_table(rng)
        fields = [f.name for f in table.schema.fields]
        sort_doc = {"kind": "sort",
                    "keys": [{"col": rng.choice(fields), "dir":
                              rng.choice(("asc", "desc"))}]}
        from randgen import _random_predicate

        slice_doc = {"kind": "slice", "select": "all",
                     "where": _random_predicate(rng, table,
                                                list(table.schema.fields))}
        a = parse_plan(json.dumps({"steps": [sort_doc, slice_doc]}), table.schema)
        b = parse_plan(json.dumps({"steps": [slice_doc, sort_doc]}), table.schema)
        out_a, _ = execute_plan(a, table)
        out_b, _ = execute_plan(b, table)
        verdict = strict_match(out_a, out_b, ordered=True)
        assert verdict.matched, verdict.diff
