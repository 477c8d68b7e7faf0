"""Shipped benchmark suite and suite-file I/O.

The shipped suite expands 16 seed analyses into 50 prefix cases whose
difficulty bands total 16 / 32 / 44 / 50 (levels 1, 1-2, 1-3, 1-4).  Suite
files are JSON: a generator config for the dataset plus seeds carrying the
full ground-truth plan and one question per plan prefix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .bench import AblationSeed, BenchmarkCase, check_shipped_bands, generate_cases
from .kb import KnowledgeBaseDoc
from .plan import parse_plan
from .synthetic import GeneratorConfig, generate
from .table import Table

#: Dataset the shipped suite runs against: deterministic and small enough
#: that a full 4-k sweep stays fast at the desk.
SHIPPED_GENERATOR = GeneratorConfig(seed=7, n_rows=2000)

_S = "slice"
_A = "aggregate"


def _where_eq(col: str, value: Any) -> dict:
    return {"col": col, "op": "eq", "value": value}


def _and(*conds: dict) -> dict:
    return {"and": list(conds)}


SHIPPED_SEED_SPECS: tuple[dict[str, Any], ...] = (
    {
        "id": "rc7-failing-functions",
        "queries": (
            "Which test case function executions failed for release candidate RC7?",
            "How many failures does each test case function have for release "
            "candidate RC7?",
            "Rank the test case functions by number of failures for release "
            "candidate RC7, most failures first.",
            "What are the test case functions that fail the most for release "
            "candidate RC7?",
        ),
        "steps": [
            {"kind": _S, "select": ["test_case_function"],
             "where": _and(_where_eq("release_candidate", "RC7"),
                           _where_eq("test_status", "failed"))},
            {"kind": _A, "func": "count", "group_by": ["test_case_function"]},
            {"kind": "sort", "keys": [{"col": "count", "dir": "desc"}]},
            {"kind": "limit", "n": 5},
        ],
    },
    {
        "id": "rc2-slow-components",
        "queries": (
            "Show the component and duration of every passed test on release "
            "candidate RC2.",
            "What is the mean test duration per software component for passed "
            "tests on release candidate RC2?",
            "Order the software components of release candidate RC2 by their "
            "mean passed-test duration, slowest first.",
            "Which three software components have the slowest mean passed-test "
            "duration on release candidate RC2?",
        ),
        "steps": [
            {"kind": _S, "select": ["software_component", "duration_s"],
             "where": _and(_where_eq("release_candidate", "RC2"),
                           _where_eq("test_status", "passed"))},
            {"kind": _A, "func": "mean", "column": "duration_s",
             "group_by": ["software_component"]},
            {"kind": "sort", "keys": [{"col": "mean_duration_s", "dir": "desc"}]},
            {"kind": "limit", "n": 3},
        ],
    },
    {
        "id": "g3-tester-workload",
        "queries": (
            "List the tester of every result that feeds the G3_closed_track gate.",
            "How many G3_closed_track results has each tester produced?",
            "Rank testers by their number of G3_closed_track results, busiest "
            "first and ties by tester id.",
            "Who are the ten busiest testers for the G3_closed_track gate?",
        ),
        "steps": [
            {"kind": _S, "select": ["tester_id"],
             "where": _where_eq("gate_name", "G3_closed_track")},
            {"kind": _A, "func": "count", "group_by": ["tester_id"]},
            {"kind": "sort", "keys": [{"col": "count", "dir": "desc"},
                                       {"col": "tester_id", "dir": "asc"}]},
            {"kind": "limit", "n": 10},
        ],
    },
    {
        "id": "autonomous-top-speeds",
        "queries": (
            "Show vehicle model and maximum speed for passed tests in "
            "autonomous driver mode.",
            "What is the highest maximum speed per vehicle model among passed "
            "autonomous-mode tests?",
            "Order the vehicle models by their highest autonomous-mode maximum "
            "speed, fastest first.",
            "Which three vehicle models reached the highest maximum speed in "
            "passed autonomous-mode tests?",
        ),
        "steps": [
            {"kind": _S, "select": ["vehicle_model", "speed_max_kmh"],
             "where": _and(_where_eq("driver_mode", "autonomous"),
                           _where_eq("test_status", "passed"))},
            {"kind": _A, "func": "max", "column": "speed_max_kmh",
             "group_by": ["vehicle_model"]},
            {"kind": "sort", "keys": [{"col": "max_speed_max_kmh", "dir": "desc"}]},
            {"kind": "limit", "n": 3},
        ],
    },
    {
        "id": "safety-failure-hotspots",
        "queries": (
            "Show every failed test execution with all its fields.",
            "Among failed tests, show the component and error code of the "
            "safety-relevant ones.",
            "Count failed safety-relevant tests per component and error code.",
            "Which component and error code combinations cause the most failed "
            "safety-relevant tests?",
        ),
        "steps": [
            {"kind": _S, "select": "all",
             "where": _where_eq("test_status", "failed")},
            {"kind": _S, "select": ["software_component", "error_code"],
             "where": _where_eq("safety_relevant", True)},
            {"kind": _A, "func": "count",
             "group_by": ["software_component", "error_code"]},
            {"kind": "sort", "keys": [{"col": "count", "dir": "desc"}]},
        ],
    },
    {
        "id": "vehicle-level-coverage",
        "queries": (
            "Show all results recorded at the vehicle integration level.",
            "For passed vehicle-level tests, list the release candidate and "
            "test case function.",
            "How many distinct test case functions passed at vehicle level per "
            "release candidate?",
            "Rank release candidates by their distinct passed vehicle-level "
            "function coverage, broadest first.",
        ),
        "steps": [
            {"kind": _S, "select": "all",
             "where": _where_eq("integration_level", "vehicle")},
            {"kind": _S, "select": ["release_candidate", "test_case_function"],
             "where": _where_eq("test_status", "passed")},
            {"kind": _A, "func": "distinct_count", "column": "test_case_function",
             "group_by": ["release_candidate"]},
            {"kind": "sort",
             "keys": [{"col": "distinct_count_test_case_function", "dir": "desc"}]},
        ],
    },
    {
        "id": "hauler-mean-duration",
        "queries": (
            "Show every test executed on the VM-Hauler vehicle model.",
            "List the durations of passed VM-Hauler tests.",
            "What is the mean duration of passed VM-Hauler tests?",
        ),
        "steps": [
            {"kind": _S, "select": "all",
             "where": _where_eq("vehicle_model", "VM-Hauler")},
            {"kind": _S, "select": ["duration_s"],
             "where": _where_eq("test_status", "passed")},
            {"kind": _A, "func": "mean", "column": "duration_s"},
        ],
    },
    {
        "id": "snow-distance-total",
        "queries": (
            "Show all tests that ran in snow.",
            "List the recorded driving distances of snow tests.",
            "How many kilometres were driven in snow tests in total?",
        ),
        "steps": [
            {"kind": _S, "select": "all", "where": _where_eq("weather", "snow")},
            {"kind": _S, "select": ["distance_km"],
             "where": {"col": "distance_km", "op": "not_null"}},
            {"kind": _A, "func": "sum", "column": "distance_km"},
        ],
    },
    {
        "id": "rc1-braking-overview",
        "queries": (
            "Show function, status and execution time of the braking tests on "
            "release candidate RC1.",
        ),
        "steps": [
            {"kind": _S,
             "select": ["test_case_function", "test_status", "executed_at"],
             "where": _and(_where_eq("release_candidate", "RC1"),
                           _where_eq("software_component", "braking"))},
        ],
    },
    {
        "id": "steering-failures-recent",
        "queries": (
            "Show the function, time and error code of failed steering tests.",
            "List failed steering tests with their error codes, most recent "
            "execution first.",
        ),
        "steps": [
            {"kind": _S,
             "select": ["test_case_function", "executed_at", "error_code"],
             "where": _and(_where_eq("software_component", "steering"),
                           _where_eq("test_status", "failed"))},
            {"kind": "sort", "keys": [{"col": "executed_at", "dir": "desc"}]},
        ],
    },
    {
        "id": "blocked-components",
        "queries": (
            "Show every blocked test execution.",
            "Which software components have blocked tests?",
        ),
        "steps": [
            {"kind": _S, "select": "all",
             "where": _where_eq("test_status", "blocked")},
            {"kind": "distinct", "columns": ["software_component"]},
        ],
    },
    {
        "id": "rc5-passed-durations",
        "queries": (
            "Show all results for release candidate RC5.",
            "List function and duration of the passed tests on release "
            "candidate RC5.",
            "Sort the passed tests of release candidate RC5 by duration, "
            "longest first.",
        ),
        "steps": [
            {"kind": _S, "select": "all",
             "where": _where_eq("release_candidate", "RC5")},
            {"kind": _S, "select": ["test_case_function", "duration_s"],
             "where": _where_eq("test_status", "passed")},
            {"kind": "sort", "keys": [{"col": "duration_s", "dir": "desc"}]},
        ],
    },
    {
        "id": "endurance-longest",
        "queries": (
            "Show function, duration and tester of passed endurance-suite tests.",
            "Sort the passed endurance tests by duration, longest first.",
            "What are the ten longest passed endurance tests?",
        ),
        "steps": [
            {"kind": _S,
             "select": ["test_case_function", "duration_s", "tester_id"],
             "where": _and(_where_eq("test_suite", "endurance"),
                           _where_eq("test_status", "passed"))},
            {"kind": "sort", "keys": [{"col": "duration_s", "dir": "desc"}]},
            {"kind": "limit", "n": 10},
        ],
    },
    {
        "id": "p0-manual-timeline",
        "queries": (
            "Show every P0-priority test result.",
            "Among P0 results, list function, status and upload time of the "
            "manually executed ones.",
            "Order the manually executed P0 results by upload time, oldest "
            "first.",
        ),
        "steps": [
            {"kind": _S, "select": "all", "where": _where_eq("priority", "P0")},
            {"kind": _S,
             "select": ["test_case_function", "test_status", "uploaded_at"],
             "where": _where_eq("is_automated", False)},
            {"kind": "sort", "keys": [{"col": "uploaded_at", "dir": "asc"}]},
        ],
    },
    {
        "id": "battery-cold-runs",
        "queries": (
            "Show vehicle model, state of charge and ambient temperature for "
            "battery management tests.",
            "Sort the battery management tests by ambient temperature, coldest "
            "first.",
            "Show the twenty coldest battery management runs.",
        ),
        "steps": [
            {"kind": _S,
             "select": ["vehicle_model", "battery_soc_pct", "ambient_temp_c"],
             "where": _where_eq("software_component", "battery_mgmt")},
            {"kind": "sort", "keys": [{"col": "ambient_temp_c", "dir": "asc"}]},
            {"kind": "limit", "n": 20},
        ],
    },
    {
        "id": "regression-noisiest-failures",
        "queries": (
            "Show function, warning count and log size of failed regression "
            "tests.",
            "Sort the failed regression tests by warning count and log size, "
            "noisiest first.",
            "What are the fifteen noisiest failed regression tests?",
        ),
        "steps": [
            {"kind": _S,
             "select": ["test_case_function", "warnings_count", "log_size_kb"],
             "where": _and(_where_eq("test_status", "failed"),
                           _where_eq("is_regression", True))},
            {"kind": "sort", "keys": [{"col": "warnings_count", "dir": "desc"},
                                       {"col": "log_size_kb", "dir": "desc"}]},
            {"kind": "limit", "n": 15},
        ],
    },
)


def build_seeds(specs, schema) -> list[AblationSeed]:
    seeds = []
    for spec in specs:
        plan = parse_plan(json.dumps({"steps": spec["steps"]}), schema)
        seeds.append(AblationSeed(
            id=spec["id"], plan=plan, queries=tuple(spec["queries"]),
        ))
    return seeds


@dataclass(frozen=True)
class Suite:
    name: str
    dataset: Table
    kb: KnowledgeBaseDoc
    cases: list[BenchmarkCase]


def shipped_suite(generator: GeneratorConfig = SHIPPED_GENERATOR) -> Suite:
    """Materialize the shipped 50-case suite (band totals checked)."""
    dataset, schema, kb = generate(generator)
    seeds = build_seeds(SHIPPED_SEED_SPECS, schema)
    cases = generate_cases(seeds, dataset)
    check_shipped_bands(cases)
    return Suite(name="shipped-50", dataset=dataset, kb=kb, cases=cases)


def suite_to_dict(name: str, generator: GeneratorConfig,
                  specs=SHIPPED_SEED_SPECS) -> dict[str, Any]:
    return {
        "name": name,
        "dataset": {"generator": {
            "seed": generator.seed,
            "n_rows": generator.n_rows,
            "n_release_candidates": generator.n_release_candidates,
            "n_test_functions": generator.n_test_functions,
        }},
        "seeds": [
            {"id": s["id"], "queries": list(s["queries"]),
             "plan": {"steps": s["steps"]}}
            for s in specs
        ],
    }


def write_suite_file(path: str | Path, name: str = "shipped-50",
                     generator: GeneratorConfig = SHIPPED_GENERATOR) -> Path:
    path = Path(path)
    path.write_text(json.dumps(suite_to_dict(name, generator), indent=2),
                    encoding="utf-8")
    return path


def load_suite(source: str | Path) -> Suite:
    """Load a suite file; ``shipped`` names the built-in suite."""
    if str(source) == "shipped":
        return shipped_suite()
    raw = json.loads(Path(source).read_text(encoding="utf-8"))
    gen_raw = raw.get("dataset", {}).get("generator")
    if gen_raw is None:
        raise ValueError("suite file needs dataset.generator")
    generator = GeneratorConfig(
        seed=int(gen_raw.get("seed", 7)),
        n_rows=int(gen_raw.get("n_rows", 2000)),
        n_release_candidates=int(gen_raw.get("n_release_candidates", 12)),
        n_test_functions=int(gen_raw.get("n_test_functions", 30)),
    )
    dataset, schema, kb = generate(generator)
    specs = [
        {"id": s["id"], "queries": tuple(s["queries"]), "steps": s["plan"]["steps"]}
        for s in raw["seeds"]
    ]
    seeds = build_seeds(specs, schema)
    cases = generate_cases(seeds, dataset)
    return Suite(name=str(raw.get("name", Path(str(source)).stem)),
                 dataset=dataset, kb=kb, cases=cases)
