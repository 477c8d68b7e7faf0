"""Seeded generator for a release-test results table and its knowledge base.

The real data this stands in for is proprietary, so the 40 fields here are
invented but representative: enough categorical, numeric, boolean and
timestamp columns that every benchmark archetype query is expressible.
Generation uses a local splitmix64 PRNG, never the interpreter's ambient
randomness, so a fixed seed yields byte-identical tables on any platform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any

from .kb import ConstraintSet, FewShotExample, KnowledgeBaseDoc
from .plan import parse_plan
from .table import ColumnType, FieldSpec, Schema, Table, export_csv_text, load_csv

_MASK64 = (1 << 64) - 1

STATUS_STATES = ("passed", "failed", "N/A", "blocked")
INTEGRATION_LEVELS = ("component", "subsystem", "system", "vehicle")
VEHICLE_MODELS = ("VM-Hauler", "VM-Cityvan", "VM-Longhaul", "VM-Shuttle",
                  "VM-Compact", "VM-Offroad")
TEST_TRACKS = ("north_loop", "south_loop", "handling_course", "high_speed_oval",
               "urban_mockup")
COMPONENTS = ("braking", "steering", "powertrain", "battery_mgmt", "adas_camera",
              "adas_radar", "infotainment", "telematics", "body_control",
              "climate_control")
GATES = ("G1_component_ready", "G2_subsystem_ready", "G3_closed_track",
         "G4_public_road")
TEST_SUITES = ("smoke", "regression", "endurance", "safety", "performance")
WEATHER = ("dry", "rain", "snow", "fog")
ROAD_CONDITIONS = ("asphalt", "gravel", "wet", "icy")
DRIVER_MODES = ("manual", "assisted", "autonomous")
SENSOR_PACKS = ("SP-A", "SP-B", "SP-C")
HW_REVISIONS = ("HW-1", "HW-2", "HW-3")
ERROR_CODES = ("E-BUS", "E-TIMEOUT", "E-SENSOR", "E-ACTUATOR", "E-SW", "E-CAL")
PRIORITIES = ("P0", "P1", "P2", "P3")

_FUNCTION_STEMS = (
    "emergency_brake", "lane_keep", "adaptive_cruise", "blind_spot",
    "park_assist", "traction_control", "hill_hold", "regen_braking",
    "battery_thermal", "charge_balancing", "torque_vectoring", "abs_modulation",
    "collision_warning", "pedestrian_detect", "sign_recognition", "headlight_adapt",
    "wiper_auto", "door_lock", "keyless_entry", "ota_update", "can_gateway",
    "diag_session", "crash_signal", "airbag_arm", "seatbelt_monitor",
    "tire_pressure", "stability_yaw", "steering_return", "cruise_resume",
    "speed_limiter", "drowsiness_watch", "cabin_preheat", "defrost_cycle",
    "mirror_fold", "horn_circuit", "reverse_camera",
)


class SplitMix64:
    """Tiny deterministic PRNG; identical output on every platform."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return self.next_u64() / 2.0**64

    def randint(self, lo: int, hi: int) -> int:
        return lo + self.next_u64() % (hi - lo + 1)

    def choice(self, seq):
        return seq[self.next_u64() % len(seq)]

    def weighted(self, options, weights) -> Any:
        total = sum(weights)
        x = self.uniform() * total
        acc = 0.0
        for opt, w in zip(options, weights):
            acc += w
            if x < acc:
                return opt
        return options[-1]


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 7
    n_rows: int = 55000
    n_release_candidates: int = 12
    n_test_functions: int = 30

    def __post_init__(self) -> None:
        if self.n_rows < 1 or self.n_release_candidates < 1 or self.n_test_functions < 1:
            raise ValueError("all generator counts must be positive")
        if self.n_test_functions > len(_FUNCTION_STEMS):
            raise ValueError(
                f"at most {len(_FUNCTION_STEMS)} test functions supported"
            )


def build_schema(config: GeneratorConfig) -> Schema:
    rcs = tuple(f"RC{i}" for i in range(1, config.n_release_candidates + 1))
    functions = tuple(f"{stem}_check" for stem in
                      _FUNCTION_STEMS[: config.n_test_functions])
    testers = tuple(f"T{i:03d}" for i in range(1, 25))
    T = ColumnType
    fields = (
        FieldSpec("release_candidate", T.TEXT,
                  "Software build under gate evaluation.", rcs),
        FieldSpec("software_component", T.TEXT,
                  "Component the test exercises.", COMPONENTS),
        FieldSpec("test_case_function", T.TEXT,
                  "Function verified by the test case.", functions),
        FieldSpec("test_status", T.TEXT,
                  "Outcome of the execution.", STATUS_STATES),
        FieldSpec("vehicle_model", T.TEXT, "Vehicle platform.", VEHICLE_MODELS),
        FieldSpec("integration_level", T.TEXT,
                  "Integration stage the test ran at.", INTEGRATION_LEVELS),
        FieldSpec("test_track", T.TEXT, "Closed track used.", TEST_TRACKS),
        FieldSpec("executed_at", T.TIMESTAMP, "Execution start, UTC."),
        FieldSpec("duration_s", T.FLOAT,
                  "Wall-clock duration in seconds; null when not run."),
        FieldSpec("tester_id", T.TEXT, "Engineer who ran the test.", testers),
        FieldSpec("build_number", T.INT, "CI build the software came from."),
        FieldSpec("retry_count", T.INT, "Automatic retries before this result."),
        FieldSpec("error_code", T.TEXT,
                  "Failure classification; null unless the test failed.",
                  ERROR_CODES),
        FieldSpec("priority", T.TEXT, "Triage priority.", PRIORITIES),
        FieldSpec("is_automated", T.BOOL, "Ran from the automation rig."),
        FieldSpec("is_regression", T.BOOL, "Belongs to the regression set."),
        FieldSpec("safety_relevant", T.BOOL, "Counts toward the safety case."),
        FieldSpec("requirement_id", T.TEXT, "Requirement the test verifies."),
        FieldSpec("gate_name", T.TEXT, "Gate the result feeds.", GATES),
        FieldSpec("test_suite", T.TEXT, "Suite the case belongs to.", TEST_SUITES),
        FieldSpec("weather", T.TEXT, "Weather during the run.", WEATHER),
        FieldSpec("road_condition", T.TEXT, "Surface state.", ROAD_CONDITIONS),
        FieldSpec("driver_mode", T.TEXT, "Driving mode under test.", DRIVER_MODES),
        FieldSpec("sensor_pack", T.TEXT, "Sensor configuration.", SENSOR_PACKS),
        FieldSpec("firmware_version", T.TEXT, "Component firmware version."),
        FieldSpec("hardware_revision", T.TEXT, "ECU hardware revision.",
                  HW_REVISIONS),
        FieldSpec("scheduled_at", T.TIMESTAMP, "Planned start, UTC."),
        FieldSpec("uploaded_at", T.TIMESTAMP, "Result upload time, UTC."),
        FieldSpec("cpu_load_pct", T.FLOAT, "Mean ECU CPU load during the run."),
        FieldSpec("memory_peak_mb", T.FLOAT, "Peak ECU memory use."),
        FieldSpec("battery_soc_pct", T.FLOAT, "State of charge at start."),
        FieldSpec("ambient_temp_c", T.FLOAT, "Outside temperature."),
        FieldSpec("distance_km", T.FLOAT, "Distance driven during the test."),
        FieldSpec("speed_avg_kmh", T.FLOAT, "Average speed."),
        FieldSpec("speed_max_kmh", T.FLOAT, "Maximum speed reached."),
        FieldSpec("log_size_kb", T.INT, "Size of the captured log bundle."),
        FieldSpec("warnings_count", T.INT, "Diagnostic warnings recorded."),
        FieldSpec("defect_count", T.INT, "Defects filed from this run."),
        FieldSpec("measurement_channel_count", T.INT,
                  "Active measurement channels."),
        FieldSpec("data_quality_score", T.FLOAT,
                  "Automated plausibility score, 0-1."),
    )
    return Schema(fields)


_BASE_TIME = datetime(2024, 3, 1, tzinfo=timezone.utc)


def _generate_row(rng: SplitMix64, schema: Schema, index: int) -> list[Any]:
    by_name = {f.name: f for f in schema.fields}
    rcs = by_name["release_candidate"].states
    functions = by_name["test_case_function"].states
    testers = by_name["tester_id"].states

    # first rows cycle the four statuses so every state occurs at least once
    if index < len(STATUS_STATES):
        status = STATUS_STATES[index]
    else:
        status = rng.weighted(STATUS_STATES, (0.62, 0.20, 0.10, 0.08))
    executed = _BASE_TIME + timedelta(seconds=rng.randint(0, 120 * 86400))
    scheduled = executed - timedelta(seconds=rng.randint(300, 14 * 86400))
    uploaded = executed + timedelta(seconds=rng.randint(60, 86400))
    ran = status in ("passed", "failed")
    duration = round(5.0 + rng.uniform() * 1795.0, 3) if ran else None
    error = rng.choice(ERROR_CODES) if status == "failed" else None
    speed_avg = round(20.0 + rng.uniform() * 80.0, 2) if ran else None
    return [
        rng.choice(rcs),
        rng.choice(COMPONENTS),
        rng.choice(functions),
        status,
        rng.choice(VEHICLE_MODELS),
        rng.weighted(INTEGRATION_LEVELS, (0.3, 0.3, 0.25, 0.15)),
        rng.choice(TEST_TRACKS),
        executed,
        duration,
        rng.choice(testers),
        rng.randint(4000, 9999),
        rng.weighted((0, 1, 2, 3), (0.8, 0.12, 0.05, 0.03)),
        error,
        rng.weighted(PRIORITIES, (0.1, 0.3, 0.4, 0.2)),
        rng.uniform() < 0.7,
        rng.uniform() < 0.5,
        rng.uniform() < 0.35,
        f"REQ-{rng.randint(1000, 9999)}",
        rng.choice(GATES),
        rng.choice(TEST_SUITES),
        rng.weighted(WEATHER, (0.55, 0.25, 0.12, 0.08)),
        rng.choice(ROAD_CONDITIONS),
        rng.choice(DRIVER_MODES),
        rng.choice(SENSOR_PACKS),
        f"{rng.randint(3, 6)}.{rng.randint(0, 20)}.{rng.randint(0, 9)}",
        rng.choice(HW_REVISIONS),
        scheduled,
        uploaded,
        round(rng.uniform() * 100.0, 2),
        round(50.0 + rng.uniform() * 950.0, 1),
        round(10.0 + rng.uniform() * 90.0, 1),
        round(-15.0 + rng.uniform() * 50.0, 1),
        round(rng.uniform() * 250.0, 2) if ran else None,
        speed_avg,
        round((speed_avg or 0.0) + rng.uniform() * 60.0, 2) if ran else None,
        rng.randint(16, 50000),
        rng.weighted((0, 1, 2, 5, 12), (0.5, 0.2, 0.15, 0.1, 0.05)),
        rng.weighted((0, 1, 2), (0.85, 0.11, 0.04)),
        rng.randint(4, 128),
        round(rng.uniform(), 4),
    ]


def _field_note(spec: FieldSpec) -> str:
    note = spec.description
    if spec.states:
        note += f" Admissible values: {', '.join(spec.states)}."
    return note


_EXAMPLE_SPECS = (
    {
        "query": "Show the failed tests for release candidate RC3.",
        "reasoning": (
            "The question asks for rows, not a statistic, so one slice step suffices.",
            "Filter on release_candidate = 'RC3' and test_status = 'failed'; "
            "'failed' is one of four statuses, so matching it explicitly is safe.",
            "Keep the columns a release manager needs to follow up.",
        ),
        "plan": {
            "steps": [
                {"kind": "slice",
                 "select": ["test_case_function", "software_component",
                            "tester_id", "executed_at"],
                 "where": {"and": [
                     {"col": "release_candidate", "op": "eq", "value": "RC3"},
                     {"col": "test_status", "op": "eq", "value": "failed"}]}},
            ]
        },
        "difficulty": 1,
    },
    {
        "query": "List braking tests that failed, most recent first.",
        "reasoning": (
            "Filter first: software_component = 'braking' and test_status = 'failed'.",
            "Then sort by executed_at descending so the newest failures lead.",
        ),
        "plan": {
            "steps": [
                {"kind": "slice",
                 "select": ["test_case_function", "executed_at", "error_code"],
                 "where": {"and": [
                     {"col": "software_component", "op": "eq", "value": "braking"},
                     {"col": "test_status", "op": "eq", "value": "failed"}]}},
                {"kind": "sort", "keys": [{"col": "executed_at", "dir": "desc"}]},
            ]
        },
        "difficulty": 2,
    },
    {
        "query": "How many tests has each tester executed for release candidate RC1?",
        "reasoning": (
            "Narrow to release_candidate = 'RC1' before any computation.",
            "Count rows per tester_id with a grouped count aggregate.",
        ),
        "plan": {
            "steps": [
                {"kind": "slice", "select": ["tester_id"],
                 "where": {"col": "release_candidate", "op": "eq", "value": "RC1"}},
                {"kind": "aggregate", "func": "count", "group_by": ["tester_id"]},
            ]
        },
        "difficulty": 3,
    },
    {
        "query": "What are the test case functions that fail the most for "
                 "release candidate RC7?",
        "reasoning": (
            "Slice to release_candidate = 'RC7' and test_status = 'failed'; "
            "only the test_case_function column is needed afterwards.",
            "Count rows per test_case_function.",
            "Sort by the count descending and keep the top rows.",
        ),
        "plan": {
            "steps": [
                {"kind": "slice", "select": ["test_case_function"],
                 "where": {"and": [
                     {"col": "release_candidate", "op": "eq", "value": "RC7"},
                     {"col": "test_status", "op": "eq", "value": "failed"}]}},
                {"kind": "aggregate", "func": "count",
                 "group_by": ["test_case_function"]},
                {"kind": "sort", "keys": [{"col": "count", "dir": "desc"}]},
                {"kind": "limit", "n": 5},
            ]
        },
        "difficulty": 4,
    },
)


def build_kb(schema: Schema) -> KnowledgeBaseDoc:
    examples = tuple(
        FewShotExample(
            query=spec["query"],
            reasoning=spec["reasoning"],
            plan=parse_plan(json.dumps(spec["plan"]), schema),
            difficulty=spec["difficulty"],
        )
        for spec in _EXAMPLE_SPECS
    )
    return KnowledgeBaseDoc(
        schema=schema,
        field_notes={f.name: _field_note(f) for f in schema.fields},
        dataset_prose=(
            "Each row records one execution of a software test case function "
            "on a vehicle or rig: which release candidate build was under "
            "test, the component and function exercised, the outcome, and "
            "the conditions and measurements of the run. Release managers "
            "query this table to decide whether a release candidate may pass "
            "its gate. The table is a synthetic stand-in generated with a "
            "fixed seed; its shape and vocabulary mirror production release-"
            "test data."
        ),
        terminology={
            "release candidate": "a software build under gate evaluation, "
                                 "named RC1, RC2, ...",
            "gate": "a release checkpoint whose criteria must be fulfilled "
                    "before integration proceeds",
            "integration level": "how much of the vehicle is assembled around "
                                 "the component under test",
            "closed track": "a controlled proving ground; results here feed "
                            "the G3_closed_track gate",
        },
        constraints=ConstraintSet(),
        examples=examples,
    )


def generate(config: GeneratorConfig) -> tuple[Table, Schema, KnowledgeBaseDoc]:
    """Deterministic table + schema + KB for the given config."""
    schema = build_schema(config)
    rng = SplitMix64(config.seed)
    columns: list[list[Any]] = [[] for _ in schema.fields]
    for i in range(config.n_rows):
        row = _generate_row(rng, schema, i)
        for j, v in enumerate(row):
            columns[j].append(v)
    table = Table(schema, columns)
    return table, schema, build_kb(schema)


def export_csv(table: Table, path: str | Path) -> Path:
    """Write RFC-4180 CSV that round-trips through load_csv."""
    path = Path(path)
    path.write_text(export_csv_text(table), encoding="utf-8")
    return path


def load_exported_csv(path: str | Path, schema: Schema) -> Table:
    return load_csv(Path(path).read_bytes(), schema)
