"""Domain grounding: schema docs, constraints, few-shot examples, prompts.

The knowledge base is a single human-editable YAML file with sections
``schema``, ``field_notes``, ``dataset_prose``, ``terminology``,
``constraints`` and ``examples``; worked examples embed their plans as JSON
wire documents.  Prompt assembly is a pure function of its inputs, so prompt
snapshots are stable test subjects.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .plan import AnalysisPlan, classify_difficulty, parse_plan, plan_to_wire_text
from .gateway import ChatRequest
from .table import ColumnType, FieldSpec, Schema


class KbError(Exception):
    """Malformed or inconsistent knowledge-base document."""


#: Default planner constraints.  The first two are mandatory for every
#: ConstraintSet: status-like fields carry more than two states (an 'N/A'
#: outcome is a real value, not a missing one), and plans should filter
#: before they sort.
DEFAULT_CONSTRAINTS = (
    "Status-like fields have more than two states. Retrieving rows for a "
    "value and its opposite does not cover the whole table: statuses such "
    "as 'N/A' or 'blocked' are real values that must be accounted for "
    "explicitly, and 'N/A' is never a missing value.",
    "Narrow the data down first: apply slice steps (column selection and "
    "row filters) before sort or aggregate steps so later operations work "
    "on the smallest possible table.",
    "Use only the step kinds defined below. If the question cannot be "
    "answered with them, produce the closest expressible plan.",
    "Copy column names exactly as documented; never invent columns.",
)


@dataclass(frozen=True)
class ConstraintSet:
    texts: tuple[str, ...] = DEFAULT_CONSTRAINTS

    def __post_init__(self) -> None:
        joined = "\n".join(t.lower() for t in self.texts)
        if "n/a" not in joined:
            raise KbError("constraint set must include the non-binary states rule")
        if not any("filter" in t.lower() and "sort" in t.lower() for t in self.texts):
            raise KbError("constraint set must include the filter-before-sort rule")


@dataclass(frozen=True)
class FewShotExample:
    query: str
    reasoning: tuple[str, ...]
    plan: AnalysisPlan
    difficulty: int

    def __post_init__(self) -> None:
        if not self.reasoning:
            raise KbError("example reasoning must be non-empty")


@dataclass(frozen=True)
class KnowledgeBaseDoc:
    schema: Schema
    field_notes: dict[str, str]
    dataset_prose: str
    terminology: dict[str, str]
    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    examples: tuple[FewShotExample, ...] = ()


def validate_kb(doc: KnowledgeBaseDoc) -> None:
    """Raise KbError unless notes cover the schema and restate all states."""
    for spec in doc.schema.fields:
        note = doc.field_notes.get(spec.name)
        if note is None or not note.strip():
            raise KbError(f"missing field note for {spec.name!r}")
        if spec.states:
            missing = [s for s in spec.states if s not in note]
            if missing:
                raise KbError(
                    f"field note for {spec.name!r} does not mention states {missing}; "
                    f"schema lists {list(spec.states)}"
                )
    for i, ex in enumerate(doc.examples):
        issues_plan = ex.plan
        if issues_plan.schema is None or issues_plan.schema != doc.schema:
            raise KbError(f"example {i}: plan is not bound to the KB schema")
        if classify_difficulty(ex.plan) != ex.difficulty:
            raise KbError(
                f"example {i}: stated difficulty {ex.difficulty} does not match "
                f"the plan (level {classify_difficulty(ex.plan)})"
            )


def _schema_from_raw(raw: list[dict]) -> Schema:
    fields = []
    for rec in raw:
        states = rec.get("states")
        fields.append(FieldSpec(
            name=rec["name"],
            type=ColumnType(rec["type"]),
            description=rec.get("description", ""),
            states=tuple(states) if states else None,
        ))
    return Schema(tuple(fields))


def _schema_to_raw(schema: Schema) -> list[dict]:
    out = []
    for f in schema.fields:
        rec: dict = {"name": f.name, "type": f.type.value, "description": f.description}
        if f.states is not None:
            rec["states"] = list(f.states)
        out.append(rec)
    return out


def load_kb(source: str | Path) -> KnowledgeBaseDoc:
    """Load and cross-validate a KB document (YAML text or file path)."""
    if isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
    elif "\n" not in source and Path(source).is_file():
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = str(source)
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise KbError(f"malformed KB document: {exc}") from None
    if not isinstance(raw, dict):
        raise KbError("KB document must be a mapping")
    for key in ("schema", "field_notes", "dataset_prose"):
        if key not in raw:
            raise KbError(f"KB document missing section {key!r}")
    try:
        schema = _schema_from_raw(raw["schema"])
    except (KeyError, TypeError, ValueError) as exc:
        raise KbError(f"bad schema section: {exc}") from None

    constraints = ConstraintSet(tuple(raw["constraints"])) if raw.get("constraints") \
        else ConstraintSet()
    examples = []
    for i, rec in enumerate(raw.get("examples", [])):
        try:
            plan = parse_plan(rec["plan"], schema)
        except Exception as exc:
            raise KbError(f"example {i}: bad plan document: {exc}") from None
        examples.append(FewShotExample(
            query=rec["query"],
            reasoning=tuple(rec["reasoning"]),
            plan=plan,
            difficulty=int(rec.get("difficulty", classify_difficulty(plan))),
        ))
    doc = KnowledgeBaseDoc(
        schema=schema,
        field_notes=dict(raw["field_notes"]),
        dataset_prose=str(raw["dataset_prose"]),
        terminology=dict(raw.get("terminology", {})),
        constraints=constraints,
        examples=tuple(examples),
    )
    validate_kb(doc)
    return doc


def dump_kb(doc: KnowledgeBaseDoc) -> str:
    """Serialize a KB document to its YAML file form."""
    raw = {
        "schema": _schema_to_raw(doc.schema),
        "field_notes": dict(doc.field_notes),
        "dataset_prose": doc.dataset_prose,
        "terminology": dict(doc.terminology),
        "constraints": list(doc.constraints.texts),
        "examples": [
            {
                "query": ex.query,
                "reasoning": list(ex.reasoning),
                "plan": plan_to_wire_text(ex.plan),
                "difficulty": ex.difficulty,
            }
            for ex in doc.examples
        ],
    }
    return yaml.safe_dump(raw, sort_keys=False, allow_unicode=True, width=88)


def save_kb(doc: KnowledgeBaseDoc, path: str | Path) -> None:
    Path(path).write_text(dump_kb(doc), encoding="utf-8")


def select_examples(store: list[FewShotExample] | tuple[FewShotExample, ...],
                    k: int) -> list[FewShotExample]:
    """First k examples in curated store order (deterministic k-shot sweeps)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k > len(store):
        raise ValueError(f"k={k} exceeds example store size {len(store)}")
    return list(store[:k])


ACTION_DEFINITIONS = """\
The plan may use exactly two kinds of atomic action:

1. Slicing ("slice" steps): choose the columns to keep and the conditions
   that rows must satisfy. Conditions compare one column against literal
   values and combine with and/or.
2. Operation ("aggregate", "sort", "limit", "distinct" steps): apply an
   operation such as max, mean or count to one or more columns of the data
   produced by the slicing steps, order rows, keep the first n rows, or
   keep distinct value combinations.

No other action exists. Plans are executed exactly as written."""

WIRE_FORMAT_SPEC = """\
Return the plan as one JSON document inside a fenced code block:

```json
{"steps": [
  {"kind": "slice", "select": ["col", ...] or "all",
   "where": {"and"|"or": [ ... ]} or {"col": "c", "op": "eq", "value": v}},
  {"kind": "aggregate", "func": "count|sum|mean|min|max|median|distinct_count",
   "column": "c" (omit for count), "group_by": ["c", ...] (optional)},
  {"kind": "sort", "keys": [{"col": "c", "dir": "asc"|"desc"}, ...]},
  {"kind": "limit", "n": 5},
  {"kind": "distinct", "columns": ["c", ...]}
]}
```

Comparators: eq, ne, lt, le, gt, ge, in, not_in, contains, is_null,
not_null. in/not_in take a list; is_null/not_null take no value;
timestamps are ISO-8601 text like "2024-05-01T00:00:00Z"."""


def _field_docs(schema: Schema, field_notes: dict[str, str]) -> str:
    lines = []
    for spec in schema.fields:
        line = f"- {spec.name} ({spec.type.value})"
        note = field_notes.get(spec.name, spec.description)
        if note:
            line += f": {note}"
        if spec.states:
            line += f" Admissible values: {', '.join(spec.states)}."
        lines.append(line)
    return "\n".join(lines)


def render_planner_prompt(
    kb: KnowledgeBaseDoc,
    examples: list[FewShotExample],
    query: str,
    constraints: ConstraintSet | None = None,
    temperature: float = 0.7,
    max_tokens: int = 2048,
) -> ChatRequest:
    """Assemble the planner prompt (byte-deterministic in its inputs)."""
    constraints = constraints or kb.constraints
    parts = [
        "You are the planning agent of a release-test analysis assistant. "
        "You turn a stakeholder question about the test-result table into a "
        "step-by-step analysis plan. Think through the question first, then "
        "emit the plan.",
        "## The data\n" + kb.dataset_prose,
        "## Columns\n" + _field_docs(kb.schema, kb.field_notes),
    ]
    if kb.terminology:
        terms = "\n".join(f"- {k}: {v}" for k, v in sorted(kb.terminology.items()))
        parts.append("## Terminology\n" + terms)
    parts.append("## Actions\n" + ACTION_DEFINITIONS)
    parts.append("## Constraints\n" + "\n".join(f"- {t}" for t in constraints.texts))
    parts.append("## Plan format\n" + WIRE_FORMAT_SPEC)
    for i, ex in enumerate(examples, start=1):
        reasoning = "\n".join(f"{j}. {t}" for j, t in enumerate(ex.reasoning, start=1))
        parts.append(
            f"## Worked example {i}\nQuestion: {ex.query}\nReasoning:\n{reasoning}\n"
            f"Plan:\n```json\n{plan_to_wire_text(ex.plan)}\n```"
        )
    parts.append(
        "## Your task\nWrite your reasoning as numbered steps, then emit "
        "exactly one fenced code block containing the plan document."
    )
    return ChatRequest(
        system_prompt="\n\n".join(parts),
        messages=(("user", query),),
        temperature=temperature,
        max_tokens=max_tokens,
    )


def render_actor_prompt(
    kb: KnowledgeBaseDoc,
    nl_step: str,
    memory_context: str = "",
    max_tokens: int = 1024,
) -> ChatRequest:
    """Prompt for translating one natural-language step into a step document."""
    parts = [
        "You translate one natural-language analysis step into exactly one "
        "structured step document for a closed table-analysis engine. Reply "
        "with a single fenced code block holding one JSON step object and "
        "nothing else.",
        "## Columns\n" + _field_docs(kb.schema, kb.field_notes),
        "## Step format\n" + WIRE_FORMAT_SPEC
        + "\n\nEmit exactly one step object, e.g. "
        '{"kind": "slice", "select": "all", "where": ...} — not a "steps" list.',
    ]
    if memory_context:
        parts.append(
            "## Previous attempts\nYour earlier attempts at this step failed "
            "or already ran; use the errors and results below to produce a "
            "corrected step.\n" + memory_context
        )
    return ChatRequest(
        system_prompt="\n\n".join(parts),
        messages=(("user", nl_step),),
        temperature=0.0,
        max_tokens=max_tokens,
    )
