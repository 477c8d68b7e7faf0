"""Risk-constrained, LLM-assisted analytics over release-test tables.

A planner agent turns stakeholder questions into plans within a closed
two-action DSL (slicing + operations), an actor realizes and executes them
deterministically, and an ablation benchmark strict-matches results against
oracle-computed ground truth.  The scripted gateway backend makes the whole
pipeline runnable offline.
"""

from .table import (
    ColumnType,
    FieldSpec,
    Schema,
    Table,
    canonical_table_text,
    load_csv,
    validate,
)
from .plan import (
    AnalysisPlan,
    canonicalize,
    classify_difficulty,
    parse_plan,
    render_steps,
    validate_plan,
)
from .executor import execute_plan, execute_step
from .oracle import oracle_execute
from .gateway import BackendConfig, ChatRequest, ChatResponse, complete, complete_n
from .kb import KnowledgeBaseDoc, load_kb, save_kb, select_examples
from .planner import PlanDecision, extract_plan_document, plan_query, plan_query_single
from .actor import ReflectionConfig, RunResult, realize_step, run
from .synthetic import GeneratorConfig, export_csv, generate
from .bench import run_suite, strict_match, success_rate

__version__ = "0.1.0"

__all__ = [
    "AnalysisPlan",
    "BackendConfig",
    "ChatRequest",
    "ChatResponse",
    "ColumnType",
    "FieldSpec",
    "GeneratorConfig",
    "KnowledgeBaseDoc",
    "PlanDecision",
    "ReflectionConfig",
    "RunResult",
    "Schema",
    "Table",
    "canonical_table_text",
    "canonicalize",
    "classify_difficulty",
    "complete",
    "complete_n",
    "execute_plan",
    "execute_step",
    "export_csv",
    "extract_plan_document",
    "generate",
    "load_csv",
    "load_kb",
    "oracle_execute",
    "parse_plan",
    "plan_query",
    "plan_query_single",
    "realize_step",
    "render_steps",
    "run",
    "run_suite",
    "save_kb",
    "select_examples",
    "strict_match",
    "success_rate",
    "validate",
    "validate_plan",
]
