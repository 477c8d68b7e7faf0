"""Actor agent: realizes and executes plans.

Safe mode executes the planner's structured plan directly.  Natural-language
mode hands each rendered step sentence to a coder LLM that must emit one
structured step document; validator errors are fed back through a bounded
self-reflection loop with a memory of every attempt.

The realization target is the step wire format, never free-form code, so
execution needs no sandbox and every emitted step is checkable before it
runs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Callable

from .executor import ExecutionTrace, StepTiming, execute_plan, execute_step
from .gateway import Backend, complete
from .kb import KnowledgeBaseDoc, render_actor_prompt
from .plan import (
    AnalysisPlan,
    PlanError,
    PlanStep,
    parse_step_document,
    render_steps,
)
from .planner import PlanDecision
from .table import Schema, Table, render_value

EXCERPT_ROWS = 5


@dataclass(frozen=True)
class MemoryRecord:
    """One coder-LLM attempt: either it failed validation (error) or it ran
    (execution_excerpt); never both."""

    attempt_index: int
    emitted_document: str
    task_context: str
    error: str | None = None
    execution_excerpt: str | None = None

    def __post_init__(self) -> None:
        if self.error is not None and self.execution_excerpt is not None:
            raise ValueError("error and execution_excerpt are mutually exclusive")


@dataclass(frozen=True)
class ReflectionConfig:
    max_retries: int = 3
    mode: str = "safe"  # "safe" | "natural_language"

    def __post_init__(self) -> None:
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.mode not in ("safe", "natural_language"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class RunResult:
    final_table: Table
    plan_executed: AnalysisPlan
    reflection_attempts_total: int
    memory: tuple[MemoryRecord, ...]
    trace: ExecutionTrace


class StepRealizationError(Exception):
    """Retries exhausted translating one step; carries the full memory."""

    def __init__(self, nl_step: str, memory: list[MemoryRecord]):
        self.nl_step = nl_step
        self.memory = memory
        last = memory[-1].error if memory else "no attempts"
        super().__init__(
            f"could not realize step {nl_step!r} after {len(memory)} attempts; "
            f"last error: {last}"
        )


def table_excerpt(table: Table, max_rows: int = EXCERPT_ROWS) -> str:
    """First rows of a table, bounded, for memory context."""
    header = ", ".join(table.schema.names)
    lines = [header]
    for i in range(min(table.row_count, max_rows)):
        lines.append(", ".join(render_value(v) for v in table.row(i)))
    if table.row_count > max_rows:
        lines.append(f"... ({table.row_count} rows total)")
    return "\n".join(lines)


def format_memory(memory: list[MemoryRecord]) -> str:
    parts = []
    for rec in memory:
        head = f"Attempt {rec.attempt_index} ({rec.task_context}):"
        body = f"emitted:\n{rec.emitted_document}"
        if rec.error is not None:
            body += f"\nerror: {rec.error}"
        if rec.execution_excerpt is not None:
            body += f"\nresult:\n{rec.execution_excerpt}"
        parts.append(f"{head}\n{body}")
    return "\n\n".join(parts)


def realize_step(
    nl_step: str,
    kb: KnowledgeBaseDoc,
    running_schema: Schema,
    memory: list[MemoryRecord],
    backend: Backend,
    config: ReflectionConfig,
    table: Table | None = None,
    task_context: str = "",
) -> tuple[PlanStep, Table | None, int]:
    """Translate one NL step under the reflection loop.

    Appends one MemoryRecord per LLM attempt.  When ``table`` is given the
    validated step is executed and its result excerpt recorded; the executed
    result is returned so the caller does not run the step twice.
    Returns (step, result_table_or_None, failed_attempts).
    """
    failures = 0
    for attempt in range(config.max_retries + 1):
        request = render_actor_prompt(kb, nl_step, format_memory(memory))
        response = complete(request, backend)
        context = task_context or nl_step
        try:
            step = parse_step_document(response.text, running_schema)
        except PlanError as exc:
            memory.append(MemoryRecord(
                attempt_index=attempt,
                emitted_document=response.text,
                task_context=context,
                error=str(exc),
            ))
            failures += 1
            continue
        result = None
        excerpt = None
        if table is not None:
            result = execute_step(step, table)
            excerpt = table_excerpt(result)
        memory.append(MemoryRecord(
            attempt_index=attempt,
            emitted_document=response.text,
            task_context=context,
            execution_excerpt=excerpt,
        ))
        return step, result, failures
    raise StepRealizationError(nl_step, memory)


def run(
    decision: PlanDecision,
    table: Table,
    kb: KnowledgeBaseDoc,
    backend: Backend | None,
    config: ReflectionConfig,
    nl_steps: list[str] | None = None,
) -> RunResult:
    """Execute a plan decision in the configured mode.

    Safe mode executes the chosen plan directly and cannot fail.  Natural-
    language mode realizes ``nl_steps`` (defaults to the chosen plan's
    renderings) one at a time against the running schema, executing as it
    goes.
    """
    if config.mode == "safe":
        final, trace = execute_plan(decision.chosen, table)
        return RunResult(
            final_table=final,
            plan_executed=decision.chosen,
            reflection_attempts_total=0,
            memory=(),
            trace=trace,
        )

    if backend is None:
        raise ValueError("natural_language mode requires a backend")
    steps_nl = nl_steps if nl_steps is not None else render_steps(decision.chosen)
    memory: list[MemoryRecord] = []
    realized: list[PlanStep] = []
    timings: list[StepTiming] = []
    current = table
    reflections = 0
    for i, sentence in enumerate(steps_nl):
        s0 = time.perf_counter()
        step, result, failures = realize_step(
            sentence,
            kb,
            current.schema,
            memory,
            backend,
            config,
            table=current,
            task_context=f"step {i + 1}/{len(steps_nl)}: {sentence}",
        )
        reflections += failures
        assert result is not None
        timings.append(StepTiming(current.row_count, result.row_count,
                                  time.perf_counter() - s0))
        realized.append(step)
        current = result
    plan = AnalysisPlan(steps=tuple(realized), schema=table.schema)
    return RunResult(
        final_table=current,
        plan_executed=plan,
        reflection_attempts_total=reflections,
        memory=tuple(memory),
        trace=ExecutionTrace(tuple(timings), sum(t.wall_s for t in timings)),
    )


# ---------------------------------------------------------------------------
# plugins: named data-source loaders resolvable at service level

Loader = Callable[..., Any]


class PluginError(Exception):
    pass


@dataclass
class PluginRegistry:
    _plugins: dict[str, Loader] = field(default_factory=dict)

    def register(self, name: str, capability: Loader) -> "PluginRegistry":
        if name in self._plugins:
            raise PluginError(f"plugin {name!r} already registered")
        self._plugins[name] = capability
        return self

    def resolve(self, name: str) -> Loader:
        try:
            return self._plugins[name]
        except KeyError:
            raise PluginError(
                f"no plugin named {name!r} (registered: {sorted(self._plugins)})"
            ) from None

    def names(self) -> list[str]:
        return sorted(self._plugins)


def register_plugin(registry: PluginRegistry, name: str, capability: Loader
                    ) -> PluginRegistry:
    return registry.register(name, capability)
