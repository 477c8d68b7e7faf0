"""Planner agent: query -> validated plan via self-consistency voting.

Each of n samples is extracted, parsed and validated independently; votes
are tallied over canonical plan forms so syntactic variation (key order,
condition order, casing) cannot split a vote.  The chosen plan always passes
validation — invalid plans can never reach the executor.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any

from .gateway import Backend, ChatRequest, complete_n
from .kb import ConstraintSet, KnowledgeBaseDoc, render_planner_prompt, select_examples
from .plan import AnalysisPlan, PlanError, canonicalize, parse_plan, render_steps


class PlanExtractionError(Exception):
    """No plan document found in an LLM reply."""


class PlanningFailure(Exception):
    """Every self-consistency candidate failed to parse or validate."""

    def __init__(self, candidates: list["PlanCandidate"]):
        self.candidates = candidates
        detail = "; ".join(
            f"sample {c.sample_index}: {c.error}" for c in candidates
        )
        super().__init__(f"all {len(candidates)} plan candidates invalid: {detail}")


@dataclass(frozen=True)
class PlanCandidate:
    sample_index: int
    raw_response: str
    plan: AnalysisPlan | None = None
    error: str | None = None
    canonical: str | None = None

    @property
    def valid(self) -> bool:
        return self.plan is not None


@dataclass(frozen=True)
class PlanDecision:
    candidates: tuple[PlanCandidate, ...]
    tally: dict[str, int]
    chosen: AnalysisPlan
    chosen_votes: int
    n_samples: int

    def to_dict(self) -> dict[str, Any]:
        """Deterministic serialization for run records."""
        from .plan import plan_to_wire

        return {
            "chosen_plan": plan_to_wire(self.chosen),
            "chosen_canonical": canonicalize(self.chosen),
            "chosen_votes": self.chosen_votes,
            "n_samples": self.n_samples,
            "nl_steps": render_steps(self.chosen),
            "tally": [
                {"canonical": form, "votes": count}
                for form, count in sorted(self.tally.items())
            ],
            "candidate_errors": [
                {"sample_index": c.sample_index, "error": c.error}
                for c in self.candidates
                if c.error is not None
            ],
        }


_FENCED_RE = re.compile(r"```[A-Za-z0-9_+-]*[ \t]*\r?\n(.*?)\r?\n?```", re.DOTALL)


def extract_plan_document(raw: str) -> str:
    """Content of the last fenced code block, else the largest balanced-brace
    span, else an extraction error."""
    blocks = _FENCED_RE.findall(raw)
    if blocks:
        return blocks[-1]
    best: str | None = None
    depth = 0
    start = -1
    for i, ch in enumerate(raw):
        if ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}" and depth > 0:
            depth -= 1
            if depth == 0:
                span = raw[start : i + 1]
                if best is None or len(span) > len(best):
                    best = span
    if best is not None:
        return best
    raise PlanExtractionError("reply contains no plan document")


def _evaluate_candidate(index: int, raw: str, schema) -> PlanCandidate:
    try:
        document = extract_plan_document(raw)
        plan = parse_plan(document, schema)
    except (PlanExtractionError, PlanError) as exc:
        return PlanCandidate(sample_index=index, raw_response=raw, error=str(exc))
    return PlanCandidate(
        sample_index=index, raw_response=raw, plan=plan, canonical=canonicalize(plan)
    )


def tally_and_choose(
    candidates: list[PlanCandidate],
) -> tuple[dict[str, int], PlanCandidate]:
    """Plurality over canonical forms; ties go to the lowest sample index."""
    valid = [c for c in candidates if c.valid]
    if not valid:
        raise PlanningFailure(list(candidates))
    tally: dict[str, int] = {}
    first_seen: dict[str, PlanCandidate] = {}
    for c in valid:
        assert c.canonical is not None
        tally[c.canonical] = tally.get(c.canonical, 0) + 1
        first_seen.setdefault(c.canonical, c)
    best_form = max(
        tally,
        key=lambda form: (tally[form], -first_seen[form].sample_index),
    )
    return tally, first_seen[best_form]


def plan_query(
    query: str,
    kb: KnowledgeBaseDoc,
    backend: Backend,
    k: int = 3,
    n_samples: int = 3,
    parallelism: int = 3,
    constraints: ConstraintSet | None = None,
    temperature: float = 0.7,
) -> PlanDecision:
    """Prompt, sample n plans, vote, and return the decision.

    Raises PlanningFailure when every candidate is invalid and propagates
    gateway errors unchanged.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    examples = select_examples(kb.examples, k)
    request: ChatRequest = render_planner_prompt(
        kb, examples, query, constraints=constraints,
        temperature=temperature if n_samples > 1 else 0.0,
    )
    responses = complete_n(request, n_samples, parallelism, backend)
    candidates = [
        _evaluate_candidate(i, resp.text, kb.schema)
        for i, resp in enumerate(responses)
    ]
    tally, winner = tally_and_choose(candidates)
    assert winner.plan is not None and winner.canonical is not None
    return PlanDecision(
        candidates=tuple(candidates),
        tally=tally,
        chosen=winner.plan,
        chosen_votes=tally[winner.canonical],
        n_samples=n_samples,
    )


def plan_query_single(
    query: str,
    kb: KnowledgeBaseDoc,
    backend: Backend,
    k: int = 3,
    constraints: ConstraintSet | None = None,
) -> PlanDecision:
    """Single-shot planning: plan_query with n_samples = 1."""
    return plan_query(
        query, kb, backend, k=k, n_samples=1, parallelism=1, constraints=constraints
    )
