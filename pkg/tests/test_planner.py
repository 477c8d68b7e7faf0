from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relgate.gateway import Fixture, ScriptedBackend
from relgate.plan import plan_to_wire_text, validate_plan
from relgate.planner import (
    PlanCandidate,
    PlanExtractionError,
    PlanningFailure,
    extract_plan_document,
    plan_query,
    plan_query_single,
    tally_and_choose,
)

QUERY = "Which tests failed for release candidate RC3?"

PLAN_A = json.dumps({"steps": [{
    "kind": "slice", "select": ["test_case_function"],
    "where": {"col": "release_candidate", "op": "eq", "value": "RC3"},
}]})
PLAN_A_SHUFFLED = json.dumps({"steps": [{
    "where": {"col": "RELEASE_CANDIDATE", "op": "eq", "value": "RC3"},
    "select": ["test_case_function"],
    "kind": "slice",
}]})
PLAN_B = json.dumps({"steps": [{
    "kind": "slice", "select": ["test_case_function"],
    "where": {"col": "release_candidate", "op": "eq", "value": "RC4"},
}]})
PLAN_C = json.dumps({"steps": [{"kind": "limit", "n": 9}]})


def fenced(doc: str) -> str:
    return f"Reasoning about the data.\n```json\n{doc}\n```"


def backend_with(*responses: str) -> ScriptedBackend:
    return ScriptedBackend(tuple(
        Fixture(match="release candidate", response=r) for r in responses
    ))


class TestExtraction:
    def test_last_fenced_block_wins(self):
        raw = f"```json\n{PLAN_B}\n```\nBut actually:\n```json\n{PLAN_A}\n```"
        assert extract_plan_document(raw) == PLAN_A

    def test_prose_then_block(self):
        assert extract_plan_document(fenced(PLAN_A)) == PLAN_A

    def test_balanced_brace_fallback(self):
        raw = f"The plan is {PLAN_A} as emitted."
        assert extract_plan_document(raw) == PLAN_A

    def test_pure_prose_fails(self):
        with pytest.raises(PlanExtractionError):
            extract_plan_document("no plan to be found here")

    def test_largest_brace_span_chosen(self):
        raw = f"small {{}} then {PLAN_A}"
        assert extract_plan_document(raw) == PLAN_A


class TestVoting:
    def test_two_one_majority(self, small_kb):
        backend = backend_with(fenced(PLAN_A), fenced(PLAN_A_SHUFFLED),
                               fenced(PLAN_B))
        decision = plan_query(QUERY, small_kb, backend, k=0, n_samples=3)
        assert decision.chosen_votes == 2
        assert decision.n_samples == 3
        # the shuffled A counted toward the same canonical form
        assert len(decision.tally) == 2
        assert "RC3" in plan_to_wire_text(decision.chosen)

    def test_all_distinct_tie_breaks_to_lowest_index(self, small_kb):
        backend = backend_with(fenced(PLAN_A), fenced(PLAN_B), fenced(PLAN_C))
        decision = plan_query(QUERY, small_kb, backend, k=0, n_samples=3)
        assert decision.chosen_votes == 1
        assert "RC3" in plan_to_wire_text(decision.chosen)

    def test_all_invalid_is_planning_failure(self, small_kb):
        backend = backend_with("garbage", "more garbage", "still garbage")
        with pytest.raises(PlanningFailure) as err:
            plan_query(QUERY, small_kb, backend, k=0, n_samples=3)
        assert len(err.value.candidates) == 3
        assert all(c.error for c in err.value.candidates)

    def test_invalid_minority_ignored(self, small_kb):
        backend = backend_with("garbage", fenced(PLAN_B), fenced(PLAN_B))
        decision = plan_query(QUERY, small_kb, backend, k=0, n_samples=3)
        assert decision.chosen_votes == 2
        assert sum(decision.tally.values()) == 2

    def test_chosen_always_validates(self, small_kb):
        backend = backend_with(fenced(PLAN_C), fenced(PLAN_C), "junk")
        decision = plan_query(QUERY, small_kb, backend, k=0, n_samples=3)
        assert validate_plan(decision.chosen, small_kb.schema) == []

    def test_deterministic_serialization(self, small_kb):
        decisions = []
        for _ in range(2):
            backend = backend_with(fenced(PLAN_A), fenced(PLAN_B), fenced(PLAN_A))
            decisions.append(
                plan_query(QUERY, small_kb, backend, k=0, n_samples=3).to_dict()
            )
        assert json.dumps(decisions[0], sort_keys=True) == \
            json.dumps(decisions[1], sort_keys=True)

    def test_single_equals_n1(self, small_kb):
        d1 = plan_query_single(QUERY, small_kb,
                               backend_with(fenced(PLAN_A)), k=0)
        d2 = plan_query(QUERY, small_kb, backend_with(fenced(PLAN_A)),
                        k=0, n_samples=1)
        assert d1.to_dict() == d2.to_dict()
        assert len(d1.tally) == 1

    def test_single_invalid_fails(self, small_kb):
        with pytest.raises(PlanningFailure):
            plan_query_single(QUERY, small_kb, backend_with("junk"), k=0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_vote_invariance_under_permutation(seed):
    rng = random.Random(seed)
    forms = [rng.choice("XYZ") for _ in range(rng.randint(1, 7))]
    counts = {f: forms.count(f) for f in set(forms)}
    top = max(counts.values())
    leaders = [f for f, c in counts.items() if c == top]
    candidates = [
        PlanCandidate(sample_index=i, raw_response=f, plan=object(),  # type: ignore
                      canonical=f)
        for i, f in enumerate(forms)
    ]
    _, winner = tally_and_choose(list(candidates))
    if len(leaders) == 1:
        shuffled = list(candidates)
        rng.shuffle(shuffled)
        _, winner2 = tally_and_choose(shuffled)
        assert winner2.canonical == winner.canonical == leaders[0]
    else:
        # tie: lowest first-occurrence sample index among tied forms
        first = {f: min(c.sample_index for c in candidates if c.canonical == f)
                 for f in leaders}
        assert winner.canonical == min(leaders, key=lambda f: first[f])
