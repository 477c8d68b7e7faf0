from __future__ import annotations

import pytest

from relgate.kb import (
    ConstraintSet,
    KbError,
    dump_kb,
    load_kb,
    render_actor_prompt,
    render_planner_prompt,
    select_examples,
    validate_kb,
)
from relgate.plan import parse_plan, plan_to_wire_text


class TestLoadDump:
    def test_round_trip(self, small_kb, tmp_path):
        text = dump_kb(small_kb)
        again = load_kb(text)
        assert again.schema == small_kb.schema
        assert again.field_notes == small_kb.field_notes
        assert len(again.examples) == len(small_kb.examples)
        assert [e.plan for e in again.examples] == [e.plan for e in small_kb.examples]
        path = tmp_path / "kb.yaml"
        path.write_text(text, encoding="utf-8")
        assert load_kb(path).schema == small_kb.schema

    def test_forty_field_notes(self, small_kb):
        assert len(small_kb.field_notes) == 40

    def test_missing_note_names_field(self, small_kb):
        from dataclasses import replace

        notes = dict(small_kb.field_notes)
        del notes["release_candidate"]
        broken = replace(small_kb, field_notes=notes)
        with pytest.raises(KbError, match="release_candidate"):
            validate_kb(broken)
        with pytest.raises(KbError, match="release_candidate"):
            load_kb(dump_kb(broken))

    def test_states_mismatch_detected(self, small_kb):
        notes = dict(small_kb.field_notes)
        notes["test_status"] = "Outcome. Admissible values: passed, failed."
        from dataclasses import replace

        broken = replace(small_kb, field_notes=notes)
        with pytest.raises(KbError, match="N/A"):
            validate_kb(broken)

    def test_malformed_file(self):
        with pytest.raises(KbError):
            load_kb("schema: [\nnot yaml")

    def test_example_plans_round_trip_wire(self, small_kb):
        for ex in small_kb.examples:
            again = parse_plan(plan_to_wire_text(ex.plan), small_kb.schema)
            assert again == ex.plan


class TestConstraints:
    def test_defaults_include_required_rules(self):
        cs = ConstraintSet()
        joined = " ".join(cs.texts)
        assert "N/A" in joined

    def test_missing_nonbinary_rule_rejected(self):
        with pytest.raises(KbError, match="non-binary"):
            ConstraintSet(("only filter before sort",))

    def test_missing_filter_first_rule_rejected(self):
        with pytest.raises(KbError, match="filter"):
            ConstraintSet(("mind the 'N/A' status",))


class TestSelectExamples:
    def test_zero(self, small_kb):
        assert select_examples(small_kb.examples, 0) == []

    def test_first_k_in_order(self, small_kb):
        out = select_examples(small_kb.examples, 3)
        assert [e.query for e in out] == [e.query for e in small_kb.examples[:3]]
        assert out == select_examples(small_kb.examples, 3)

    def test_k_too_large(self, small_kb):
        with pytest.raises(ValueError, match="exceeds"):
            select_examples(small_kb.examples, 99)


class TestPlannerPrompt:
    def test_deterministic(self, small_kb):
        a = render_planner_prompt(small_kb, [], "q?")
        b = render_planner_prompt(small_kb, [], "q?")
        assert a == b

    def test_zero_shot_has_actions_and_constraints_but_no_examples(self, small_kb):
        prompt = render_planner_prompt(small_kb, [], "q?").system_prompt
        assert "Slicing" in prompt and "Operation" in prompt
        assert "## Constraints" in prompt
        assert "Worked example" not in prompt

    def test_three_shot_has_three_fenced_plans(self, small_kb):
        examples = select_examples(small_kb.examples, 3)
        prompt = render_planner_prompt(small_kb, examples, "q?").system_prompt
        assert prompt.count("Worked example") == 3
        assert prompt.count("```json") >= 4  # wire spec block + 3 examples

    def test_mentions_na_status_warning(self, small_kb):
        prompt = render_planner_prompt(small_kb, [], "q?").system_prompt
        assert "'N/A'" in prompt

    def test_field_states_documented(self, small_kb):
        prompt = render_planner_prompt(small_kb, [], "q?").system_prompt
        assert "passed, failed, N/A, blocked" in prompt

    def test_query_is_user_message(self, small_kb):
        request = render_planner_prompt(small_kb, [], "the question")
        assert request.messages == (("user", "the question"),)


class TestActorPrompt:
    def test_first_attempt_has_no_memory_section(self, small_kb):
        prompt = render_actor_prompt(small_kb, "Count rows.").system_prompt
        assert "Previous attempts" not in prompt

    def test_retry_includes_prior_document_and_error(self, small_kb):
        memory = ("Attempt 0 (step 1): emitted:\n{bad doc}\n"
                  "error: unknown column 'relese_candidate'")
        prompt = render_actor_prompt(small_kb, "Count rows.", memory).system_prompt
        assert "{bad doc}" in prompt
        assert "relese_candidate" in prompt

    def test_temperature_zero(self, small_kb):
        assert render_actor_prompt(small_kb, "Count rows.").temperature == 0.0

    def test_states_fields_listed(self, small_kb):
        prompt = render_actor_prompt(small_kb, "x").system_prompt
        assert "passed, failed, N/A, blocked" in prompt
