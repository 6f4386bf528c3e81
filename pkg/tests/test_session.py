import pytest

from conceptviz.codegen import OfflineBackend
from conceptviz.session import (
    EncodingRequest,
    ExampleMismatch,
    NeedsExampleRelation,
    Ready,
    Session,
    SessionError,
    StaleCandidate,
)
from conceptviz.synthesis import ExampleRelation

from .conftest import make_t0


def seeded_session():
    s = Session("s1")
    concepts = s.upload_table(make_t0())
    return s, {c.name: c for c in concepts}


def pivot_ready_session():
    """Session after the pivot save: current table (Date, Seattle Temp,
    Atlanta Temp)."""
    s, by_name = seeded_session()
    seattle = s.create_custom_concept("Seattle Temp", [51, 45])
    atlanta = s.create_custom_concept("Atlanta Temp", [45, 47, 56, 41])
    encodings = [EncodingRequest("x", seattle.id),
                 EncodingRequest("y", atlanta.id)]
    outcome = s.formulate("scatter", encodings)
    example = ExampleRelation(outcome.columns, ((51, 45), (45, 47)))
    ready = s.complete_formulate(outcome.pending, example)
    s.save_chart(ready.candidates[0])
    return s, seattle, atlanta


class TestFormulateKnown:
    def test_ready_single_candidate(self):
        s, c = seeded_session()
        outcome = s.formulate("scatter", [
            EncodingRequest("x", c["Date"].id),
            EncodingRequest("y", c["Temperature"].id),
            EncodingRequest("color", c["City"].id)])
        assert isinstance(outcome, Ready)
        [cand] = outcome.candidates
        assert cand.spec["mark"] == "circle"
        assert cand.spec["encoding"]["x"] == {"field": "Date",
                                              "type": "temporal"}
        assert cand.spec["encoding"]["color"] == {"field": "City"}
        assert cand.provenance.reshape_program == "none"


class TestFormulateUnknown:
    def test_needs_example_with_prefill(self):
        s, _ = seeded_session()
        seattle = s.create_custom_concept("Seattle Temp", [51, 45])
        atlanta = s.create_custom_concept("Atlanta Temp", [45, 47, 56, 41])
        outcome = s.formulate("scatter", [
            EncodingRequest("x", seattle.id),
            EncodingRequest("y", atlanta.id)])
        assert isinstance(outcome, NeedsExampleRelation)
        assert outcome.columns == ("Seattle Temp", "Atlanta Temp")
        # Atlanta Temp has the most examples: its first two prefill
        assert outcome.prefilled_rows == ((None, 45), (None, 47))

    def test_complete_produces_pivot_candidate(self):
        s, _ = seeded_session()
        seattle = s.create_custom_concept("Seattle Temp", [51, 45])
        atlanta = s.create_custom_concept("Atlanta Temp", [45, 47, 56, 41])
        outcome = s.formulate("scatter", [
            EncodingRequest("x", seattle.id),
            EncodingRequest("y", atlanta.id)])
        example = ExampleRelation(outcome.columns, ((51, 45), (45, 47)))
        ready = s.complete_formulate(outcome.pending, example)
        top = ready.candidates[0]
        assert top.provenance.reshape_program == \
            '(pivot_wider (input) name_col="City" value_col="Temperature")'
        assert set(top.table.column_names) == {"Date", "Seattle Temp",
                                               "Atlanta Temp"}
        assert top.spec["encoding"] == {
            "x": {"field": "Seattle Temp", "type": "quantitative"},
            "y": {"field": "Atlanta Temp", "type": "quantitative"}}

    def test_example_column_mismatch(self):
        s, _ = seeded_session()
        seattle = s.create_custom_concept("Seattle Temp", [51, 45])
        atlanta = s.create_custom_concept("Atlanta Temp", [45, 47])
        outcome = s.formulate("scatter", [
            EncodingRequest("x", seattle.id),
            EncodingRequest("y", atlanta.id)])
        bad = ExampleRelation(("Atlanta Temp", "Seattle Temp"),
                              ((45, 51), (47, 45)))
        with pytest.raises(ExampleMismatch):
            s.complete_formulate(outcome.pending, bad)


class TestSaveChart:
    def test_save_resolves_concepts(self):
        s, seattle, atlanta = pivot_ready_session()
        assert seattle.known and atlanta.known
        assert seattle.resolution.column == "Seattle Temp"
        assert s.current_table.column_names == ["Date", "Seattle Temp",
                                                "Atlanta Temp"]
        assert len(s.saved_charts) == 1

    def test_reformulate_after_save_is_ready(self):
        s, seattle, atlanta = pivot_ready_session()
        outcome = s.formulate("scatter", [
            EncodingRequest("x", seattle.id),
            EncodingRequest("y", atlanta.id)])
        assert isinstance(outcome, Ready)

    def test_double_save_is_stale(self):
        s, _ = seeded_session()
        seattle = s.create_custom_concept("Seattle Temp", [51, 45])
        atlanta = s.create_custom_concept("Atlanta Temp", [45, 47])
        outcome = s.formulate("scatter", [
            EncodingRequest("x", seattle.id),
            EncodingRequest("y", atlanta.id)])
        example = ExampleRelation(outcome.columns, ((51, 45), (45, 47)))
        ready = s.complete_formulate(outcome.pending, example)
        s.save_chart(ready.candidates[0])
        with pytest.raises(StaleCandidate):
            s.save_chart(ready.candidates[0])

    def test_mutation_invalidates_pending(self):
        s, _ = seeded_session()
        seattle = s.create_custom_concept("Seattle Temp", [51, 45])
        atlanta = s.create_custom_concept("Atlanta Temp", [45, 47])
        outcome = s.formulate("scatter", [
            EncodingRequest("x", seattle.id),
            EncodingRequest("y", atlanta.id)])
        s.create_custom_concept("Other", [1])
        example = ExampleRelation(outcome.columns, ((51, 45), (45, 47)))
        with pytest.raises(StaleCandidate):
            s.complete_formulate(outcome.pending, example)


class TestDerivedPipeline:
    def test_derive_preview_and_commit(self):
        s, seattle, atlanta = pivot_ready_session()
        candidates = s.derive_preview(
            [seattle.id, atlanta.id],
            "calculate seattle atlanta temp diff", OfflineBackend())
        assert len(candidates) == 2
        diff = s.create_derived_concept(
            "Difference", [seattle.id, atlanta.id],
            "calculate seattle atlanta temp diff",
            candidates[0].source_text)
        assert diff.known
        assert s.current_table.column_values("Difference") == [6, -2, -8]

    def test_bar_chart_with_derived_concepts(self):
        s, seattle, atlanta = pivot_ready_session()
        diff_cands = s.derive_preview(
            [seattle.id, atlanta.id],
            "calculate seattle atlanta temp diff", OfflineBackend())
        diff = s.create_derived_concept(
            "Difference", [seattle.id, atlanta.id], "temp diff",
            diff_cands[0].source_text)
        warm_cands = s.derive_preview(
            [seattle.id, atlanta.id],
            "check which city is warmer", OfflineBackend())
        warmer = s.create_derived_concept(
            "Warmer", [seattle.id, atlanta.id], "which city is warmer",
            warm_cands[0].source_text)
        date = s.shelf.by_name("Date")
        outcome = s.formulate("bar", [
            EncodingRequest("x", date.id),
            EncodingRequest("y", diff.id),
            EncodingRequest("color", warmer.id)])
        assert isinstance(outcome, Ready)
        [cand] = outcome.candidates
        assert "Difference" in cand.table.column_names
        assert "Warmer" in cand.table.column_names
        assert cand.spec["encoding"]["y"]["field"] == "Difference"

    def test_reshape_then_derive_order(self):
        s, _ = seeded_session()
        seattle = s.create_custom_concept("Seattle Temp", [51, 45])
        atlanta = s.create_custom_concept("Atlanta Temp", [45, 47])
        diff = s.create_derived_concept(
            "Difference", [seattle.id, atlanta.id], "temp diff",
            "fn(a, b) = a - b")
        assert not diff.known  # sources unknown, no table change yet
        # a derived concept carries no example values, so elicitation
        # cannot prefill from it
        from conceptviz.session import NoUnknownExamples
        with pytest.raises(NoUnknownExamples):
            s.formulate("bar", [
                EncodingRequest("x", s.shelf.by_name("Date").id),
                EncodingRequest("y", diff.id)])


class TestReplay:
    def full_script_session(self):
        s, _ = seeded_session()
        seattle = s.create_custom_concept("Seattle Temp", [51, 45])
        atlanta = s.create_custom_concept("Atlanta Temp", [45, 47, 56, 41])
        s.formulate_and_save(
            "scatter",
            [EncodingRequest("x", seattle.id),
             EncodingRequest("y", atlanta.id)],
            example_rows=((51, 45), (45, 47)))
        diff_cands = s.derive_preview(
            [seattle.id, atlanta.id],
            "calculate seattle atlanta temp diff", OfflineBackend())
        s.create_derived_concept(
            "Difference", [seattle.id, atlanta.id], "temp diff",
            diff_cands[0].source_text)
        return s

    def test_replay_reproduces_state(self):
        s = self.full_script_session()
        replayed = Session.replay(s.id, s.audit_log)
        assert replayed.to_dict() == s.to_dict()

    def test_serialization_roundtrip(self):
        import json

        s = self.full_script_session()
        restored = Session.from_dict(json.loads(json.dumps(s.to_dict())))
        assert restored.to_dict() == s.to_dict()
        assert restored.current_table.equals_canonically(s.current_table)
