"""Entropy-index harness tests: the statistics, screening, aggregation,
and file ingestion."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from retrogen.errors import ContractViolation, IngestionError
from retrogen.evals.entropy import (
    EntropyReport,
    ResponseRecord,
    ResponseSet,
    ScreeningRules,
    StoryInfo,
    aggregate,
    binary_entropy,
    detect_pattern,
    kl_to_uniform,
    load_responses_csv,
    load_stories_manifest,
    question_entropy,
    screen,
)

# frozen from a high-precision evaluation of the closed form
H_6_4 = 0.9709505944546686


class TestQuestionEntropy:
    def test_unanimous_zero(self):
        assert question_entropy(10, 0) == 0.0
        assert question_entropy(0, 7) == 0.0

    def test_split_one(self):
        assert question_entropy(5, 5) == 1.0

    def test_six_four(self):
        assert question_entropy(6, 4) == pytest.approx(H_6_4, abs=1e-6)

    def test_zero_total_rejected(self):
        with pytest.raises(ContractViolation):
            question_entropy(0, 0)

    @given(st.integers(0, 200), st.integers(0, 200))
    @settings(max_examples=200)
    def test_range_and_symmetry(self, t, f):
        if t + f == 0:
            return
        h = question_entropy(t, f)
        assert 0.0 <= h <= 1.0
        assert h == pytest.approx(question_entropy(f, t), abs=1e-12)


class TestKlToUniform:
    def test_fair_coin_zero(self):
        assert kl_to_uniform(0.5) == 0.0

    def test_certainty_one_bit(self):
        assert kl_to_uniform(1.0) == 1.0
        assert kl_to_uniform(0.0) == 1.0

    def test_point_six(self):
        assert kl_to_uniform(0.6) == pytest.approx(1.0 - H_6_4, abs=1e-9)

    @given(st.floats(0.0, 1.0, allow_nan=False))
    @settings(max_examples=300)
    def test_identity_with_entropy(self, p):
        # asserted, not assumed: H(p) + KL(p||U) = 1 bit
        assert binary_entropy(p) + kl_to_uniform(p) == pytest.approx(1.0, abs=1e-12)

    def test_identity_on_grid(self):
        for i in range(100_001):
            p = i / 100_000
            assert abs(binary_entropy(p) + kl_to_uniform(p) - 1.0) <= 1e-12


def _stories(n_stories=3, per_story=3, system="sysA", prefix="s"):
    stories = {}
    for i in range(n_stories):
        sid = f"{prefix}{i}"
        stories[sid] = StoryInfo(sid, system, tuple(f"{sid}q{j}" for j in range(per_story)))
    return stories


def _record(pid, sid, qid, answer, at):
    return ResponseRecord(pid, sid, qid, answer, at)


class TestResponseSet:
    def test_duplicate_rejected(self):
        stories = _stories(1, 1)
        records = (_record("p", "s0", "s0q0", "T", 0), _record("p", "s0", "s0q0", "F", 1))
        with pytest.raises(ContractViolation):
            ResponseSet(records, stories)

    def test_foreign_question_rejected(self):
        stories = _stories(2, 1)
        with pytest.raises(ContractViolation):
            ResponseSet((_record("p", "s0", "s1q0", "T", 0),), stories)


def _screen_fixture(participant_answers, screener_answers=None):
    """One screener story (3 questions) + two payload stories (7 each)."""
    stories = dict(_stories(2, 7, system="sysA", prefix="s"))
    stories["screener"] = StoryInfo("screener", "screener", ("scrq0", "scrq1", "scrq2"))
    key = {"scrq0": "T", "scrq1": "F", "scrq2": "T"}
    rules = ScreeningRules("screener", key, min_correct=3)
    records = []
    for pid, answers in participant_answers.items():
        scr = (screener_answers or {}).get(pid, ["T", "F", "T"])
        for i, a in enumerate(scr):
            records.append(_record(pid, "screener", f"scrq{i}", a, i))
        for i, a in enumerate(answers):
            sid = "s0" if i < 7 else "s1"
            records.append(_record(pid, sid, f"{sid}q{i % 7}", a, 3 + i))
    return ResponseSet(tuple(records), stories), rules


class TestScreening:
    def test_constant_participant_eliminated(self):
        responses, rules = _screen_fixture({"allT": ["T"] * 14})
        kept, eliminated = screen(responses, rules)
        assert ("allT", "pattern:constant") in eliminated
        assert kept.records == ()

    def test_alternating_eliminated(self):
        answers = ["T", "F"] * 7
        responses, rules = _screen_fixture({"alt": answers})
        _, eliminated = screen(responses, rules)
        assert ("alt", "pattern:alternating") in eliminated

    def test_alternating_21_answers(self):
        vector = ["T" if i % 2 == 0 else "F" for i in range(21)]
        assert detect_pattern(vector, 3) == "alternating"

    def test_period_three_eliminated(self):
        answers = (["T", "T", "F"] * 5)[:14]
        responses, rules = _screen_fixture({"p3": answers})
        _, eliminated = screen(responses, rules)
        assert ("p3", "pattern:period-3") in eliminated

    def test_mixed_passing_participant_kept(self):
        answers = list("TTFTFFTFTTFFTF")
        responses, rules = _screen_fixture({"good": answers})
        kept, eliminated = screen(responses, rules)
        assert eliminated == []
        assert {r.participant_id for r in kept.records} == {"good"}

    def test_failed_screener_eliminated(self):
        answers = list("TTFTFFTFTTFFTF")
        responses, rules = _screen_fixture({"bad": answers}, screener_answers={"bad": ["F", "T", "F"]})
        _, eliminated = screen(responses, rules)
        assert eliminated == [("bad", "screener:0/3")]

    def test_missing_screener_is_incomplete(self):
        stories = dict(_stories(1, 7))
        stories["screener"] = StoryInfo("screener", "screener", ("scrq0",))
        records = tuple(_record("p", "s0", f"s0q{i}", a, i) for i, a in enumerate("TTFTFFT"))
        responses = ResponseSet(records, stories)
        rules = ScreeningRules("screener", {"scrq0": "T"}, min_correct=1)
        _, eliminated = screen(responses, rules)
        assert eliminated == [("p", "incomplete")]

    def test_idempotent(self):
        responses, rules = _screen_fixture({
            "good": list("TTFTFFTFTTFFTF"),
            "allT": ["T"] * 14,
            "alt": ["T", "F"] * 7,
        })
        once, elim1 = screen(responses, rules)
        twice, elim2 = screen(once, rules)
        assert once.records == twice.records
        assert elim2 == []

    def test_min_correct_bound(self):
        with pytest.raises(ContractViolation):
            ScreeningRules("s", {"q": "T"}, min_correct=2)


class TestAggregate:
    def _responses(self, per_question_counts, system="sysA"):
        """per_question_counts: {story: [(t, f), ...]}"""
        stories = {}
        records = []
        for sid, counts in per_question_counts.items():
            stories[sid] = StoryInfo(sid, system, tuple(f"{sid}q{i}" for i in range(len(counts))))
            for qi, (t, f) in enumerate(counts):
                for p in range(t):
                    records.append(_record(f"pT{p}", sid, f"{sid}q{qi}", "T", qi))
                for p in range(f):
                    records.append(_record(f"pF{p}", sid, f"{sid}q{qi}", "F", qi))
        return ResponseSet(tuple(records), stories)

    def test_story_index_mean(self):
        responses = self._responses({"s0": [(10, 0), (5, 5)]})
        report = aggregate(responses)
        assert report.story_indices["s0"] == pytest.approx(0.5, abs=1e-12)

    def test_single_story_system_index(self):
        responses = self._responses({"s0": [(6, 4)]})
        report = aggregate(responses)
        assert report.system_indices["sysA"] == report.story_indices["s0"]

    def test_system_median(self):
        responses = self._responses({"a": [(5, 5)], "b": [(10, 0)], "c": [(6, 4)]})
        report = aggregate(responses)
        assert report.system_indices["sysA"] == pytest.approx(H_6_4, abs=1e-9)

    def test_system_index_within_story_range(self):
        responses = self._responses({"a": [(5, 5)], "b": [(9, 1)], "c": [(7, 3)], "d": [(10, 0)]})
        report = aggregate(responses)
        idx = report.system_indices["sysA"]
        assert min(report.story_indices.values()) <= idx <= max(report.story_indices.values())

    def test_empty_story_excluded_with_warning(self):
        responses = self._responses({"s0": [(3, 1)]})
        stories = dict(responses.stories)
        stories["ghost"] = StoryInfo("ghost", "sysA", ("ghostq0",))
        responses = ResponseSet(responses.records, stories)
        report = aggregate(responses)
        assert "ghost" not in report.story_indices
        assert any("ghost" in w for w in report.warnings)

    def test_record_order_invariance(self):
        responses = self._responses({"a": [(4, 2), (1, 5)], "b": [(3, 3)]})
        shuffled = ResponseSet(tuple(reversed(responses.records)), dict(responses.stories))
        assert aggregate(responses).story_indices == aggregate(shuffled).story_indices


class TestIngestion:
    def test_round_trip(self, tmp_path):
        stories_path = tmp_path / "stories.json"
        stories_path.write_text(
            '{"s0": {"system_id": "sysA", "questions": ["q0", "q1"]}}', encoding="utf-8"
        )
        csv_path = tmp_path / "responses.csv"
        csv_path.write_text(
            "participant_id,story_id,question_id,answer,presented_at\n"
            "p1,s0,q0,T,0\np1,s0,q1,F,1\n",
            encoding="utf-8",
        )
        stories = load_stories_manifest(stories_path)
        responses = load_responses_csv(csv_path, stories)
        assert len(responses.records) == 2

    def test_bad_rows_reported_with_line_numbers(self, tmp_path):
        stories_path = tmp_path / "stories.json"
        stories_path.write_text('{"s0": {"system_id": "a", "questions": ["q0"]}}', encoding="utf-8")
        csv_path = tmp_path / "responses.csv"
        csv_path.write_text(
            "participant_id,story_id,question_id,answer,presented_at\n"
            "p1,s0,q0,X,0\n"
            "p1,nope,q0,T,1\n"
            "p1,s0,q9,T,2\n",
            encoding="utf-8",
        )
        stories = load_stories_manifest(stories_path)
        with pytest.raises(IngestionError) as e:
            load_responses_csv(csv_path, stories)
        assert [row[0] for row in e.value.rows] == [2, 3, 4]
