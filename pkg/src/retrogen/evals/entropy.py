"""Agreement-entropy harness: response ingestion, participant screening,
and the binary entropy / KL-to-uniform statistics.

Entropy is measured in bits (the reference distribution is a fair coin,
so 1 bit is the maximum). A story's index is the mean of its question
entropies; a system's index is the median of its story indices. Lower
means readers agreed more, i.e. the story was more coherent.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from ..errors import ContractViolation, IngestionError

ANSWERS = ("T", "F")


@dataclass(frozen=True)
class ResponseRecord:
    participant_id: str
    story_id: str
    question_id: str
    answer: str
    presented_at: int

    def __post_init__(self):
        if self.answer not in ANSWERS:
            raise ContractViolation(f"answer must be T or F, got {self.answer!r}")


@dataclass(frozen=True)
class StoryInfo:
    story_id: str
    system_id: str
    question_ids: tuple[str, ...]


@dataclass(frozen=True)
class ResponseSet:
    records: tuple[ResponseRecord, ...]
    stories: Mapping[str, StoryInfo]

    def __post_init__(self):
        seen: set[tuple[str, str, str]] = set()
        for r in self.records:
            key = (r.participant_id, r.story_id, r.question_id)
            if key in seen:
                raise ContractViolation(f"duplicate response for {key}")
            seen.add(key)
            story = self.stories.get(r.story_id)
            if story is None:
                raise ContractViolation(f"record references unknown story {r.story_id!r}")
            if r.question_id not in story.question_ids:
                raise ContractViolation(
                    f"question {r.question_id!r} does not belong to story {r.story_id!r}"
                )

    def participants(self) -> list[str]:
        return sorted({r.participant_id for r in self.records})


def load_stories_manifest(path: str | Path) -> dict[str, StoryInfo]:
    data = json.loads(Path(path).read_text("utf-8"))
    stories = {}
    for story_id, info in data.items():
        stories[story_id] = StoryInfo(
            story_id=story_id,
            system_id=info["system_id"],
            question_ids=tuple(info["questions"]),
        )
    return stories


def load_responses_csv(path: str | Path, stories: Mapping[str, StoryInfo]) -> ResponseSet:
    """Responses CSV: participant_id,story_id,question_id,answer,presented_at."""
    bad: list[tuple[int, str]] = []
    records: list[ResponseRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"participant_id", "story_id", "question_id", "answer", "presented_at"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise IngestionError(f"responses file must have columns {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            answer = (row["answer"] or "").strip()
            if answer not in ANSWERS:
                bad.append((lineno, f"answer must be T or F, got {answer!r}"))
                continue
            try:
                presented = int(row["presented_at"])
            except (TypeError, ValueError):
                bad.append((lineno, "presented_at must be an integer"))
                continue
            story_id = row["story_id"].strip()
            question_id = row["question_id"].strip()
            story = stories.get(story_id)
            if story is None:
                bad.append((lineno, f"unknown story {story_id!r}"))
                continue
            if question_id not in story.question_ids:
                bad.append((lineno, f"question {question_id!r} not in story {story_id!r}"))
                continue
            records.append(ResponseRecord(
                participant_id=row["participant_id"].strip(),
                story_id=story_id,
                question_id=question_id,
                answer=answer,
                presented_at=presented,
            ))
    if bad:
        raise IngestionError(f"{len(bad)} bad response rows", rows=bad)
    return ResponseSet(tuple(records), dict(stories))


# -- screening ----------------------------------------------------------


@dataclass(frozen=True)
class ScreeningRules:
    """Participant screening: a screener story with expected answers, and
    detectors for visually obvious repeating answer patterns (period 1 =
    all-same, period 2 = alternating, up to max_pattern_period)."""

    screener_story_id: str
    screener_key: Mapping[str, str]
    min_correct: int
    max_pattern_period: int = 3

    def __post_init__(self):
        if self.min_correct > len(self.screener_key):
            raise ContractViolation("min_correct cannot exceed the screener key size")
        if not 0 <= self.max_pattern_period <= 3:
            raise ContractViolation("max_pattern_period must be within [0, 3]")


_PATTERN_NAMES = {1: "constant", 2: "alternating", 3: "period-3"}


def detect_pattern(answers: list[str], max_period: int) -> str | None:
    """Name of the repeating pattern covering the whole vector, if any."""
    for p in range(1, max_period + 1):
        if len(answers) >= 2 * p and all(answers[i] == answers[i - p] for i in range(p, len(answers))):
            return _PATTERN_NAMES[p]
    return None


def screen(responses: ResponseSet, rules: ScreeningRules) -> tuple[ResponseSet, list[tuple[str, str]]]:
    """Drop participants that fail the screener story or answer in a
    repeating pattern. Eliminated participants lose every record,
    screener records included. Idempotent."""
    eliminations: list[tuple[str, str]] = []
    kept_participants: list[str] = []
    by_participant: dict[str, list[ResponseRecord]] = {}
    for r in responses.records:
        by_participant.setdefault(r.participant_id, []).append(r)
    for pid in sorted(by_participant):
        recs = by_participant[pid]
        screener = {r.question_id: r.answer for r in recs if r.story_id == rules.screener_story_id}
        missing = [q for q in rules.screener_key if q not in screener]
        if missing:
            eliminations.append((pid, "incomplete"))
            continue
        correct = sum(1 for q, expected in rules.screener_key.items() if screener[q] == expected)
        if correct < rules.min_correct:
            eliminations.append((pid, f"screener:{correct}/{len(rules.screener_key)}"))
            continue
        ordered = sorted(
            (r for r in recs if r.story_id != rules.screener_story_id),
            key=lambda r: (r.presented_at, r.story_id, r.question_id),
        )
        pattern = detect_pattern([r.answer for r in ordered], rules.max_pattern_period)
        if pattern is not None:
            eliminations.append((pid, f"pattern:{pattern}"))
            continue
        kept_participants.append(pid)
    kept_set = set(kept_participants)
    kept_records = tuple(r for r in responses.records if r.participant_id in kept_set)
    return ResponseSet(kept_records, dict(responses.stories)), eliminations


# -- entropy statistics ---------------------------------------------------


def binary_entropy(p: float) -> float:
    """Shannon entropy of a (p, 1-p) coin, in bits; 0*log0 == 0."""
    if not 0.0 <= p <= 1.0:
        raise ContractViolation("p must be within [0, 1]")
    h = 0.0
    if p > 0.0:
        h -= p * math.log2(p)
    if p < 1.0:
        h -= (1.0 - p) * math.log2(1.0 - p)
    return h


def question_entropy(t_count: int, f_count: int) -> float:
    """Agreement entropy of one question's T/F tallies."""
    if t_count < 0 or f_count < 0:
        raise ContractViolation("counts must be non-negative")
    total = t_count + f_count
    if total < 1:
        raise ContractViolation("a question needs at least one answer")
    return binary_entropy(t_count / total)


def kl_to_uniform(p: float) -> float:
    """KL((p, 1-p) || fair coin) in bits, computed directly from the
    definition; equals 1 - binary_entropy(p), which the tests assert
    rather than assume."""
    if not 0.0 <= p <= 1.0:
        raise ContractViolation("p must be within [0, 1]")
    kl = 0.0
    if p > 0.0:
        kl += p * math.log2(2.0 * p)
    if p < 1.0:
        kl += (1.0 - p) * math.log2(2.0 * (1.0 - p))
    return kl


@dataclass
class EntropyReport:
    question_entropies: dict[str, dict[str, float]]  # story_id -> question_id -> bits
    story_indices: dict[str, float]
    system_indices: dict[str, float]
    story_systems: dict[str, str]
    answer_counts: dict[str, dict[str, tuple[int, int]]]  # story -> question -> (t, f)
    warnings: list[str] = field(default_factory=list)
    eliminated: list[tuple[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "question_entropies": self.question_entropies,
            "story_indices": self.story_indices,
            "system_indices": self.system_indices,
            "story_systems": self.story_systems,
            "answer_counts": {
                s: {q: list(c) for q, c in qs.items()} for s, qs in self.answer_counts.items()
            },
            "warnings": self.warnings,
            "eliminated": [list(e) for e in self.eliminated],
        }


def aggregate(responses: ResponseSet, exclude_stories: Iterable[str] = ()) -> EntropyReport:
    """Entropy report over the kept responses.

    Story index = mean of its answered questions' entropies; system index
    = median of its stories' indices. Stories with no answers are excluded
    with a warning rather than failing the whole report.
    """
    excluded = set(exclude_stories)
    counts: dict[str, dict[str, list[int]]] = {}
    for r in responses.records:
        if r.story_id in excluded:
            continue
        story_counts = counts.setdefault(r.story_id, {})
        tf = story_counts.setdefault(r.question_id, [0, 0])
        tf[0 if r.answer == "T" else 1] += 1

    warnings: list[str] = []
    question_entropies: dict[str, dict[str, float]] = {}
    story_indices: dict[str, float] = {}
    story_systems: dict[str, str] = {}
    per_system: dict[str, list[float]] = {}
    for story_id in sorted(responses.stories):
        if story_id in excluded:
            continue
        story_counts = counts.get(story_id)
        if not story_counts:
            warnings.append(f"story {story_id} has no answered questions; excluded")
            continue
        entropies = {
            qid: question_entropy(t, f) for qid, (t, f) in sorted(story_counts.items())
        }
        question_entropies[story_id] = entropies
        index = sum(entropies.values()) / len(entropies)
        story_indices[story_id] = index
        system = responses.stories[story_id].system_id
        story_systems[story_id] = system
        per_system.setdefault(system, []).append(index)

    system_indices = {sys: statistics.median(vals) for sys, vals in sorted(per_system.items())}
    return EntropyReport(
        question_entropies=question_entropies,
        story_indices=story_indices,
        system_indices=system_indices,
        story_systems=story_systems,
        answer_counts={s: {q: (c[0], c[1]) for q, c in qs.items()} for s, qs in counts.items()},
        warnings=warnings,
    )
