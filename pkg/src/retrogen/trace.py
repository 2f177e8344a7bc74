"""Run-trace records: everything a generation run did, per iteration.

Traces are plain value objects with a stable dict form, so a fixed seed
reproduces a byte-identical serialized trace.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .errors import ContractViolation


@dataclass(frozen=True)
class TraceQuestion:
    text: str
    kind: str
    character: str
    clause_relation: str
    clause_text: str
    window_start: int
    window_end: int


@dataclass(frozen=True)
class TraceCandidate:
    text: str
    decoder_score: float
    beam_rank: int
    question_index: int | None = None
    doc_id: str | None = None


@dataclass(frozen=True)
class TraceRejection:
    text: str
    phrase: str


@dataclass(frozen=True)
class TraceRanked:
    text: str
    perplexity: float
    normalized_score: float


@dataclass(frozen=True)
class TraceSelection:
    """What an iteration kept. Perplexity fields stay None for the
    baseline generator, which selects by decoder score alone."""

    text: str
    decoder_score: float
    perplexity: float | None = None
    normalized_score: float | None = None


@dataclass(frozen=True)
class IterationRecord:
    index: int
    reference_doc: str | None
    questions: tuple[TraceQuestion, ...]
    candidates: tuple[TraceCandidate, ...]
    rejections: tuple[TraceRejection, ...]
    duplicates_removed: tuple[str, ...]
    ranked: tuple[TraceRanked, ...]
    selected: TraceSelection | None
    prepended: tuple[str, ...]
    skipped: bool
    skip_reason: str | None = None

    def __post_init__(self):
        if self.selected is not None:
            texts = {c.text for c in self.candidates}
            if self.selected.text not in texts:
                raise ContractViolation("selected candidate missing from the iteration's candidate list")
        if not self.skipped and self.selected is None:
            raise ContractViolation("non-skipped iteration must have a selected candidate")


@dataclass
class RunTrace:
    """One record per completed iteration of a generation run."""

    system: str
    iterations: list[IterationRecord] = field(default_factory=list)

    def add(self, record: IterationRecord) -> None:
        self.iterations.append(record)

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "iterations": [asdict(r) for r in self.iterations],
        }


def run_document(trace: RunTrace, config, ending_text: str, final_story_lines: list[str]) -> dict:
    """The run manifest body: config, ending, per-iteration records, story."""
    return {
        "system": trace.system,
        "config": config.to_dict(),
        "ending": ending_text,
        "iterations": [asdict(r) for r in trace.iterations],
        "final_story": final_story_lines,
    }
