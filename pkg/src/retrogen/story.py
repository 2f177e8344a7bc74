"""Story domain types, sentence segmentation, and story-state manipulation.

Stories are stored earliest-first even though generation proceeds
backward; rendering is a pure view. All types are immutable values, so
they are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Sequence

from .errors import ContractViolation, ValidationError

# Tokens that end with a terminal but never end a sentence.
DEFAULT_ABBREVIATIONS = frozenset(
    {"Mr.", "Mrs.", "Ms.", "Dr.", "St.", "Prof.", "Jr.", "Sr.", "vs.", "etc."}
)

_TERMINALS = ".!?"


@dataclass(frozen=True)
class Sentence:
    """One event unit of a story: trimmed, non-empty text plus its position."""

    text: str
    index: int = 0

    def __post_init__(self):
        if not self.text or self.text != self.text.strip():
            raise ContractViolation(f"sentence text must be non-empty and trimmed: {self.text!r}")


def split_sentences(text: str, abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS) -> list[Sentence]:
    """Split text into sentences at '.', '!' or '?' followed by whitespace.

    A terminal is suppressed when the whitespace-delimited token ending at
    it is in the abbreviation guard list ("Dr.", "Mrs.", ...). Trailing
    text without a terminal becomes a final sentence, so concatenating the
    results preserves every non-whitespace character in order.
    """
    pieces: list[str] = []
    start = 0
    n = len(text)
    for i, c in enumerate(text):
        if c in _TERMINALS and i + 1 < n and text[i + 1].isspace():
            j = i
            while j > 0 and not text[j - 1].isspace():
                j -= 1
            if text[j : i + 1] not in abbreviations:
                piece = text[start : i + 1].strip()
                if piece:
                    pieces.append(piece)
                start = i + 1
    tail = text[start:].strip()
    if tail:
        pieces.append(tail)
    return [Sentence(text=p, index=k) for k, p in enumerate(pieces)]


def _reindexed(sentences: Iterable[Sentence], offset: int = 0) -> tuple[Sentence, ...]:
    return tuple(
        s if s.index == offset + k else replace(s, index=offset + k)
        for k, s in enumerate(sentences)
    )


@dataclass(frozen=True)
class StoryState:
    """Ordered story sentences with an immutable ending and a horizon.

    ``generated`` holds sentences produced so far (earliest first),
    ``ending`` the given final sentences (never modified), and ``horizon``
    every sentence produced in prior iterations in production order
    (selected answers always; rejected candidates only when configured).
    """

    generated: tuple[Sentence, ...] = ()
    ending: tuple[Sentence, ...] = ()
    horizon: tuple[Sentence, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "generated", _reindexed(self.generated))
        object.__setattr__(self, "ending", _reindexed(self.ending, offset=len(self.generated)))
        object.__setattr__(self, "horizon", _reindexed(self.horizon))

    @classmethod
    def from_ending(cls, ending_text: str) -> "StoryState":
        sentences = split_sentences(ending_text)
        if not sentences:
            raise ContractViolation("ending text contains no sentences")
        return cls(generated=(), ending=tuple(sentences), horizon=())

    @property
    def sentences(self) -> tuple[Sentence, ...]:
        """Full story, earliest first: generated then ending."""
        return self.generated + self.ending

    def horizon_text(self) -> str:
        return " ".join(s.text for s in self.horizon)

    def with_horizon(self, extra: Sequence[Sentence]) -> "StoryState":
        """Append extra sentences to the horizon only (story unchanged)."""
        if not extra:
            return self
        return StoryState(self.generated, self.ending, self.horizon + tuple(extra))


def prepend(state: StoryState, sentences: Sequence[Sentence]) -> StoryState:
    """Attach new earliest sentences to the story; extends the horizon too."""
    if not sentences:
        raise ContractViolation("prepend requires at least one sentence")
    return StoryState(
        generated=tuple(sentences) + state.generated,
        ending=state.ending,
        horizon=state.horizon + tuple(sentences),
    )


def render(state: StoryState) -> str:
    """Plain-text story view: one sentence per line, ending sentences last."""
    return "\n".join(s.text for s in state.sentences)


@dataclass(frozen=True)
class GenerationConfig:
    """Knobs shared by both generators; defaults match the reference setup."""

    iterations: int = 3
    beam_width: int = 15
    repetition_penalty: float = 10.0
    length_penalty: float = 3.0
    max_length: int = 150
    no_repeat_ngram: int = 3
    window_size: int = 5
    question_budget: int = 8
    seed: int = 0
    include_rejected_in_horizon: bool = False

    def __post_init__(self):
        if self.iterations < 0:
            raise ValidationError("iterations must be >= 0")
        if self.beam_width < 1:
            raise ValidationError("beam_width must be >= 1")
        if self.repetition_penalty < 1.0:
            raise ValidationError("repetition_penalty must be >= 1")
        if self.max_length < 2:
            raise ValidationError("max_length must be >= 2")
        if self.no_repeat_ngram != 0 and self.no_repeat_ngram < 2:
            raise ValidationError("no_repeat_ngram must be 0 (disabled) or >= 2")
        if self.window_size < 0:
            raise ValidationError("window_size must be >= 0")
        if self.question_budget < 0:
            raise ValidationError("question_budget must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must fit in an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "GenerationConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)
