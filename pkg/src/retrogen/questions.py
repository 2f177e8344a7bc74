"""Question generation: commonsense inference over the story front,
character attribution, and the two final question templates.

Only xIntent (what a character intended) and xNeed (what they needed)
inferences are kept; all other relation kinds are out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ContractViolation
from .story import GenerationConfig, StoryState

WHY_TEMPLATE = "Why does {character} do {clause}?"
NEED_TEMPLATE = "What does {character} do to need {clause}?"

KIND_WHY_INTENT = "why_intent"
KIND_WHAT_NEED = "what_need"

DEFAULT_CONFIDENCE_FLOOR = 0.1


@dataclass(frozen=True)
class InferenceClause:
    """One kept commonsense inference, tagged with the sentence window
    (inclusive indices) of the story context that produced it."""

    relation: str
    text: str
    window_start: int
    window_end: int

    def __post_init__(self):
        if self.relation not in ("xIntent", "xNeed"):
            raise ContractViolation(f"unsupported relation: {self.relation}")
        if not self.text:
            raise ContractViolation("clause text must be non-empty")


@dataclass(frozen=True)
class Question:
    text: str
    character: str
    clause: InferenceClause
    kind: str


def context_window(state: StoryState, window_size: int) -> tuple[str, int, int]:
    """The earliest sentences of the current story (the text being
    extended), joined with single spaces, plus the window indices."""
    sentences = state.sentences
    count = min(window_size, len(sentences))
    window = sentences[:count]
    return " ".join(s.text for s in window), 0, max(count - 1, 0)


def collect_window(state: StoryState, backend, infer_model: str, window_size: int = 5) -> list[InferenceClause]:
    """Fetch inferences for the story front, keeping the most recent
    window_size per relation, newest first across both relations."""
    if not state.sentences:
        raise ContractViolation("story has no sentences")
    if window_size == 0:
        return []
    text, w_start, w_end = context_window(state, window_size)
    raw = backend.infer_clauses(infer_model, text, list(("xIntent", "xNeed")), window_size)
    kept_positions: set[int] = set()
    for relation in ("xIntent", "xNeed"):
        positions = [i for i, c in enumerate(raw) if c.relation == relation]
        kept_positions.update(positions[-window_size:])
    return [
        InferenceClause(raw[i].relation, raw[i].text, w_start, w_end)
        for i in sorted(kept_positions, reverse=True)
    ]


def attribution_question(clause: InferenceClause) -> str:
    """The "who" template used to pin a clause on a character.

    xIntent texts usually start with "to ..."; the leading "to" is folded
    into the template so "to to" can never appear.
    """
    if clause.relation == "xIntent":
        text = clause.text
        if text.lower().startswith("to "):
            text = text[3:]
        return f"Who needs to {text}"
    return f"Who needs {clause.text}"


def attribute_character(
    backend,
    extract_model: str,
    context_text: str,
    clause: InferenceClause,
    confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR,
) -> str | None:
    """Ask the extractive model which character the clause belongs to.

    Returns None when the model is not confident enough; downstream skips
    such clauses instead of inventing a subject.
    """
    if not context_text:
        raise ContractViolation("attribution context must be non-empty")
    span = backend.extract_span(extract_model, context_text, attribution_question(clause))
    if span.confidence >= confidence_floor and span.answer:
        return span.answer
    return None


def make_question(character: str, clause: InferenceClause) -> Question:
    if clause.relation == "xIntent":
        return Question(
            text=WHY_TEMPLATE.format(character=character, clause=clause.text),
            character=character,
            clause=clause,
            kind=KIND_WHY_INTENT,
        )
    return Question(
        text=NEED_TEMPLATE.format(character=character, clause=clause.text),
        character=character,
        clause=clause,
        kind=KIND_WHAT_NEED,
    )


def parse_question(text: str) -> tuple[str, str, str]:
    """Invert the final templates: returns (kind, character, clause text).

    Works for any character string without " do " in it (characters are
    extracted tokens, so this holds in practice).
    """
    if not text.endswith("?"):
        raise ContractViolation("question text must end with '?'")
    body = text[:-1]
    if body.startswith("Why does "):
        rest = body[len("Why does "):]
        character, sep, clause = rest.partition(" do ")
        if not sep or not character or not clause:
            raise ContractViolation(f"unparseable question: {text!r}")
        return KIND_WHY_INTENT, character, clause
    if body.startswith("What does "):
        rest = body[len("What does "):]
        character, sep, clause = rest.partition(" do to need ")
        if not sep or not character or not clause:
            raise ContractViolation(f"unparseable question: {text!r}")
        return KIND_WHAT_NEED, character, clause
    raise ContractViolation(f"unparseable question: {text!r}")


def build_questions(
    state: StoryState,
    backend,
    config: GenerationConfig,
    infer_model: str,
    extract_model: str,
) -> list[Question]:
    """Up to question_budget questions, newest clauses first; clauses the
    extractor cannot attribute to a character are skipped."""
    clauses = collect_window(state, backend, infer_model, config.window_size)
    context_text, _, _ = context_window(state, config.window_size)
    questions: list[Question] = []
    for clause in clauses:
        if len(questions) >= config.question_budget:
            break
        character = attribute_character(backend, extract_model, context_text, clause)
        if character is None:
            continue
        questions.append(make_question(character, clause))
    return questions
