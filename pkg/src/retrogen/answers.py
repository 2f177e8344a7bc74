"""Candidate answer generation: QA decoding against a reference document,
banned-phrase filtering, and cross-iteration deduplication."""

from __future__ import annotations

import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from .decoding import beam_search
from .errors import ConfigurationError, ContractViolation
from .questions import Question
from .story import GenerationConfig, StoryState

QA_PROMPT_TEMPLATE = "question: {question} context: {document}"


@dataclass(frozen=True)
class ReferenceDoc:
    doc_id: str
    text: str
    source_path: str

    def __post_init__(self):
        if not self.text:
            raise ContractViolation("reference document text must be non-empty")


@dataclass(frozen=True)
class AnswerCandidate:
    question: Question
    text: str
    decoder_score: float
    doc_id: str
    beam_rank: int

    def __post_init__(self):
        if not self.text.strip():
            raise ContractViolation("candidate text must be non-empty after trimming")


def select_reference_doc(corpus: Sequence[ReferenceDoc], rng: random.Random) -> ReferenceDoc:
    """Uniform draw from the corpus using the run's seeded RNG stream."""
    if not corpus:
        raise ConfigurationError("reference corpus is empty")
    return corpus[rng.randrange(len(corpus))]


def build_qa_prompt(question: Question, ref_doc: ReferenceDoc) -> str:
    return QA_PROMPT_TEMPLATE.format(question=question.text, document=ref_doc.text)


def answer_question(
    backend,
    qa_model: str,
    question: Question,
    ref_doc: ReferenceDoc,
    horizon_tokens: Sequence[int],
    config: GenerationConfig,
) -> list[AnswerCandidate]:
    """Beam-decode candidate preceding events for one question.

    The canonical QA prompt feeds the encoder for seq2seq models and the
    decoder prefix for causal ones. Hypotheses that detokenize to
    whitespace are dropped; order (decoder score descending) is kept.
    """
    prompt_text = build_qa_prompt(question, ref_doc)
    prompt_tokens = backend.tokenize(qa_model, prompt_text)
    if backend.capability(qa_model).kind == "seq2seq":
        decoder_prompt: list[int] = []
        encoder_context: list[int] | None = prompt_tokens
    else:
        decoder_prompt = prompt_tokens
        encoder_context = None
    hypotheses = beam_search(
        backend,
        qa_model,
        decoder_prompt,
        encoder_context=encoder_context,
        horizon=horizon_tokens,
        config=config,
        return_count=config.beam_width,
    )
    candidates = []
    for rank, hyp in enumerate(hypotheses):
        text = backend.detokenize(qa_model, list(hyp.tokens)).strip()
        if not text:
            continue
        score = hyp.logprob_sum / len(hyp.tokens) ** config.length_penalty
        candidates.append(AnswerCandidate(question, text, score, ref_doc.doc_id, rank))
    return candidates


def load_ban_list(path: str | Path | None = None) -> list[str]:
    """Banned phrases, one per line; '#' starts a comment line."""
    if path is None:
        raw = resources.files("retrogen").joinpath("data/banned_phrases.txt").read_text("utf-8")
    else:
        raw = Path(path).read_text("utf-8")
    phrases = []
    for line in raw.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            phrases.append(line)
    return phrases


def filter_banned(
    candidates: Sequence[AnswerCandidate], banned: Sequence[str]
) -> tuple[list[AnswerCandidate], list[tuple[AnswerCandidate, str]]]:
    """Case-folded substring filter. Returns (kept, rejected-with-phrase);
    kept and rejected partition the input in order."""
    folded = [(p, p.casefold()) for p in banned]
    kept: list[AnswerCandidate] = []
    rejected: list[tuple[AnswerCandidate, str]] = []
    for cand in candidates:
        text = cand.text.casefold()
        hit = next((orig for orig, phrase in folded if phrase in text), None)
        if hit is None:
            kept.append(cand)
        else:
            rejected.append((cand, hit))
    return kept, rejected


def dedupe(candidates: Sequence[AnswerCandidate], story: StoryState) -> list[AnswerCandidate]:
    """Drop exact-text duplicates within the batch and any candidate whose
    text matches an existing story or horizon sentence. Stable order."""
    existing = {s.text for s in story.sentences} | {s.text for s in story.horizon}
    seen: set[str] = set()
    out = []
    for cand in candidates:
        if cand.text in existing or cand.text in seen:
            continue
        seen.add(cand.text)
        out.append(cand)
    return out
