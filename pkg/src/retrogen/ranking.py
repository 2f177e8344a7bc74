"""Perplexity ranking: score each candidate prepended to the story and
pick the most fluent continuation.

Lower perplexity wins. The normalized score of candidate i is
(1/ppl_i) / sum_j (1/ppl_j), so scores form a probability distribution
with the mass on fluent candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .answers import AnswerCandidate
from .errors import ContractViolation
from .story import StoryState, render


@dataclass(frozen=True)
class RankedCandidate:
    candidate: AnswerCandidate
    perplexity: float
    normalized_score: float


def perplexity(backend, ranker_model: str, text: str) -> float:
    """exp(-mean per-token log-probability) under the ranker model."""
    tokens = backend.tokenize(ranker_model, text)
    if len(tokens) < 2:
        raise ContractViolation("perplexity needs text of at least 2 tokens")
    cap = backend.capability(ranker_model)
    context = [] if cap.kind == "seq2seq" else None
    logprobs = backend.score_sequence(ranker_model, tokens, context_tokens=context)
    return math.exp(-sum(logprobs) / len(logprobs))


def scored_text(candidate: AnswerCandidate, context: StoryState) -> str:
    """The full sequence the ranker sees: answer prepended to the story."""
    rendered = render(context)
    return f"{candidate.text}\n{rendered}" if rendered else candidate.text


def rank(
    backend,
    ranker_model: str,
    candidates: Sequence[AnswerCandidate],
    context: StoryState,
) -> list[RankedCandidate]:
    """Score candidate+story for every candidate; best (lowest perplexity)
    first, ties broken by candidate text."""
    if not candidates:
        raise ContractViolation("rank requires at least one candidate")
    ppls = [perplexity(backend, ranker_model, scored_text(c, context)) for c in candidates]
    inv_sum = sum(1.0 / p for p in ppls)
    ranked = [
        RankedCandidate(c, p, (1.0 / p) / inv_sum)
        for c, p in zip(candidates, ppls)
    ]
    ranked.sort(key=lambda r: (r.perplexity, r.candidate.text))
    return ranked


def select_best(ranked: Sequence[RankedCandidate]) -> RankedCandidate:
    if not ranked:
        raise ContractViolation("select_best requires a non-empty ranking")
    return ranked[0]
