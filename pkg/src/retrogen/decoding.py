"""Beam-search decoding with repetition penalty, horizon regularization,
no-repeat-n-gram blocking, and length-normalized scoring.

The horizon is text from earlier pipeline iterations: it feeds both
penalties (its tokens join the repetition-penalty set and the n-gram
scan) but never the prompt. The n-gram scan runs over horizon ++
generated-output only; prompt tokens are handled by the repetition
penalty instead, which keeps the cross-iteration no-repeat guarantee
exact: no n-gram inside the output ever occurs twice in horizon ++
output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels as kernels
from .errors import ContractViolation, StepStarvationError
from .numerics import log_softmax
from .story import GenerationConfig
from .backend.protocol import LogitMap, TokenSeq


@dataclass(frozen=True)
class Hypothesis:
    """One beam: generated tokens only, with the exact sum of the chosen
    per-step log-softmax values. ``finished`` marks terminal hypotheses
    (end-of-sequence chosen, or max length reached)."""

    tokens: tuple[int, ...]
    logprob_sum: float
    finished: bool


@dataclass(frozen=True)
class PenaltySet:
    """Token ids under repetition penalty: prompt + hypothesis + horizon."""

    token_ids: frozenset[int]

    @classmethod
    def of(cls, *groups: Sequence[int]) -> "PenaltySet":
        ids: set[int] = set()
        for g in groups:
            ids.update(g)
        return cls(frozenset(ids))


def apply_repetition_penalty(logits: LogitMap, penalized: PenaltySet, theta: float) -> LogitMap:
    """Quotient rule: positive logits divided by theta, negatives multiplied.

    Ids outside the penalty set pass through bit-identical. Every
    penalized id must be present in the map (request them via
    include_tokens when the backend truncates).
    """
    if theta < 1.0:
        raise ContractViolation("repetition penalty theta must be >= 1")
    ids = penalized.token_ids
    if not ids:
        return logits
    wanted = np.fromiter(ids, dtype=np.uint32, count=len(ids))
    mask = np.isin(logits.ids, wanted)
    if int(mask.sum()) != len(ids):
        missing = sorted(set(ids) - set(logits.ids.tolist()))
        raise ContractViolation(f"penalized ids missing from logits: {missing[:8]}")
    out = LogitMap.__new__(LogitMap)
    out.ids = logits.ids
    out.logits = kernels.repetition_penalty(logits.logits, mask, theta)
    out.complete = logits.complete
    return out


def banned_next_tokens(generated: Sequence[int], horizon: Sequence[int], n: int) -> set[int]:
    """Ids that would complete an n-gram already in horizon ++ generated.

    Returns every t such that (last n-1 tokens of generated) + [t] occurs
    contiguously anywhere in horizon ++ generated; empty while the
    generated prefix is shorter than n-1.
    """
    if n < 2:
        raise ContractViolation("n-gram order must be >= 2")
    if len(generated) < n - 1:
        return set()
    seq = np.asarray(list(horizon) + list(generated), dtype=np.uint32)
    prefix = np.asarray(list(generated[-(n - 1):]), dtype=np.uint32)
    return set(int(t) for t in kernels.ngram_banned(seq, prefix))


def length_normalized_score(logprob_sum: float, length: int, alpha: float) -> float:
    """logprob_sum / length**alpha (alpha=0 disables normalization)."""
    if length < 1:
        raise ContractViolation("length must be >= 1")
    return logprob_sum / length**alpha


def _as_tokens(value: Sequence[int] | TokenSeq | None, model_id: str, role: str) -> tuple[int, ...] | None:
    if value is None:
        return None
    if isinstance(value, TokenSeq):
        if value.model_id != model_id:
            raise ContractViolation(f"{role} tokens belong to {value.model_id}, decoding with {model_id}")
        return value.tokens
    return tuple(int(t) for t in value)


def beam_search(
    backend,
    model_id: str,
    prompt: Sequence[int] | TokenSeq,
    encoder_context: Sequence[int] | TokenSeq | None = None,
    horizon: Sequence[int] | TokenSeq | None = None,
    config: GenerationConfig = GenerationConfig(),
    return_count: int | None = None,
) -> list[Hypothesis]:
    """Beam search over backend.next_logits.

    Per-step transform order: (1) repetition penalty over prompt +
    hypothesis + horizon tokens, (2) banned n-gram completions to -inf,
    (3) log-softmax over the surviving entries. Hypotheses finish on the
    model's end-of-sequence token or at config.max_length. Final ranking
    is by length-normalized score, ties broken by the lexicographically
    smaller token sequence. Passing horizon=None or () are the same run.
    """
    cap = backend.capability(model_id)
    if cap.kind == "seq2seq":
        if encoder_context is None:
            raise ContractViolation(f"{model_id} is seq2seq: encoder_context is required")
    elif encoder_context is not None:
        raise ContractViolation(f"{model_id} is {cap.kind}: encoder_context is not accepted")

    k = config.beam_width if return_count is None else return_count
    if not 1 <= k <= config.beam_width:
        raise ContractViolation("return_count must be within [1, beam_width]")

    prompt = _as_tokens(prompt, model_id, "prompt") or ()
    horizon_tokens = _as_tokens(horizon, model_id, "horizon") or ()
    enc_tokens = _as_tokens(encoder_context, model_id, "encoder context")
    enc = None if enc_tokens is None else list(enc_tokens)
    theta = config.repetition_penalty
    n = config.no_repeat_ngram
    eos = cap.eos_token_id
    width = config.beam_width

    base_penalty = set(prompt) | set(horizon_tokens)
    live: list[Hypothesis] = [Hypothesis((), 0.0, False)]
    done: list[Hypothesis] = []

    for step in range(config.max_length):
        candidates: list[tuple[float, tuple[int, ...], int]] = []  # (logprob_sum, tokens, id)
        for hyp in live:
            penalty_ids = PenaltySet(frozenset(base_penalty | set(hyp.tokens)))
            include = sorted(penalty_ids.token_ids | ({eos} if eos is not None else set()))
            lm = backend.next_logits(
                model_id, list(prompt + hyp.tokens), context_tokens=enc,
                include_tokens=include or None,
            )
            if theta != 1.0:
                lm = apply_repetition_penalty(lm, penalty_ids, theta)
            values = lm.logits
            if n != 0:
                banned = banned_next_tokens(hyp.tokens, horizon_tokens, n)
                if banned:
                    present = np.isin(lm.ids, np.fromiter(banned, dtype=np.uint32, count=len(banned)))
                    values = np.where(present, -np.inf, values)
            ls = log_softmax(values)
            # width+1 per beam: one slot may be consumed by end-of-sequence
            order = np.lexsort((lm.ids, -ls))[: width + 1]
            for idx in order:
                lp = float(ls[idx])
                if not np.isfinite(lp):
                    break  # sorted: everything after is -inf too
                tok = int(lm.ids[idx])
                candidates.append((hyp.logprob_sum + lp, hyp.tokens + (tok,), tok))
        if not candidates:
            if done:
                live = []  # stuck beams are dead ends, not completions
                break
            raise StepStarvationError(step)
        candidates.sort(key=lambda c: (-c[0], c[1]))
        next_live: list[Hypothesis] = []
        for logprob, tokens, tok in candidates:
            if eos is not None and tok == eos:
                done.append(Hypothesis(tokens, logprob, True))
            elif len(next_live) < width:
                next_live.append(Hypothesis(tokens, logprob, False))
        live = next_live
        if not live:
            break

    pool = done + [Hypothesis(h.tokens, h.logprob_sum, True) for h in live]
    alpha = config.length_penalty
    pool.sort(key=lambda h: (-length_normalized_score(h.logprob_sum, len(h.tokens), alpha), h.tokens))
    return pool[:k]
