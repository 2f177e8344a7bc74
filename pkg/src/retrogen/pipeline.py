"""Generation loops for both systems, plus baseline dataset preprocessing.

Both generators grow a story backward from a given ending: the ending
never changes, each iteration prepends at least one sentence (or is
recorded as skipped), and all text produced along the way accumulates in
the horizon so later iterations are penalized against it.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .answers import (
    AnswerCandidate,
    ReferenceDoc,
    answer_question,
    dedupe,
    filter_banned,
    select_reference_doc,
)
from .backend.mock import CAUSAL_MODEL, EXTRACT_MODEL, INFER_MODEL, SEQ2SEQ_MODEL
from .decoding import beam_search
from .errors import (
    BackendError,
    ConfigurationError,
    ContractViolation,
    PipelineAborted,
)
from .questions import build_questions
from .ranking import rank, select_best
from .story import GenerationConfig, Sentence, StoryState, prepend, split_sentences
from .trace import (
    IterationRecord,
    RunTrace,
    TraceCandidate,
    TraceQuestion,
    TraceRanked,
    TraceRejection,
    TraceSelection,
)


@dataclass(frozen=True)
class ModelRoles:
    """Which advertised model serves which pipeline role."""

    qa: str = SEQ2SEQ_MODEL
    ranker: str = CAUSAL_MODEL
    infer: str = INFER_MODEL
    extract: str = EXTRACT_MODEL
    seq2seq: str = SEQ2SEQ_MODEL


def _trace_question(q) -> TraceQuestion:
    return TraceQuestion(
        text=q.text,
        kind=q.kind,
        character=q.character,
        clause_relation=q.clause.relation,
        clause_text=q.clause.text,
        window_start=q.clause.window_start,
        window_end=q.clause.window_end,
    )


def _trace_candidate(c: AnswerCandidate, question_index: int) -> TraceCandidate:
    return TraceCandidate(
        text=c.text,
        decoder_score=c.decoder_score,
        beam_rank=c.beam_rank,
        question_index=question_index,
        doc_id=c.doc_id,
    )


def _skip(trace: RunTrace, index: int, reason: str, *, reference_doc=None, questions=(),
          candidates=(), rejections=(), duplicates=()) -> None:
    trace.add(IterationRecord(
        index=index,
        reference_doc=reference_doc,
        questions=tuple(questions),
        candidates=tuple(candidates),
        rejections=tuple(rejections),
        duplicates_removed=tuple(duplicates),
        ranked=(),
        selected=None,
        prepended=(),
        skipped=True,
        skip_reason=reason,
    ))


def _horizon_tokens(backend, model_id: str, state: StoryState) -> list[int]:
    text = state.horizon_text()
    return backend.tokenize(model_id, text) if text else []


def edgar_generate(
    ending_text: str,
    corpus: Sequence[ReferenceDoc],
    backend,
    config: GenerationConfig,
    models: ModelRoles = ModelRoles(),
    ban_phrases: Sequence[str] = (),
    workers: int = 1,
) -> tuple[StoryState, RunTrace]:
    """The question-answering loop: infer -> ask -> answer -> filter ->
    rank -> prepend, for config.iterations rounds.

    One reference document is drawn per iteration and shared by all of
    its questions. Rounds with no viable candidate are recorded as
    skipped and the loop continues. Backend failures abort with the
    partial trace attached to the raised PipelineAborted.
    """
    if not corpus:
        raise ConfigurationError("reference corpus is empty")
    state = StoryState.from_ending(ending_text)
    trace = RunTrace("edgar")
    rng = random.Random(config.seed)
    try:
        for index in range(config.iterations):
            ref = select_reference_doc(corpus, rng)
            questions = build_questions(state, backend, config, models.infer, models.extract)
            tq = tuple(_trace_question(q) for q in questions)
            if not questions:
                _skip(trace, index, "no_questions", reference_doc=ref.doc_id)
                continue

            horizon = _horizon_tokens(backend, models.qa, state)

            def answer(q):
                return answer_question(backend, models.qa, q, ref, horizon, config)

            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    per_question = list(pool.map(answer, questions))
            else:
                per_question = [answer(q) for q in questions]

            candidates: list[AnswerCandidate] = []
            tc: list[TraceCandidate] = []
            for qi, batch in enumerate(per_question):
                candidates.extend(batch)
                tc.extend(_trace_candidate(c, qi) for c in batch)
            if not candidates:
                _skip(trace, index, "no_candidates", reference_doc=ref.doc_id, questions=tq)
                continue

            kept, rejected = filter_banned(candidates, ban_phrases)
            tr = tuple(TraceRejection(c.text, phrase) for c, phrase in rejected)
            if config.include_rejected_in_horizon and rejected:
                # rejected text was still produced: let later penalties see it
                extra: list[Sentence] = []
                for cand, _ in rejected:
                    extra.extend(split_sentences(cand.text))
                state = state.with_horizon(extra)
            if not kept:
                _skip(trace, index, "all_banned", reference_doc=ref.doc_id,
                      questions=tq, candidates=tc, rejections=tr)
                continue

            deduped = dedupe(kept, state)
            survivors = {id(c) for c in deduped}
            duplicates = tuple(c.text for c in kept if id(c) not in survivors)
            if not deduped:
                _skip(trace, index, "all_duplicates", reference_doc=ref.doc_id,
                      questions=tq, candidates=tc, rejections=tr, duplicates=duplicates)
                continue

            ranked = rank(backend, models.ranker, deduped, state)
            best = select_best(ranked)
            new_sentences = split_sentences(best.candidate.text)
            state = prepend(state, new_sentences)

            trace.add(IterationRecord(
                index=index,
                reference_doc=ref.doc_id,
                questions=tq,
                candidates=tuple(tc),
                rejections=tr,
                duplicates_removed=duplicates,
                ranked=tuple(
                    TraceRanked(r.candidate.text, r.perplexity, r.normalized_score) for r in ranked
                ),
                selected=TraceSelection(
                    text=best.candidate.text,
                    decoder_score=best.candidate.decoder_score,
                    perplexity=best.perplexity,
                    normalized_score=best.normalized_score,
                ),
                prepended=tuple(s.text for s in new_sentences),
                skipped=False,
            ))
    except BackendError as exc:
        raise PipelineAborted(exc, trace) from exc
    return state, trace


def bbart_generate(
    ending_text: str,
    backend,
    config: GenerationConfig,
    model_id: str = SEQ2SEQ_MODEL,
) -> tuple[StoryState, RunTrace]:
    """The baseline loop: feed the current earliest two sentences to a
    backward seq2seq model and prepend its top decoded chunk, with the
    same penalty stack and horizon as the QA system."""
    cap = backend.capability(model_id)
    if cap.kind != "seq2seq":
        raise ConfigurationError(f"baseline generation needs a seq2seq model, got {cap.kind}")
    state = StoryState.from_ending(ending_text)
    trace = RunTrace("bbart")
    try:
        for index in range(config.iterations):
            frontier = state.sentences[: min(2, len(state.sentences))]
            frontier_text = " ".join(s.text for s in frontier)
            encoder_context = backend.tokenize(model_id, frontier_text)
            horizon = _horizon_tokens(backend, model_id, state)
            hypotheses = beam_search(
                backend, model_id, [], encoder_context=encoder_context,
                horizon=horizon, config=config, return_count=config.beam_width,
            )
            tc: list[TraceCandidate] = []
            texts: list[tuple[str, float]] = []
            for rank_i, hyp in enumerate(hypotheses):
                text = backend.detokenize(model_id, list(hyp.tokens)).strip()
                if not text:
                    continue
                score = hyp.logprob_sum / len(hyp.tokens) ** config.length_penalty
                tc.append(TraceCandidate(text=text, decoder_score=score, beam_rank=rank_i))
                texts.append((text, score))
            if not texts:
                _skip(trace, index, "no_candidates")
                continue
            top_text, top_score = texts[0]
            new_sentences = split_sentences(top_text)
            state = prepend(state, new_sentences)
            trace.add(IterationRecord(
                index=index,
                reference_doc=None,
                questions=(),
                candidates=tuple(tc),
                rejections=(),
                duplicates_removed=(),
                ranked=(),
                selected=TraceSelection(text=top_text, decoder_score=top_score),
                prepended=tuple(s.text for s in new_sentences),
                skipped=False,
            ))
    except BackendError as exc:
        raise PipelineAborted(exc, trace) from exc
    return state, trace


@dataclass(frozen=True)
class SourceTargetPair:
    """A contiguous 2+2k sentence chunk: 2 earlier sentences (source) and
    the 2k that immediately follow (target)."""

    source: tuple[Sentence, ...]
    target: tuple[Sentence, ...]
    k: int
    narrative_id: str
    offset: int

    def __post_init__(self):
        if not 1 <= self.k <= 4:
            raise ContractViolation("k must be in 1..4")
        if len(self.source) != 2 or len(self.target) != 2 * self.k:
            raise ContractViolation("pair must hold 2 source and 2k target sentences")
        if self.offset < 0:
            raise ContractViolation("offset must be non-negative")


def prep_bbart_dataset(
    narratives: Sequence[tuple[str, str]],
    rng: random.Random,
) -> tuple[list[SourceTargetPair], list[tuple[str, str]]]:
    """Extract one 2+2k chunk per narrative, k uniform over the sizes that
    fit (k in 1..4) and the start offset uniform over valid positions.

    Narratives shorter than 4 sentences cannot host any chunk; they are
    skipped and reported in the second return value as (id, reason).
    """
    if not narratives:
        raise ConfigurationError("no narratives given")
    pairs: list[SourceTargetPair] = []
    skipped: list[tuple[str, str]] = []
    for narrative_id, text in narratives:
        sentences = split_sentences(text)
        feasible = [k for k in (1, 2, 3, 4) if 2 + 2 * k <= len(sentences)]
        if not feasible:
            skipped.append((narrative_id, f"too_short:{len(sentences)}"))
            continue
        k = feasible[rng.randrange(len(feasible))]
        offset = rng.randrange(len(sentences) - (2 + 2 * k) + 1)
        chunk = sentences[offset : offset + 2 + 2 * k]
        pairs.append(SourceTargetPair(
            source=tuple(chunk[:2]),
            target=tuple(chunk[2:]),
            k=k,
            narrative_id=narrative_id,
            offset=offset,
        ))
    return pairs, skipped


def pair_to_jsonl_record(pair: SourceTargetPair, direction: str = "backward") -> dict:
    """JSONL row for one pair.

    direction="backward" (default) maps later text -> preceding two
    sentences, which is what a backward generator trains on;
    direction="literal" keeps the corpus reading (2 earlier -> 2k later).
    """
    if direction not in ("backward", "literal"):
        raise ContractViolation("direction must be 'backward' or 'literal'")
    earlier = [s.text for s in pair.source]
    later = [s.text for s in pair.target]
    source, target = (later, earlier) if direction == "backward" else (earlier, later)
    return {
        "source": source,
        "target": target,
        "k": pair.k,
        "narrative_id": pair.narrative_id,
        "offset": pair.offset,
        "direction": direction,
    }
