"""Fully deterministic mock inference backend.

Every response is a pure function of (seed, request): logits come from an
FNV-1a-64 hash scaled to [-5, 5), clauses from a fixture table indexed by
a hash of the input text, spans from a fixed capitalized-token rule. That
makes every decoding algorithm testable byte-for-byte without weights.

Hash layout for a logit query (little-endian throughout):

    LE64(seed) ++ [0x01 ++ LE32(c) for the last <=4 encoder tokens, when
    encoder context is given] ++ LE32(t) for the last <=4 decoder tokens
    ++ LE32(query_id)

so the plain causal case is exactly seed || tokens[-4:] || query.
"""

from __future__ import annotations

import json
import re
import struct
from importlib import resources
from typing import Sequence

import numpy as np

from .. import _kernels as kernels
from ..errors import ProtocolError
from ..numerics import log_softmax
from .protocol import (
    RELATIONS,
    LogitMap,
    ModelCapability,
    RawClause,
    SpanResult,
    validate_token_ids,
)

DEFAULT_VOCAB = 258  # 256 byte tokens + EOS (256) + BOS (257)
HASH_WINDOW = 4  # decoder/encoder tokens folded into the hash

CAUSAL_MODEL = "mock-causal"
SEQ2SEQ_MODEL = "mock-seq2seq"
UNIFORM_MODEL = "mock-uniform"
INFER_MODEL = "mock-infer"
EXTRACT_MODEL = "mock-extract"

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


def _load_fixture_clauses() -> dict[str, list[str]]:
    raw = resources.files("retrogen").joinpath("data/inference_fixtures.json").read_text("utf-8")
    return json.loads(raw)


def _load_stopwords() -> frozenset[str]:
    raw = resources.files("retrogen").joinpath("data/extraction_stopwords.txt").read_text("utf-8")
    words = set()
    for line in raw.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.casefold())
    return frozenset(words)


class MockBackend:
    """In-process implementation of every protocol operation.

    The HTTP mock server delegates here, so in-process use and use over
    the wire follow the same arithmetic path.
    """

    def __init__(self, seed: int, vocab_size: int = DEFAULT_VOCAB, max_context: int = 4096):
        if vocab_size < 2:
            raise ProtocolError("bad_config", "vocab_size must be >= 2")
        self.seed = int(seed)
        self.vocab_size = int(vocab_size)
        self.max_context = int(max_context)
        self.eos_token_id = 256 if vocab_size >= 257 else None
        self._clauses = _load_fixture_clauses()
        self._stopwords = _load_stopwords()
        eos = self.eos_token_id
        self._capabilities = {
            CAUSAL_MODEL: ModelCapability(CAUSAL_MODEL, vocab_size, "causal", max_context, eos),
            SEQ2SEQ_MODEL: ModelCapability(SEQ2SEQ_MODEL, vocab_size, "seq2seq", max_context, eos),
            UNIFORM_MODEL: ModelCapability(UNIFORM_MODEL, vocab_size, "causal", max_context, eos),
            INFER_MODEL: ModelCapability(INFER_MODEL, vocab_size, "seq2seq", max_context, None),
            EXTRACT_MODEL: ModelCapability(EXTRACT_MODEL, 0, "extractive", max_context, None),
        }

    # -- capabilities ---------------------------------------------------

    def models(self) -> list[ModelCapability]:
        return [self._capabilities[m] for m in sorted(self._capabilities)]

    def capability(self, model_id: str) -> ModelCapability:
        try:
            return self._capabilities[model_id]
        except KeyError:
            raise ProtocolError("unknown_model", f"no model named {model_id!r}") from None

    # -- token-level ops ------------------------------------------------

    def _token_model(self, model_id: str) -> ModelCapability:
        cap = self.capability(model_id)
        if cap.kind == "extractive" or model_id == INFER_MODEL:
            raise ProtocolError("unsupported_operation", f"{model_id} does not serve token-level requests")
        return cap

    def _check_context_side(self, cap: ModelCapability, context_tokens) -> None:
        if cap.kind == "seq2seq" and context_tokens is None:
            raise ProtocolError("missing_context", f"{cap.model_id} is seq2seq and requires context_tokens")
        if cap.kind == "causal" and context_tokens is not None:
            raise ProtocolError("unexpected_context", f"{cap.model_id} is causal and takes no context_tokens")

    def _hash_prefix(self, tokens: Sequence[int], context_tokens: Sequence[int] | None) -> bytes:
        parts = [struct.pack("<Q", self.seed)]
        if context_tokens is not None:
            parts.append(b"\x01")
            parts.extend(struct.pack("<I", t) for t in context_tokens[-HASH_WINDOW:])
        parts.extend(struct.pack("<I", t) for t in tokens[-HASH_WINDOW:])
        return b"".join(parts)

    def _logit_row(self, model_id: str, tokens, context_tokens, ids: np.ndarray) -> np.ndarray:
        if model_id == UNIFORM_MODEL:
            return np.zeros(len(ids), dtype=np.float64)
        return kernels.hash_logit_row(self._hash_prefix(tokens, context_tokens), ids)

    def next_logits(
        self,
        model_id: str,
        tokens: Sequence[int],
        context_tokens: Sequence[int] | None = None,
        include_tokens: Sequence[int] | None = None,
    ) -> LogitMap:
        cap = self._token_model(model_id)
        self._check_context_side(cap, context_tokens)
        validate_token_ids(tokens, cap.vocab_size)
        if context_tokens is not None:
            validate_token_ids(context_tokens, cap.vocab_size)
        if include_tokens is not None:
            validate_token_ids(include_tokens, cap.vocab_size)
        if len(tokens) >= cap.max_context:
            raise ProtocolError("context_overflow", f"{len(tokens)} tokens exceed max_context {cap.max_context}")
        ids = np.arange(cap.vocab_size, dtype=np.uint32)  # the mock always answers completely
        return LogitMap(ids, self._logit_row(model_id, tokens, context_tokens, ids), complete=True)

    def score_sequence(
        self,
        model_id: str,
        tokens: Sequence[int],
        context_tokens: Sequence[int] | None = None,
    ) -> list[float]:
        cap = self._token_model(model_id)
        self._check_context_side(cap, context_tokens)
        validate_token_ids(tokens, cap.vocab_size)
        if context_tokens is not None:
            validate_token_ids(context_tokens, cap.vocab_size)
        if len(tokens) >= cap.max_context:
            raise ProtocolError("context_overflow", f"{len(tokens)} tokens exceed max_context {cap.max_context}")
        min_len = 2 if cap.kind == "causal" else 1
        if len(tokens) < min_len:
            raise ProtocolError("sequence_too_short", f"{cap.kind} scoring needs >= {min_len} tokens")
        first = 1 if cap.kind == "causal" else 0
        ids = np.arange(cap.vocab_size, dtype=np.uint32)
        out = []
        for t in range(first, len(tokens)):
            row = self._logit_row(model_id, tokens[:t], context_tokens, ids)
            out.append(float(log_softmax(row)[tokens[t]]))
        return out

    def tokenize(self, model_id: str, text: str) -> list[int]:
        cap = self._token_model(model_id)
        ids = list(text.encode("utf-8"))
        validate_token_ids(ids, cap.vocab_size)
        return ids

    def detokenize(self, model_id: str, tokens: Sequence[int]) -> str:
        cap = self._token_model(model_id)
        validate_token_ids(tokens, cap.vocab_size)
        return bytes(t for t in tokens if t < 256).decode("utf-8", errors="replace")

    # -- inference / extraction ops --------------------------------------

    def infer_clauses(self, model_id: str, text: str, relations: Sequence[str], count: int) -> list[RawClause]:
        self.capability(model_id)
        if model_id != INFER_MODEL:
            raise ProtocolError("unsupported_operation", f"{model_id} does not serve inference requests")
        if not relations:
            raise ProtocolError("unsupported_relation", "relations must be non-empty")
        for r in relations:
            if r not in RELATIONS:
                raise ProtocolError("unsupported_relation", f"relation {r!r} is not served")
        if count < 0:
            raise ProtocolError("bad_request", "count must be >= 0")
        out: list[RawClause] = []
        for relation in relations:
            table = self._clauses[relation]
            h = kernels.fnv1a64(struct.pack("<Q", self.seed) + relation.encode() + b"\x00" + text.encode("utf-8"))
            base = h % len(table)
            for i in range(min(count, len(table))):
                out.append(RawClause(relation, table[(base + i) % len(table)]))
        return out

    def extract_span(self, model_id: str, context: str, question: str) -> SpanResult:
        self.capability(model_id)
        if model_id != EXTRACT_MODEL:
            raise ProtocolError("unsupported_operation", f"{model_id} does not serve extraction requests")
        if not context or not question:
            raise ProtocolError("empty_input", "context and question must be non-empty")
        for m in _TOKEN_RE.finditer(context):
            token = m.group(0)
            if token[0].isupper() and token.casefold() not in self._stopwords:
                return SpanResult(token, m.start(), m.end(), 1.0)
        return SpanResult("", 0, 0, 0.0)
