"""Wire-protocol value types shared by every backend implementation.

All numbers on the wire are IEEE-754 doubles; token ids are unsigned
32-bit integers. See ``server.py`` for the endpoint layout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from ..errors import ContractViolation, ProtocolError

RELATIONS = ("xIntent", "xNeed")
MODEL_KINDS = ("causal", "seq2seq", "extractive")


@dataclass(frozen=True)
class ModelCapability:
    model_id: str
    vocab_size: int
    kind: str
    max_context: int
    eos_token_id: int | None = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ContractViolation(f"unknown model kind: {self.kind}")
        if self.kind in ("causal", "seq2seq") and self.vocab_size < 2:
            raise ContractViolation("causal/seq2seq models need vocab_size >= 2")

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "vocab_size": self.vocab_size,
            "kind": self.kind,
            "max_context": self.max_context,
            "eos_token_id": self.eos_token_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelCapability":
        return cls(
            model_id=data["model_id"],
            vocab_size=int(data["vocab_size"]),
            kind=data["kind"],
            max_context=int(data["max_context"]),
            eos_token_id=None if data.get("eos_token_id") is None else int(data["eos_token_id"]),
        )


@dataclass(frozen=True)
class TokenSeq:
    """A token-id sequence bound to the model whose vocab it lives in."""

    tokens: tuple[int, ...]
    model_id: str

    def __post_init__(self):
        if any(t < 0 for t in self.tokens):
            raise ContractViolation("token ids must be non-negative")

    def __len__(self) -> int:
        return len(self.tokens)


class LogitMap:
    """Sparse-or-complete map from token id to logit.

    Entries are kept as parallel arrays sorted by id. ``complete`` means
    every id of the model's vocab is present (the mock always returns
    complete maps; truncating backends may not).
    """

    __slots__ = ("ids", "logits", "complete")

    def __init__(self, ids: Sequence[int], logits: Sequence[float], complete: bool):
        ids_arr = np.asarray(ids, dtype=np.uint32)
        logits_arr = np.asarray(logits, dtype=np.float64)
        if ids_arr.shape != logits_arr.shape:
            raise ContractViolation("ids and logits must be parallel")
        if not np.all(np.isfinite(logits_arr)):
            raise ContractViolation("logits must all be finite")
        order = np.argsort(ids_arr, kind="stable")
        ids_arr = ids_arr[order]
        logits_arr = logits_arr[order]
        if ids_arr.size and np.any(ids_arr[1:] == ids_arr[:-1]):
            raise ContractViolation("duplicate token id in logit map")
        self.ids = ids_arr
        self.logits = logits_arr
        self.complete = complete

    def __len__(self) -> int:
        return int(self.ids.size)

    def __contains__(self, token_id: int) -> bool:
        i = np.searchsorted(self.ids, token_id)
        return i < self.ids.size and self.ids[i] == token_id

    def __getitem__(self, token_id: int) -> float:
        i = np.searchsorted(self.ids, token_id)
        if i >= self.ids.size or self.ids[i] != token_id:
            raise KeyError(token_id)
        return float(self.logits[i])

    def items(self) -> Iterator[tuple[int, float]]:
        for i, l in zip(self.ids.tolist(), self.logits.tolist()):
            yield i, l

    def to_entries(self) -> list[list]:
        """Wire form: [[id, logit], ...] sorted by id."""
        return [[i, l] for i, l in self.items()]

    @classmethod
    def from_entries(cls, entries: Sequence[Sequence], complete: bool) -> "LogitMap":
        return cls([e[0] for e in entries], [e[1] for e in entries], complete)


@dataclass(frozen=True)
class RawClause:
    """A commonsense inference as it crosses the wire (no window tag yet)."""

    relation: str
    text: str

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ContractViolation(f"unsupported relation: {self.relation}")
        if not self.text:
            raise ContractViolation("clause text must be non-empty")


@dataclass(frozen=True)
class SpanResult:
    """Extractive-QA answer: a span of the given context."""

    answer: str
    start: int
    end: int
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ContractViolation("confidence must be within [0, 1]")

    def check_against(self, context: str) -> None:
        if context[self.start : self.end] != self.answer:
            raise ContractViolation("span does not slice back to the answer text")


def validate_token_ids(tokens: Sequence[int], vocab_size: int) -> None:
    for t in tokens:
        if not 0 <= t < vocab_size:
            raise ProtocolError("invalid_token", f"token id {t} outside vocab of size {vocab_size}")
