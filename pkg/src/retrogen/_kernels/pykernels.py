"""Pure-Python (numpy) kernel fallback.

Mirrors ``_ckernels.pyx`` exactly. Every function here must produce
bit-identical output to the compiled version: the hashing is integer
arithmetic (exact by construction) and the float maps are single IEEE-754
operations applied elementwise, which round identically in C and numpy.
"""

from __future__ import annotations

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

_PRIME_U64 = np.uint64(FNV_PRIME)
_BYTE_MASK = np.uint64(0xFF)


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash of a byte string."""
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _MASK64
    return h


def hash_logit_row(prefix: bytes, ids: np.ndarray) -> np.ndarray:
    """Mock-backend logit row: one logit in [-5, 5) per queried token id.

    Each logit is FNV-1a-64 over ``prefix`` followed by the id's 4
    little-endian bytes, reduced mod 10007 and scaled. ``prefix`` already
    encodes seed and context; see the mock backend for its layout.
    """
    ids = np.ascontiguousarray(ids, dtype=np.uint64)
    state = np.uint64(fnv1a64(prefix))
    h = np.full(ids.shape, state, dtype=np.uint64)
    with np.errstate(over="ignore"):
        for shift in (0, 8, 16, 24):
            b = (ids >> np.uint64(shift)) & _BYTE_MASK
            h = (h ^ b) * _PRIME_U64
    return (h % np.uint64(10007)).astype(np.float64) / 10007.0 * 10.0 - 5.0


def repetition_penalty(logits: np.ndarray, penalized: np.ndarray, theta: float) -> np.ndarray:
    """Quotient-rule repetition penalty.

    Penalized positions: positive logits divided by theta, the rest
    multiplied by theta. Unpenalized positions pass through bit-identical.
    """
    logits = np.asarray(logits, dtype=np.float64)
    penalized = np.asarray(penalized, dtype=bool)
    return np.where(penalized, np.where(logits > 0.0, logits / theta, logits * theta), logits)


def ngram_banned(seq: np.ndarray, prefix: np.ndarray) -> np.ndarray:
    """Token ids that would complete an already-seen n-gram.

    Returns every id t such that prefix + [t] occurs contiguously in
    ``seq`` (n = len(prefix) + 1). Sorted, unique.
    """
    seq = np.ascontiguousarray(seq, dtype=np.uint32)
    prefix = np.ascontiguousarray(prefix, dtype=np.uint32)
    m = prefix.shape[0]
    if m == 0 or seq.shape[0] < m + 1:
        return np.empty(0, dtype=np.uint32)
    span = seq.shape[0] - m
    match = np.ones(span, dtype=bool)
    for j in range(m):
        match &= seq[j : span + j] == prefix[j]
    return np.unique(seq[np.nonzero(match)[0] + m])
