"""Shared float kernels.

log_softmax / softmax live here, in exactly one implementation, so every
caller (mock scoring, decoder, tests) goes through the same arithmetic
path and byte-identical reproducibility holds no matter which kernel
backend (compiled or fallback) produced the logits.
"""

from __future__ import annotations

import numpy as np


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically-stable log-softmax over a 1-D float64 array.

    -inf entries are legal (masked tokens): they stay -inf and are
    excluded from the normalizer by exp(-inf) == 0.
    """
    x = np.asarray(logits, dtype=np.float64)
    m = np.max(x)
    if not np.isfinite(m):
        # all entries masked; nothing to normalize over
        return np.full_like(x, -np.inf)
    shifted = x - m
    return shifted - np.log(np.sum(np.exp(shifted)))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))
