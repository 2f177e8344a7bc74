"""Kernel backend selection.

The compiled Cython module is preferred when importable; otherwise the
numpy fallback takes over with identical semantics. Set
``RETROGEN_PURE_PYTHON=1`` to force the fallback (used by the benchmark
and the parity tests).
"""

from __future__ import annotations

import os

from . import pykernels

try:
    from . import _ckernels

    _has_compiled = True
except ImportError:
    _ckernels = None  # type: ignore[assignment]
    _has_compiled = False

if _has_compiled and not os.environ.get("RETROGEN_PURE_PYTHON"):
    _impl = _ckernels
    KERNEL_BACKEND = "compiled"
else:
    _impl = pykernels
    KERNEL_BACKEND = "python"

FNV_OFFSET = pykernels.FNV_OFFSET
FNV_PRIME = pykernels.FNV_PRIME

fnv1a64 = _impl.fnv1a64
hash_logit_row = _impl.hash_logit_row
repetition_penalty = _impl.repetition_penalty
ngram_banned = _impl.ngram_banned

__all__ = [
    "KERNEL_BACKEND",
    "FNV_OFFSET",
    "FNV_PRIME",
    "fnv1a64",
    "hash_logit_row",
    "repetition_penalty",
    "ngram_banned",
    "pykernels",
    "_has_compiled",
]
