# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot inner loops.

Semantics must stay bit-identical to ``pykernels.py``; the test suite
compares both backends on random inputs.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport uint8_t, uint32_t, uint64_t

cnp.import_array()

cdef uint64_t FNV_OFFSET_C = 0xCBF29CE484222325UL
cdef uint64_t FNV_PRIME_C = 0x100000001B3UL

FNV_OFFSET = FNV_OFFSET_C
FNV_PRIME = FNV_PRIME_C


cdef uint64_t _fnv1a64_bytes(const uint8_t[:] data) nogil:
    cdef uint64_t h = FNV_OFFSET_C
    cdef Py_ssize_t i
    for i in range(data.shape[0]):
        h = (h ^ <uint64_t>data[i]) * FNV_PRIME_C
    return h


def fnv1a64(bytes data) -> int:
    """FNV-1a 64-bit hash of a byte string."""
    if len(data) == 0:
        return FNV_OFFSET_C
    return _fnv1a64_bytes(data)


def hash_logit_row(bytes prefix, ids):
    """Mock-backend logit row: one logit in [-5, 5) per queried token id."""
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] ids_arr = np.ascontiguousarray(ids, dtype=np.uint64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(ids_arr.shape[0], dtype=np.float64)
    cdef uint64_t state
    if len(prefix) == 0:
        state = FNV_OFFSET_C
    else:
        state = _fnv1a64_bytes(prefix)
    cdef Py_ssize_t i
    cdef uint64_t h, v
    cdef int shift
    for i in range(ids_arr.shape[0]):
        h = state
        v = ids_arr[i]
        for shift in range(0, 32, 8):
            h = (h ^ ((v >> shift) & <uint64_t>0xFF)) * FNV_PRIME_C
        out[i] = <double>(h % <uint64_t>10007) / 10007.0 * 10.0 - 5.0
    return out


def repetition_penalty(logits, penalized, double theta):
    """Quotient-rule repetition penalty (divide positive, multiply negative)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] l = np.ascontiguousarray(logits, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1, cast=True] mask = np.ascontiguousarray(penalized, dtype=bool)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(l.shape[0], dtype=np.float64)
    cdef Py_ssize_t i
    for i in range(l.shape[0]):
        if mask[i]:
            out[i] = l[i] / theta if l[i] > 0.0 else l[i] * theta
        else:
            out[i] = l[i]
    return out


def ngram_banned(seq, prefix):
    """Token ids completing an n-gram already present in ``seq``."""
    cdef cnp.ndarray[cnp.uint32_t, ndim=1] s = np.ascontiguousarray(seq, dtype=np.uint32)
    cdef cnp.ndarray[cnp.uint32_t, ndim=1] p = np.ascontiguousarray(prefix, dtype=np.uint32)
    cdef Py_ssize_t m = p.shape[0]
    cdef Py_ssize_t n = s.shape[0]
    if m == 0 or n < m + 1:
        return np.empty(0, dtype=np.uint32)
    hits = []
    cdef Py_ssize_t i, j
    cdef bint ok
    for i in range(n - m):
        ok = True
        for j in range(m):
            if s[i + j] != p[j]:
                ok = False
                break
        if ok:
            hits.append(s[i + m])
    if not hits:
        return np.empty(0, dtype=np.uint32)
    return np.unique(np.asarray(hits, dtype=np.uint32))
