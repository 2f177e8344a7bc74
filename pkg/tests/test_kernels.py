"""Kernel correctness: an independent FNV-1a oracle, and bit-exact parity
between the compiled and pure-Python backends."""

import struct

import numpy as np
import pytest

from retrogen._kernels import (
    KERNEL_BACKEND,
    fnv1a64,
    hash_logit_row,
    ngram_banned,
    pykernels,
    repetition_penalty,
)

try:
    from retrogen._kernels import _ckernels
except ImportError:
    _ckernels = None


def fnv1a64_oracle(data: bytes) -> int:
    """Straight transcription of the FNV-1a reference algorithm."""
    h = 14695981039346656037
    for b in data:
        h ^= b
        h = (h * 1099511628211) % 2**64
    return h


class TestFnv1a64:
    def test_known_vectors(self):
        # independently computed from the reference algorithm
        assert fnv1a64(b"") == 14695981039346656037
        assert fnv1a64(b"a") == fnv1a64_oracle(b"a")
        assert fnv1a64(b"hello") == fnv1a64_oracle(b"hello")

    def test_matches_oracle_on_random_bytes(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            data = rng.integers(0, 256, size=rng.integers(0, 64)).astype(np.uint8).tobytes()
            assert fnv1a64(data) == fnv1a64_oracle(data)


class TestHashLogitRow:
    def test_spec_example_value(self):
        # seed=7, tokens=[3,1], query 5: frozen from the hand oracle
        prefix = struct.pack("<Q", 7) + struct.pack("<I", 3) + struct.pack("<I", 1)
        row = hash_logit_row(prefix, np.array([5], dtype=np.uint32))
        assert row[0] == -4.749175577096032

    def test_range(self):
        prefix = struct.pack("<Q", 123)
        row = hash_logit_row(prefix, np.arange(4096, dtype=np.uint32))
        assert np.all(row >= -5.0) and np.all(row < 5.0)

    def test_matches_scalar_oracle(self):
        prefix = struct.pack("<Q", 99) + struct.pack("<I", 7)
        ids = np.arange(64, dtype=np.uint32)
        row = hash_logit_row(prefix, ids)
        for i in ids:
            h = fnv1a64_oracle(prefix + struct.pack("<I", int(i)))
            assert row[i] == (h % 10007) / 10007 * 10 - 5


class TestRepetitionPenaltyKernel:
    def test_quotient_rule(self):
        logits = np.array([2.0, -1.0, 0.0, 3.5], dtype=np.float64)
        mask = np.array([True, True, True, False])
        out = repetition_penalty(logits, mask, 10.0)
        assert out.tolist() == [0.2, -10.0, 0.0, 3.5]

    def test_unpenalized_bit_identical(self):
        rng = np.random.default_rng(3)
        logits = rng.uniform(-5, 5, 100)
        mask = rng.random(100) < 0.5
        out = repetition_penalty(logits, mask, 7.3)
        assert np.array_equal(out[~mask], logits[~mask])


class TestNgramBannedKernel:
    def test_examples(self):
        assert ngram_banned(np.array([1, 2, 3, 1, 2], np.uint32), np.array([1, 2], np.uint32)).tolist() == [3]
        assert ngram_banned(np.array([5, 9, 7, 9], np.uint32), np.array([9], np.uint32)).tolist() == [7]

    def test_no_completion_at_sequence_end(self):
        # the final [1,2] has nothing after it and must not ban anything extra
        out = ngram_banned(np.array([9, 9, 1, 2], np.uint32), np.array([1, 2], np.uint32))
        assert out.tolist() == []

    def test_multiple_hits_unique_sorted(self):
        seq = np.array([4, 1, 5, 4, 1, 6, 4, 1, 5], np.uint32)
        out = ngram_banned(seq, np.array([4, 1], np.uint32))
        assert out.tolist() == [5, 6]


@pytest.mark.skipif(_ckernels is None, reason="compiled kernels unavailable")
class TestBackendParity:
    """Compiled and fallback kernels must agree bit-for-bit."""

    def test_backend_selection(self):
        import os

        expected = "python" if os.environ.get("RETROGEN_PURE_PYTHON") else "compiled"
        assert KERNEL_BACKEND == expected

    def test_hash_parity(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            prefix = rng.integers(0, 256, size=rng.integers(1, 40)).astype(np.uint8).tobytes()
            ids = rng.integers(0, 2**20, size=200).astype(np.uint32)
            a = _ckernels.hash_logit_row(prefix, ids)
            b = pykernels.hash_logit_row(prefix, ids)
            assert np.array_equal(a, b)
            assert _ckernels.fnv1a64(prefix) == pykernels.fnv1a64(prefix)

    def test_penalty_parity(self):
        rng = np.random.default_rng(23)
        logits = rng.uniform(-8, 8, 500)
        mask = rng.random(500) < 0.3
        for theta in (1.0, 2.0, 10.0, 3.7):
            a = _ckernels.repetition_penalty(logits, mask, theta)
            b = pykernels.repetition_penalty(logits, mask, theta)
            assert np.array_equal(a, b)

    def test_ngram_parity(self):
        rng = np.random.default_rng(29)
        for _ in range(100):
            seq = rng.integers(0, 6, size=rng.integers(0, 30)).astype(np.uint32)
            m = int(rng.integers(1, 3))
            prefix = rng.integers(0, 6, size=m).astype(np.uint32)
            a = _ckernels.ngram_banned(seq, prefix)
            b = pykernels.ngram_banned(seq, prefix)
            assert np.array_equal(a, b)
