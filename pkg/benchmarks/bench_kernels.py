#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python/numpy fallback.

    python benchmarks/bench_kernels.py [--repeats N]

Covers the three hot paths: mock logit-row hashing (dominates decode
time), the repetition-penalty transform, and the n-gram ban scan. Also
times an end-to-end beam decode against the in-process mock with each
backend, and verifies both produce identical results while doing so.
"""

import argparse
import struct
import time

import numpy as np

from retrogen._kernels import _has_compiled, pykernels

if _has_compiled:
    from retrogen._kernels import _ckernels
else:
    _ckernels = None


def bench(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def fmt_row(name, t_py, t_c):
    if t_c is None:
        return f"{name:<28} {t_py * 1e3:>10.3f} ms {'-':>12} {'-':>8}"
    return f"{name:<28} {t_py * 1e3:>10.3f} ms {t_c * 1e3:>9.3f} ms {t_py / t_c:>7.1f}x"


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(7)
    prefix = struct.pack("<Q", 7) + struct.pack("<I", 3) + struct.pack("<I", 1)
    ids_small = np.arange(258, dtype=np.uint32)
    ids_large = np.arange(50_257, dtype=np.uint32)
    logits = rng.uniform(-8, 8, 50_257)
    mask = rng.random(50_257) < 0.1
    seq = rng.integers(0, 50, size=4000).astype(np.uint32)
    pre = seq[-2:].copy()

    cases = [
        ("logit row, vocab 258 x1000", lambda k: [k.hash_logit_row(prefix, ids_small) for _ in range(1000)]),
        ("logit row, vocab 50k x10", lambda k: [k.hash_logit_row(prefix, ids_large) for _ in range(10)]),
        ("penalty, 50k logits x100", lambda k: [k.repetition_penalty(logits, mask, 10.0) for _ in range(100)]),
        ("ngram scan, 4k tokens x1000", lambda k: [k.ngram_banned(seq, pre) for _ in range(1000)]),
    ]

    print(f"{'kernel':<28} {'python':>13} {'compiled':>12} {'speedup':>8}")
    for name, runner in cases:
        a = runner(pykernels)
        t_py = bench(lambda: runner(pykernels), args.repeats)
        if _ckernels is not None:
            b = runner(_ckernels)
            for x, y in zip(a, b):
                assert np.array_equal(np.asarray(x), np.asarray(y)), f"kernel mismatch in {name}"
            t_c = bench(lambda: runner(_ckernels), args.repeats)
        else:
            t_c = None
        print(fmt_row(name, t_py, t_c))

    # end-to-end decode comparison (subprocess-free: swap the kernel module)
    import retrogen._kernels as kernels
    from retrogen.backend.mock import MockBackend
    from retrogen.decoding import beam_search
    from retrogen.story import GenerationConfig

    def decode():
        backend = MockBackend(seed=7)
        config = GenerationConfig(beam_width=8, max_length=40)
        return beam_search(backend, "mock-causal", [10, 20], horizon=[5, 6, 7], config=config)

    originals = (kernels.hash_logit_row, kernels.repetition_penalty, kernels.ngram_banned)
    impls = [("python", pykernels)] + ([("compiled", _ckernels)] if _ckernels else [])
    results = {}
    for label, impl in impls:
        kernels.hash_logit_row = impl.hash_logit_row
        kernels.repetition_penalty = impl.repetition_penalty
        kernels.ngram_banned = impl.ngram_banned
        results[label] = decode()
        t = bench(decode, args.repeats)
        print(f"{'beam decode (end to end)':<28} {label:>8}: {t * 1e3:.1f} ms")
    kernels.hash_logit_row, kernels.repetition_penalty, kernels.ngram_banned = originals
    if len(results) == 2:
        assert results["python"] == results["compiled"], "decode results differ between backends"
        print("decode results identical across backends")


if __name__ == "__main__":
    main()
