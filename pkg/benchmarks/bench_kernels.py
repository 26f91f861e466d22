"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three hot paths (arc feature hashing, arc scoring, SGD
training epochs) on synthetic corpora and prints a side-by-side table.

    python benchmarks/bench_kernels.py [--sentences N] [--dims D]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from dppal import kernels
from dppal.datagen import make_corpus
from dppal.parser import ParserModel, _encode_sentence, _pack_training_data


def best_of(fn, repeats=5):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(n_sentences: int, dims: int) -> None:
    backends = kernels.available_backends()
    if "numba" not in backends:
        raise SystemExit("numba backend unavailable; nothing to compare")
    corpus = make_corpus(n_sentences, rng_seed=99)
    encodings = [_encode_sentence(s) for s in corpus]
    rng = np.random.default_rng(0)
    weights = rng.standard_normal(dims)
    feat_tables = [
        backends["numpy"].arc_feature_ids(f, u, dims - 1) for f, u in encodings
    ]

    labels = sorted({t.gold_rel for s in corpus for t in s.tokens})
    model = ParserModel.initial(dims=dims, labels=labels)
    view = [s.with_annotated([t.index for t in s.tokens]) for s in corpus]
    packed = _pack_training_data(model, view)
    cand_feats, tok_start, tok_count, tok_gold, tok_rel, sent_start, sent_count = packed
    orders = np.stack([rng.permutation(len(sent_start)) for _ in range(5)]).astype(np.int64)

    def feature_job(k):
        def job():
            for f, u in encodings:
                k.arc_feature_ids(f, u, dims - 1)

        return job

    def score_job(k):
        def job():
            for table in feat_tables:
                k.score_arcs(table, weights)

        return job

    def train_job(k):
        def job():
            k.sgd_epochs(
                np.zeros(dims),
                np.zeros((len(labels), dims)),
                cand_feats,
                tok_start,
                tok_count,
                tok_gold,
                tok_rel,
                sent_start,
                sent_count,
                orders,
                0.1,
            )

        return job

    jobs = [
        (f"arc_feature_ids ({n_sentences} sentences)", feature_job),
        (f"score_arcs ({n_sentences} sentences)", score_job),
        (f"sgd_epochs (5 epochs, {len(tok_start)} tokens)", train_job),
    ]

    print(f"{'kernel':<44} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for label, make_job in jobs:
        timings = {}
        for name in ("numpy", "numba"):
            job = make_job(backends[name])
            job()  # warm up (jit compile on the numba side)
            timings[name] = best_of(job)
        print(
            f"{label:<44} {timings['numpy'] * 1e3:>8.2f}ms "
            f"{timings['numba'] * 1e3:>8.2f}ms {timings['numpy'] / timings['numba']:>7.1f}x"
        )


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sentences", type=int, default=500)
    ap.add_argument("--dims", type=int, default=2**20)
    args = ap.parse_args()
    bench(args.sentences, args.dims)
