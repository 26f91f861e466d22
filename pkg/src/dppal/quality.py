"""Sentence- and token-level selection quality measures.

Four strategies share one scalar interface: marginal-probability
uncertainty (AMP), committee disagreement under feature dropout (BALD),
uncertainty weighted by pool representativeness (ID), and seeded random
scores so the random baseline flows through the same selection machinery.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .diversity import DiversityFeature
from .hashing import derive_seed
from .parser import ParserModel, score_sentence
from .structured import MarginalTable
from .treebank import Sentence
from .trees import ParseTree, decode_cle

STRATEGIES = ("RANDOM", "AMP", "BALD", "ID")


@dataclass(frozen=True)
class QualityScore:
    sentence_id: str
    sentence_q: float
    token_q: tuple[float, ...]
    strategy: str

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")


def amp(marginals: MarginalTable, decoded: ParseTree, sentence_id: str = "") -> QualityScore:
    """1 minus the mean marginal probability of the decoded arcs.

    Token-level value: 1 minus that token's decoded-arc marginal.
    """
    if decoded.n != marginals.n:
        raise ValueError("decoded tree length does not match marginal table")
    heads = np.asarray(decoded.heads, dtype=np.int64)
    arc_marg = marginals.mar[heads, np.arange(marginals.n)]
    token_q = 1.0 - arc_marg
    return QualityScore(
        sentence_id=sentence_id,
        sentence_q=float(token_q.mean()),
        token_q=tuple(float(x) for x in token_q),
        strategy="AMP",
    )


def committee_heads(
    model: ParserModel, sentence: Sentence, k: int, rng_seed: int, single_root: bool = False
) -> np.ndarray:
    """Predicted head arrays from k dropout-perturbed scoring passes."""
    rows = []
    for member in range(k):
        table = score_sentence(model, sentence, dropout_seed=derive_seed(rng_seed, "bald", member))
        rows.append(decode_cle(table, single_root=single_root).heads)
    return np.array(rows, dtype=np.int64)


def disagreement_token_q(heads: np.ndarray) -> np.ndarray:
    """Per-token 1 - mode_count/k over a (k, n) committee prediction matrix.

    ``bincount`` resolves mode ties toward the smaller head index.
    """
    k, n = heads.shape
    token_q = np.empty(n)
    for j in range(n):
        counts = np.bincount(heads[:, j])
        token_q[j] = 1.0 - counts.max() / k
    return token_q


def bald(
    model: ParserModel,
    sentence: Sentence,
    k: int,
    rng_seed: int,
    single_root: bool = False,
) -> QualityScore:
    """Committee disagreement: 1 - (mode count / k) per token, averaged.

    Mode ties break toward the smaller head index.
    """
    if k < 1:
        raise ValueError(f"committee size must be >= 1, got {k}")
    heads = committee_heads(model, sentence, k, rng_seed, single_root)
    token_q = disagreement_token_q(heads)
    return QualityScore(
        sentence_id=sentence.id,
        sentence_q=float(token_q.mean()),
        token_q=tuple(float(x) for x in token_q),
        strategy="BALD",
    )


def information_density(
    amp_scores: Sequence[QualityScore], features: Sequence[DiversityFeature]
) -> list[QualityScore]:
    """AMP scaled by mean cosine similarity to the whole pool (self included).

    The self-similarity term enters as an exact 1.0 (so singleton pools
    give ID = AMP bit-for-bit), and the density factor is clamped to
    [0, 1]: signed projection features can produce slightly negative pool
    means, and quality must stay non-negative for kernel construction.
    """
    if not amp_scores:
        raise ValueError("information density needs a non-empty pool")
    if len(amp_scores) != len(features):
        raise ValueError("quality/feature pools differ in size")
    by_owner = {f.owner: f for f in features}
    mat = np.stack([by_owner[q.sentence_id].vector for q in amp_scores])
    colsum = mat.sum(axis=0)
    n_pool = mat.shape[0]
    density = np.clip(((mat * (colsum - mat)).sum(axis=1) + 1.0) / n_pool, 0.0, 1.0)
    out = []
    for q, d in zip(amp_scores, density):
        out.append(
            QualityScore(
                sentence_id=q.sentence_id,
                sentence_q=float(q.sentence_q * d),
                token_q=tuple(float(x * d) for x in q.token_q),
                strategy="ID",
            )
        )
    return out


def random_quality(pool: Sequence[Sentence], rng_seed: int) -> list[QualityScore]:
    """i.i.d. uniform(0,1) scores per sentence and token under the seed."""
    rng = np.random.default_rng(derive_seed(rng_seed, "random-quality"))
    out = []
    for s in pool:
        token_q = rng.random(s.n)
        out.append(
            QualityScore(
                sentence_id=s.id,
                sentence_q=float(rng.random()),
                token_q=tuple(float(x) for x in token_q),
                strategy="RANDOM",
            )
        )
    return out


def write_quality_csv(scores: Sequence[QualityScore], path: str | Path) -> None:
    """Diagnostic dump: one row per sentence with the token values inlined."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sentence_id", "strategy", "sentence_q", "token_q"])
        for q in scores:
            writer.writerow(
                [q.sentence_id, q.strategy, repr(q.sentence_q), " ".join(repr(x) for x in q.token_q)]
            )
