"""Unit-normalized diversity features and intra-batch diversity metrics.

Two feature families describe candidates: averaged projections of token
indicators (a fixed random stand-in for contextual encodings) and
tf-idf-weighted counts of labeled grandparent/parent/token subgraphs
extracted from predicted trees.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .hashing import derive_seed, hash_string, mix
from .treebank import Sentence
from .trees import ParseTree

AVERAGED = "AVERAGED"
SUBGRAPH = "SUBGRAPH"
FEATURE_KINDS = (AVERAGED, SUBGRAPH)

ROOT_RELATION_SYMBOL = "⊤"  # grandparent relation for tokens whose parent is the root

DEFAULT_PROJECTION_DIM = 64
DEFAULT_PROJECTION_SEED = 1_234_567


@dataclass(frozen=True)
class DiversityFeature:
    vector: np.ndarray
    kind: str
    owner: object  # sentence id, or (sentence id, token index)

    def __post_init__(self) -> None:
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        norm = float(np.linalg.norm(self.vector))
        if not math.isclose(norm, 1.0, abs_tol=1e-9):
            raise ValueError(f"feature vector norm {norm} != 1")


def _unit(vec: np.ndarray, dim_fallback: int) -> np.ndarray:
    norm = np.linalg.norm(vec)
    if norm < 1e-12:
        out = np.zeros(dim_fallback)
        out[0] = 1.0  # degenerate guard: deterministic basis vector
        return out
    return vec / norm


class AveragedProjection:
    """Fixed seeded random projection of token surface indicators.

    Every indicator (form, UPOS, form/UPOS conjunction, neighbor UPOS
    pairs) maps to a deterministic gaussian direction; a token is the sum
    of its indicator directions and a sentence the mean over tokens, both
    unit-normalized.
    """

    def __init__(self, dim: int = DEFAULT_PROJECTION_DIM, seed: int = DEFAULT_PROJECTION_SEED):
        self.dim = dim
        self.seed = seed
        self._cache: dict[int, np.ndarray] = {}

    def _direction(self, indicator: int) -> np.ndarray:
        vec = self._cache.get(indicator)
        if vec is None:
            rng = np.random.default_rng(derive_seed(self.seed, "proj", indicator))
            vec = rng.standard_normal(self.dim)
            self._cache[indicator] = vec
        return vec

    def _token_indicators(self, sentence: Sentence, index: int) -> list[int]:
        tok = sentence.tokens[index - 1]
        prev_u = sentence.tokens[index - 2].upos if index >= 2 else "<bos>"
        next_u = sentence.tokens[index].upos if index < sentence.n else "<eos>"
        f, u = hash_string(tok.form), hash_string("\x01" + tok.upos)
        return [
            mix(1, f),
            mix(2, u),
            mix(3, f, u),
            mix(4, hash_string("\x01" + prev_u), u),
            mix(5, u, hash_string("\x01" + next_u)),
        ]

    def _token_raw(self, sentence: Sentence, index: int) -> np.ndarray:
        vec = np.zeros(self.dim)
        for ind in self._token_indicators(sentence, index):
            vec += self._direction(ind)
        return vec

    def sentence_feature(self, sentence: Sentence) -> DiversityFeature:
        mean = np.mean([self._token_raw(sentence, i) for i in range(1, sentence.n + 1)], axis=0)
        return DiversityFeature(vector=_unit(mean, self.dim), kind=AVERAGED, owner=sentence.id)

    def token_feature(self, sentence: Sentence, index: int) -> DiversityFeature:
        vec = _unit(self._token_raw(sentence, index), self.dim)
        return DiversityFeature(vector=vec, kind=AVERAGED, owner=(sentence.id, index))


def averaged_features(sentence: Sentence, projection: AveragedProjection) -> DiversityFeature:
    """Sentence-level averaged projection feature."""
    return projection.sentence_feature(sentence)


@dataclass(frozen=True)
class SubgraphVocabulary:
    """Relation-pair dimensions with document frequencies from a fitted pool."""

    index: dict
    df: np.ndarray
    n_documents: int

    @property
    def dim(self) -> int:
        return len(self.index) + 1  # reserved out-of-vocabulary dimension

    def idf(self, key: tuple[str, str]) -> float:
        df = int(self.df[self.index[key]]) if key in self.index else 0
        return math.log((1 + self.n_documents) / (1 + df)) + 1.0


def subgraph_keys(tree: ParseTree) -> list[tuple[str, str]]:
    """One (grandparent-relation, relation) key per token of a labeled tree."""
    if tree.rels is None:
        raise ValueError("subgraph keys need a labeled tree")
    keys = []
    for m in range(1, tree.n + 1):
        h = tree.heads[m - 1]
        r1 = ROOT_RELATION_SYMBOL if h == 0 else tree.rels[h - 1]
        keys.append((r1, tree.rels[m - 1]))
    return keys


def fit_subgraph_vocab(items: Sequence[tuple[Sentence, ParseTree]]) -> SubgraphVocabulary:
    """Document frequencies over the pool's predicted trees, one fit per round."""
    if not items:
        raise ValueError("cannot fit a subgraph vocabulary on an empty pool")
    df: dict[tuple[str, str], int] = {}
    for _, tree in items:
        for key in set(subgraph_keys(tree)):
            df[key] = df.get(key, 0) + 1
    keys = sorted(df)
    return SubgraphVocabulary(
        index={k: i for i, k in enumerate(keys)},
        df=np.array([df[k] for k in keys], dtype=np.int64),
        n_documents=len(items),
    )


def subgraph_counts(
    sentence: Sentence, predicted: ParseTree, vocab: SubgraphVocabulary
) -> DiversityFeature:
    """tf-idf-weighted subgraph counts of the predicted tree, unit-normalized."""
    if vocab.n_documents < 1:
        raise RuntimeError("subgraph vocabulary is not fitted")
    if predicted.n != sentence.n:
        raise ValueError("predicted tree length does not match sentence")
    vec = np.zeros(vocab.dim)
    for key in subgraph_keys(predicted):
        dim = vocab.index.get(key, vocab.dim - 1)
        vec[dim] += vocab.idf(key)
    return DiversityFeature(vector=_unit(vec, vocab.dim), kind=SUBGRAPH, owner=sentence.id)


def token_subgraph_feature(
    sentence: Sentence, predicted: ParseTree, vocab: SubgraphVocabulary, index: int
) -> DiversityFeature:
    """One-hot (idf-weighted) subgraph key of a single token."""
    if vocab.n_documents < 1:
        raise RuntimeError("subgraph vocabulary is not fitted")
    key = subgraph_keys(predicted)[index - 1]
    vec = np.zeros(vocab.dim)
    vec[vocab.index.get(key, vocab.dim - 1)] = vocab.idf(key)
    return DiversityFeature(vector=_unit(vec, vocab.dim), kind=SUBGRAPH, owner=(sentence.id, index))


def ibad_ibmd(features: Sequence[DiversityFeature] | np.ndarray) -> tuple[float, float]:
    """Intra-batch average and minimal cosine distance of a batch.

    Average: mean of 1 - cos over all pairs i != j.  Minimal: mean over
    items of the distance to their nearest other item.
    """
    if isinstance(features, np.ndarray):
        mat = features
    else:
        mat = np.stack([f.vector for f in features])
    b = mat.shape[0]
    if b < 2:
        raise ValueError(f"intra-batch diversity needs >= 2 items, got {b}")
    # rounding can push |cos| past 1 for (near-)duplicate unit vectors
    dist = np.clip(1.0 - mat @ mat.T, 0.0, 2.0)
    off_sum = dist.sum() - np.trace(dist)
    ibad = off_sum / (b * (b - 1))
    np.fill_diagonal(dist, np.inf)
    ibmd = dist.min(axis=1).mean()
    return float(ibad), float(ibmd)


def write_features_csv(features: Sequence[DiversityFeature], path: str | Path) -> None:
    """Export feature rows for external visualization tooling."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["owner", "kind", "vector"])
        for f in features:
            owner = f.owner if isinstance(f.owner, str) else f"{f.owner[0]}:{f.owner[1]}"
            writer.writerow([owner, f.kind, " ".join(repr(float(x)) for x in f.vector)])
