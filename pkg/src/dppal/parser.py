"""Edge-factored statistical dependency parser over hashed sparse features.

Exposes the probabilistic interface the rest of the package consumes:
per-modifier attachment distributions (column softmax over candidate
heads), tree scores as sums of log attachment probabilities, maximum
spanning arborescence decoding, and an independent per-arc relation
labeler.  Training minimizes per-token cross-entropy on annotated tokens
only, so partially annotated sentences are first-class inputs.

Scoring is read-only on the model and safe to parallelize across
sentences; training is strictly sequential (the SGD visit order is part
of the determinism contract).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .hashing import MASK64, derive_seed, hash_string, splitmix64
from .treebank import Sentence
from .trees import ParseTree, decode_cle, is_arborescence  # noqa: F401  (decode_cle re-exported)

DEFAULT_HASH_DIM = 2**20

_ROOT_FORM_HASH = splitmix64(hash_string("<root-form>"))
_ROOT_UPOS_HASH = splitmix64(hash_string("<root-upos>"))


@dataclass(frozen=True)
class HyperParams:
    learning_rate: float = 0.1
    epochs: int = 30
    p_drop: float = 0.33


@dataclass(frozen=True)
class FeatureVector:
    """Sparse indicator vector; duplicate hashed ids are merged into counts."""

    indices: tuple[int, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("feature indices must be strictly increasing")
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values lengths differ")


@dataclass(eq=False)
class ArcScoreTable:
    """Raw arc log-scores and the column-normalized attachment distribution.

    ``log_scores[h, m-1]`` scores head h for modifier m; self-attachment
    cells carry -inf and zero probability.  Valid probability cells are
    clamped to >= 1e-12 so downstream logs stay finite.
    """

    n: int
    log_scores: np.ndarray
    att_prob: np.ndarray

    @classmethod
    def from_log_scores(cls, log_scores: np.ndarray) -> "ArcScoreTable":
        n = log_scores.shape[1]
        s = log_scores.astype(np.float64).copy()
        s[np.arange(1, n + 1), np.arange(n)] = -np.inf
        z = s - s.max(axis=0, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=0, keepdims=True)
        p = np.maximum(p, 1e-12)
        p[np.arange(1, n + 1), np.arange(n)] = 0.0
        return cls(n=n, log_scores=s, att_prob=p)

    @classmethod
    def from_att_prob(cls, att_prob: np.ndarray) -> "ArcScoreTable":
        """Build a table directly from attachment probabilities (tests, oracles)."""
        n = att_prob.shape[1]
        p = att_prob.astype(np.float64).copy()
        p[np.arange(1, n + 1), np.arange(n)] = 0.0
        with np.errstate(divide="ignore"):
            s = np.log(p)
        return cls(n=n, log_scores=s, att_prob=p)


@dataclass(eq=False)
class ParserModel:
    """Hashed log-linear arc scorer plus per-label relation weights."""

    dims: int
    labels: tuple[str, ...]
    arc_weights: np.ndarray
    rel_weights: np.ndarray
    hyper: HyperParams = field(default_factory=HyperParams)
    loss_history: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.dims & (self.dims - 1) or self.dims <= 0:
            raise ValueError(f"hash dim must be a power of two, got {self.dims}")
        if self.labels != tuple(sorted(self.labels)):
            raise ValueError("labels must be lexicographically sorted")

    @classmethod
    def initial(
        cls,
        dims: int = DEFAULT_HASH_DIM,
        labels: Sequence[str] = (),
        hyper: HyperParams | None = None,
    ) -> "ParserModel":
        labels = tuple(sorted(set(labels)))
        return cls(
            dims=dims,
            labels=labels,
            arc_weights=np.zeros(dims),
            rel_weights=np.zeros((len(labels), dims)),
            hyper=hyper or HyperParams(),
        )

    def label_id(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"relation label {label!r} not in model inventory") from None


@lru_cache(maxsize=65536)
def _encode_sentence(sentence: Sentence) -> tuple[np.ndarray, np.ndarray]:
    """uint64 form/UPOS hashes with the root pseudo-token at position 0."""
    n = sentence.n
    form_h = np.empty(n + 1, dtype=np.uint64)
    upos_h = np.empty(n + 1, dtype=np.uint64)
    form_h[0] = _ROOT_FORM_HASH
    upos_h[0] = _ROOT_UPOS_HASH
    for t in sentence.tokens:
        form_h[t.index] = hash_string(t.form)
        upos_h[t.index] = hash_string("\x01" + t.upos)
    return form_h, upos_h


def arc_feature_table(sentence: Sentence, dims: int = DEFAULT_HASH_DIM) -> np.ndarray:
    """int64[(n+1), n, F] hashed feature ids for all candidate arcs."""
    form_h, upos_h = _encode_sentence(sentence)
    return kernels.arc_feature_ids(form_h, upos_h, dims - 1)


def extract_arc_features(
    sentence: Sentence, h: int, m: int, dims: int = DEFAULT_HASH_DIM
) -> FeatureVector:
    """Sparse indicator features for one (head, modifier) candidate."""
    n = sentence.n
    if not (0 <= h <= n and 1 <= m <= n):
        raise ValueError(f"arc ({h}, {m}) out of range for length {n}")
    if h == m:
        raise ValueError("self-attachment has no features")
    row = arc_feature_table(sentence, dims)[h, m - 1]
    idx, counts = np.unique(row, return_counts=True)
    return FeatureVector(
        indices=tuple(int(i) for i in idx), values=tuple(float(c) for c in counts)
    )


def _dropout_keep(feat_ids: np.ndarray, seed: int, p_drop: float) -> np.ndarray:
    """Per-feature-id keep mask: an id is on or off consistently within a pass."""
    u = feat_ids.astype(np.uint64) ^ np.uint64(seed & MASK64)
    u = u + np.uint64(0x9E3779B97F4A7C15)
    u = (u ^ (u >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    u = (u ^ (u >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    u = u ^ (u >> np.uint64(31))
    unit = (u >> np.uint64(11)).astype(np.float64) / float(1 << 53)
    return (unit >= p_drop).astype(np.float64)


def score_sentence(
    model: ParserModel, sentence: Sentence, dropout_seed: int | None = None
) -> ArcScoreTable:
    """ArcScoreTable for one sentence; a dropout seed perturbs the features.

    With a seed, each hashed feature id is zeroed independently with
    probability ``hyper.p_drop`` (the stochastic committee used by the
    disagreement quality measure).
    """
    feat_ids = arc_feature_table(sentence, model.dims)
    if dropout_seed is not None and model.hyper.p_drop > 0.0:
        keep = _dropout_keep(feat_ids, dropout_seed, model.hyper.p_drop)
        raw = kernels.score_arcs_masked(feat_ids, model.arc_weights, keep)
    else:
        raw = kernels.score_arcs(feat_ids, model.arc_weights)
    return ArcScoreTable.from_log_scores(raw)


def tree_score(table: ArcScoreTable, tree: ParseTree) -> float:
    """Sum of log attachment probabilities over the tree's arcs."""
    if tree.n != table.n:
        raise ValueError(f"tree length {tree.n} does not match table length {table.n}")
    heads = np.asarray(tree.heads, dtype=np.int64)
    return float(np.log(table.att_prob[heads, np.arange(table.n)]).sum())


def label_relations(model: ParserModel, sentence: Sentence, heads) -> tuple[str, ...]:
    """Independently label each arc; float ties go to the smaller label."""
    if not model.labels:
        raise RuntimeError("relation label inventory is empty")
    heads = [int(h) for h in heads]
    if len(heads) != sentence.n or not is_arborescence(heads):
        raise ValueError(f"invalid head array {heads} for sentence {sentence.id!r}")
    feat_ids = arc_feature_table(sentence, model.dims)
    out = []
    for m, h in enumerate(heads, start=1):
        ids = feat_ids[h, m - 1]
        scores = model.rel_weights[:, ids].sum(axis=1)
        out.append(model.labels[int(np.argmax(scores))])
    return tuple(out)


def _pack_training_data(model: ParserModel, sentences: Sequence[Sentence]):
    cand_rows: list[np.ndarray] = []
    tok_start: list[int] = []
    tok_count: list[int] = []
    tok_gold: list[int] = []
    tok_rel: list[int] = []
    sent_start: list[int] = []
    sent_count: list[int] = []
    offset = 0
    for s in sentences:
        annotated = [t for t in s.tokens if t.annotated]
        if not annotated:
            continue
        feat_ids = arc_feature_table(s, model.dims)
        sent_start.append(len(tok_start))
        sent_count.append(len(annotated))
        for t in annotated:
            m = t.index
            cands = [h for h in range(s.n + 1) if h != m]
            cand_rows.append(feat_ids[cands, m - 1, :])
            tok_start.append(offset)
            tok_count.append(len(cands))
            offset += len(cands)
            gold = t.gold_head
            tok_gold.append(gold if gold < m else gold - 1)
            tok_rel.append(model.label_id(t.gold_rel) if model.labels else -1)
    if not tok_start:
        raise ValueError("no annotated tokens to train on")
    return (
        np.ascontiguousarray(np.concatenate(cand_rows, axis=0)),
        np.array(tok_start, dtype=np.int64),
        np.array(tok_count, dtype=np.int64),
        np.array(tok_gold, dtype=np.int64),
        np.array(tok_rel, dtype=np.int64),
        np.array(sent_start, dtype=np.int64),
        np.array(sent_count, dtype=np.int64),
    )


def train(
    model: ParserModel,
    sentences: Sequence[Sentence],
    epochs: int | None = None,
    rng_seed: int = 0,
) -> ParserModel:
    """SGD on annotated tokens; returns a new model, input left untouched.

    Per-token objective: cross-entropy of the gold head under the column
    softmax, plus cross-entropy of the gold relation on the gold arc.
    Sentence visit order is reshuffled every epoch from ``rng_seed``.
    The returned model records the post-epoch mean loss trajectory.
    """
    n_epochs = model.hyper.epochs if epochs is None else epochs
    packed = _pack_training_data(model, sentences)
    cand_feats, tok_start, tok_count, tok_gold, tok_rel, sent_start, sent_count = packed

    rng = np.random.default_rng(derive_seed(rng_seed, "train-shuffle"))
    n_sents = len(sent_start)
    orders = np.stack(
        [rng.permutation(n_sents) for _ in range(n_epochs)], axis=0
    ).astype(np.int64) if n_epochs else np.zeros((0, n_sents), dtype=np.int64)

    arc_w = model.arc_weights.copy()
    rel_w = model.rel_weights.copy()
    losses = kernels.sgd_epochs(
        arc_w,
        rel_w,
        cand_feats,
        tok_start,
        tok_count,
        tok_gold,
        tok_rel,
        sent_start,
        sent_count,
        orders,
        float(model.hyper.learning_rate),
    )
    return replace(
        model,
        arc_weights=arc_w,
        rel_weights=rel_w,
        loss_history=tuple(float(x) for x in losses),
    )


def save_model(model: ParserModel, path: str | Path) -> None:
    """Weight dump with a header recording hash dim, labels and hyperparameters."""
    header = {
        "dims": model.dims,
        "labels": list(model.labels),
        "hyper": {
            "learning_rate": model.hyper.learning_rate,
            "epochs": model.hyper.epochs,
            "p_drop": model.hyper.p_drop,
        },
    }
    np.savez_compressed(
        path,
        header=np.frombuffer(json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8),
        arc_weights=model.arc_weights,
        rel_weights=model.rel_weights,
    )


def load_model(path: str | Path) -> ParserModel:
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode("utf-8"))
        return ParserModel(
            dims=int(header["dims"]),
            labels=tuple(header["labels"]),
            arc_weights=data["arc_weights"].copy(),
            rel_weights=data["rel_weights"].copy(),
            hyper=HyperParams(**header["hyper"]),
        )
