"""Exact inference over spanning arborescences via the matrix-tree theorem.

The tree distribution is induced by the per-column attachment
probabilities: a tree's weight is the product of its arc probabilities,
and the partition function sums that product over all arborescences
rooted at 0.  The Laplacian construction mirrors the decoder's root
convention: by default any number of root children is allowed; the
single-root variant substitutes root weights into the first Laplacian
row so that decoding and marginals always describe the same distribution.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .trees import PROB_FLOOR

MAX_ENUMERATION_LENGTH = 6


@dataclass(frozen=True)
class MarginalTable:
    """Arc marginals mar[h, m-1] = P(head(m) = h) under the tree distribution."""

    n: int
    mar: np.ndarray

    def __post_init__(self) -> None:
        if self.mar.shape != (self.n + 1, self.n):
            raise ValueError(f"marginal table shape {self.mar.shape} for n={self.n}")

    def arc(self, h: int, m: int) -> float:
        return float(self.mar[h, m - 1])


def _laplacian(w: np.ndarray, single_root: bool) -> np.ndarray:
    n = w.shape[1]
    lap = -w[1:, :].copy()  # lap[a, b] = -w(a+1 -> b+1); diagonal of w is zero
    if single_root:
        # Root weights move to the first row; diagonals exclude them.
        lap[np.arange(n), np.arange(n)] = w[1:, :].sum(axis=0)
        lap[0, :] = w[0, :]
    else:
        lap[np.arange(n), np.arange(n)] = w.sum(axis=0)
    return lap


def log_partition_weights(w: np.ndarray, single_root: bool = False) -> float:
    """log sum of tree weights for a raw (n+1) x n weight matrix."""
    lap = _laplacian(_weights_like(w), single_root)
    sign, logdet = np.linalg.slogdet(lap)
    if sign <= 0:
        raise np.linalg.LinAlgError("tree partition determinant is non-positive")
    return float(logdet)


def _weights_like(w: np.ndarray) -> np.ndarray:
    n = w.shape[1]
    out = np.clip(w, PROB_FLOOR, None).copy()
    out[np.arange(1, n + 1), np.arange(n)] = 0.0
    return out


def marginals_weights(w: np.ndarray, single_root: bool = False) -> np.ndarray:
    """Arc marginals for a raw weight matrix via the log-determinant gradient."""
    n = w.shape[1]
    wc = _weights_like(w)
    lap = _laplacian(wc, single_root)
    inv = np.linalg.inv(lap)
    mar = np.zeros((n + 1, n))
    if single_root:
        mar[0, :] = wc[0, :] * inv[:, 0]
        diag_b = np.diag(inv)
        for h in range(1, n + 1):
            contrib = diag_b.copy()
            contrib[0] = 0.0  # first row is the root row, not token h's Laplacian row
            minus = inv[:, h - 1] if h >= 2 else np.zeros(n)
            mar[h, :] = wc[h, :] * (contrib - minus)
    else:
        diag_b = np.diag(inv)
        mar[0, :] = wc[0, :] * diag_b
        for h in range(1, n + 1):
            mar[h, :] = wc[h, :] * (diag_b - inv[:, h - 1])
    mar[np.arange(1, n + 1), np.arange(n)] = 0.0
    return np.clip(mar, 0.0, 1.0)


def log_partition(table, single_root: bool = False) -> float:
    """log Z of the tree distribution induced by an ArcScoreTable."""
    return log_partition_weights(table.att_prob, single_root)


def arc_marginals(table, single_root: bool = False) -> MarginalTable:
    """Marginal attachment probabilities for every candidate arc."""
    mar = marginals_weights(table.att_prob, single_root)
    return MarginalTable(n=table.att_prob.shape[1], mar=mar)


def enumerate_arborescences(n: int, single_root: bool = False) -> Iterator[np.ndarray]:
    """Yield every valid head array for a length-n sentence (n <= 6 guard)."""
    if not 1 <= n <= MAX_ENUMERATION_LENGTH:
        raise ValueError(f"enumeration supported for 1 <= n <= {MAX_ENUMERATION_LENGTH}, got {n}")
    for combo in itertools.product(range(n + 1), repeat=n):
        heads = np.array(combo, dtype=np.int64)
        if _valid_heads(heads):
            if single_root and int((heads == 0).sum()) != 1:
                continue
            yield heads


def _valid_heads(heads: np.ndarray) -> bool:
    n = len(heads)
    for m in range(1, n + 1):
        if heads[m - 1] == m:
            return False
        node, steps = m, 0
        while node != 0:
            node = int(heads[node - 1])
            steps += 1
            if steps > n:
                return False
    return True


def brute_force_log_partition(w: np.ndarray, single_root: bool = False) -> float:
    """Enumeration oracle for the partition function (n <= 6)."""
    n = w.shape[1]
    wc = _weights_like(w)
    total = 0.0
    for heads in enumerate_arborescences(n, single_root):
        total += float(np.prod(wc[heads, np.arange(n)]))
    return float(np.log(total))


def brute_force_marginals(w: np.ndarray, single_root: bool = False) -> np.ndarray:
    """Enumeration oracle for arc marginals (n <= 6)."""
    n = w.shape[1]
    wc = _weights_like(w)
    mar = np.zeros((n + 1, n))
    total = 0.0
    for heads in enumerate_arborescences(n, single_root):
        p = float(np.prod(wc[heads, np.arange(n)]))
        total += p
        mar[heads, np.arange(n)] += p
    return mar / total
