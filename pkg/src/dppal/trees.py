"""Parse trees and maximum spanning arborescence decoding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROB_FLOOR = 1e-12  # attachment probabilities are clamped here before logs


@dataclass(frozen=True)
class ParseTree:
    """Predicted heads (length n, values in 0..n) plus optional relation labels."""

    heads: tuple[int, ...]
    rels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        heads = tuple(int(h) for h in self.heads)
        object.__setattr__(self, "heads", heads)
        if not is_arborescence(heads):
            raise ValueError(f"heads {heads} do not form an arborescence rooted at 0")
        if self.rels is not None and len(self.rels) != len(heads):
            raise ValueError("rels length does not match heads length")

    @property
    def n(self) -> int:
        return len(self.heads)


def is_arborescence(heads) -> bool:
    """True when every token reaches the root 0 without cycles or self-loops."""
    n = len(heads)
    if n == 0:
        return False
    for m, h in enumerate(heads, start=1):
        if not 0 <= h <= n or h == m:
            return False
    for start in range(1, n + 1):
        node, steps = start, 0
        while node != 0:
            node = heads[node - 1]
            steps += 1
            if steps > n:
                return False
    return True


def _find_cycle(heads: np.ndarray) -> list[int] | None:
    n_nodes = len(heads)
    color = np.zeros(n_nodes, dtype=np.int8)
    color[0] = 2
    for start in range(1, n_nodes):
        if color[start]:
            continue
        path: list[int] = []
        node = start
        while color[node] == 0:
            color[node] = 1
            path.append(node)
            node = int(heads[node])
        if color[node] == 1:
            cyc = path[path.index(node):]
            color[path] = 2
            return cyc
        color[path] = 2
    return None


def _cle(scores: np.ndarray) -> np.ndarray:
    """Chu-Liu-Edmonds on a square score matrix scores[h, m]; column 0 unused."""
    n_nodes = scores.shape[0]
    heads = np.zeros(n_nodes, dtype=np.int64)
    if n_nodes > 1:
        heads[1:] = np.argmax(scores[:, 1:], axis=0)
    cycle = _find_cycle(heads)
    if cycle is None:
        return heads

    cyc = np.array(cycle, dtype=np.int64)
    mask = np.ones(n_nodes, dtype=bool)
    mask[cyc] = False
    non = np.flatnonzero(mask)
    k = len(non)

    cyc_arc = scores[heads[cyc], cyc]
    cyc_total = cyc_arc.sum()

    contracted = np.full((k + 1, k + 1), -np.inf)
    contracted[:k, :k] = scores[np.ix_(non, non)]
    # arcs leaving the cycle: best internal source per outside modifier
    out_scores = scores[np.ix_(cyc, non)]
    best_out = np.argmax(out_scores, axis=0)
    contracted[k, :k] = out_scores[best_out, np.arange(k)]
    # arcs entering the cycle: entering at v displaces v's cycle arc
    in_scores = scores[np.ix_(non, cyc)] - cyc_arc[None, :] + cyc_total
    best_in = np.argmax(in_scores, axis=1)
    contracted[:k, k] = in_scores[np.arange(k), best_in]

    sub = _cle(contracted)

    for pos, v in enumerate(non):
        if v == 0:
            continue
        h = sub[pos]
        heads[v] = non[h] if h < k else cyc[best_out[pos]]
    entry_head = int(sub[k])
    enter_at = cyc[best_in[entry_head]]
    heads[enter_at] = non[entry_head]
    return heads


def _score_matrix(att_prob: np.ndarray) -> np.ndarray:
    """Log-probability matrix (n+1)x(n+1); invalid cells -inf."""
    n = att_prob.shape[1]
    s = np.full((n + 1, n + 1), -np.inf)
    s[:, 1:] = np.log(np.clip(att_prob, PROB_FLOOR, None))
    for m in range(1, n + 1):
        s[m, m] = -np.inf
    s[:, 0] = -np.inf
    return s


def _tree_log_prob(s: np.ndarray, heads: np.ndarray) -> float:
    return float(s[heads[1:], np.arange(1, s.shape[0])].sum())


def decode_cle(table, single_root: bool = False) -> ParseTree:
    """Maximum log-probability spanning arborescence for an ArcScoreTable.

    The default places no constraint on the number of root children.
    ``single_root=True`` forces exactly one child of the root by decoding
    once per candidate root attachment and keeping the best.
    """
    s = _score_matrix(table.att_prob)
    heads = _cle(s)
    if single_root:
        roots = np.flatnonzero(heads[1:] == 0) + 1
        if len(roots) > 1:
            best, best_score = None, -np.inf
            root_row = s[0].copy()
            for r in roots:
                s[0, :] = -np.inf
                s[0, r] = root_row[r]
                cand = _cle(s)
                sc = _tree_log_prob(s, cand)
                if sc > best_score:
                    best, best_score = cand, sc
            s[0] = root_row
            heads = best
    return ParseTree(heads=tuple(int(h) for h in heads[1:]))
