"""Pure-numpy implementations of the hot kernels.

Reference path for the numba backend in ``_kernels_nb``; also the
fallback used when numba is unavailable or disabled via ``DPPAL_NUMBA=0``.
Integer feature ids are bit-exact across both backends; float results
agree to summation-order rounding.
"""

from __future__ import annotations

import numpy as np

from .hashing import SPLITMIX_GAMMA, SPLITMIX_M1, SPLITMIX_M2

NAME = "numpy"

N_TEMPLATES = 14

_U = np.uint64
_MIX_INIT = _U(0x8E3C5B1D0A7F9E21)


def _sm64(x):
    with np.errstate(over="ignore"):  # uint64 wraparound is the point
        x = x + _U(SPLITMIX_GAMMA)
        x = (x ^ (x >> _U(30))) * _U(SPLITMIX_M1)
        x = (x ^ (x >> _U(27))) * _U(SPLITMIX_M2)
        return x ^ (x >> _U(31))


def _fold(h, p):
    return _sm64(h ^ p)


def _mix_parts(*parts):
    h = _MIX_INIT
    for p in parts:
        h = _fold(h, p)
    return h


def distance_bin(delta: np.ndarray) -> np.ndarray:
    """Bin |h - m| into 1..5 exact, 6 for 6-10, 7 beyond."""
    d = np.abs(delta)
    return np.where(d <= 5, d, np.where(d <= 10, 6, 7))


def arc_feature_ids(form_h: np.ndarray, upos_h: np.ndarray, mask: int) -> np.ndarray:
    """Hashed feature ids for every (head, modifier) pair of one sentence.

    ``form_h`` / ``upos_h`` are uint64 token hashes indexed 0..n with the
    root pseudo-token at 0.  Returns int64[(n+1), n, N_TEMPLATES]; rows
    with h == m are filled but must be masked by the caller.
    """
    n = form_h.shape[0] - 1
    msk = _U(mask)
    bos = _sm64(_U(0xB05B05))
    eos = _sm64(_U(0xE05E05))
    padded = np.concatenate(([bos], upos_h, [eos]))

    h_pos = np.arange(n + 1)[:, None]
    m_pos = np.arange(1, n + 1)[None, :]
    hf = np.broadcast_to(form_h[:, None], (n + 1, n))
    mf = np.broadcast_to(form_h[None, 1:], (n + 1, n))
    hu = np.broadcast_to(upos_h[:, None], (n + 1, n))
    mu = np.broadcast_to(upos_h[None, 1:], (n + 1, n))
    h_prev = np.broadcast_to(padded[h_pos], (n + 1, n))
    h_next = np.broadcast_to(padded[h_pos + 2], (n + 1, n))
    m_prev = np.broadcast_to(padded[m_pos], (n + 1, n))
    m_next = np.broadcast_to(padded[m_pos + 2], (n + 1, n))

    delta = m_pos - h_pos
    sbin = (distance_bin(delta) * 2 + (delta > 0)).astype(np.uint64)
    direction = (delta > 0).astype(np.uint64)
    is_root = (h_pos == 0).astype(np.uint64)
    is_root = np.broadcast_to(is_root, (n + 1, n))

    out = np.empty((n + 1, n, N_TEMPLATES), dtype=np.uint64)
    out[:, :, 0] = _mix_parts(_U(1), hf)
    out[:, :, 1] = _mix_parts(_U(2), mf)
    out[:, :, 2] = _mix_parts(_U(3), hu)
    out[:, :, 3] = _mix_parts(_U(4), mu)
    out[:, :, 4] = _mix_parts(_U(5), hf, mf)
    out[:, :, 5] = _mix_parts(_U(6), hu, mu)
    out[:, :, 6] = _mix_parts(_U(7), hf, mu)
    out[:, :, 7] = _mix_parts(_U(8), hu, mf)
    out[:, :, 8] = _mix_parts(_U(9), sbin)
    out[:, :, 9] = _mix_parts(_U(10), direction)
    out[:, :, 10] = _mix_parts(_U(11), hu, mu, sbin)
    out[:, :, 11] = _mix_parts(_U(12), h_prev, hu, m_prev, mu)
    out[:, :, 12] = _mix_parts(_U(13), hu, h_next, mu, m_next)
    out[:, :, 13] = _mix_parts(_U(14), is_root)
    return (out & msk).astype(np.int64)


def score_arcs(feat_ids: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Sum of weights over each arc's feature ids -> float64[(n+1), n]."""
    return weights[feat_ids].sum(axis=-1)


def score_arcs_masked(feat_ids: np.ndarray, weights: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Like score_arcs but with a 0/1 dropout keep mask per feature slot."""
    return (weights[feat_ids] * keep).sum(axis=-1)


def _softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max()
    e = np.exp(z)
    return e / e.sum()


def sgd_epochs(
    arc_w: np.ndarray,
    rel_w: np.ndarray,
    cand_feats: np.ndarray,
    tok_start: np.ndarray,
    tok_count: np.ndarray,
    tok_gold: np.ndarray,
    tok_rel: np.ndarray,
    sent_start: np.ndarray,
    sent_count: np.ndarray,
    orders: np.ndarray,
    lr: float,
) -> np.ndarray:
    """Run SGD epochs over packed annotated tokens, updating weights in place.

    Packing: token t owns candidate rows ``cand_feats[tok_start[t] :
    tok_start[t] + tok_count[t]]`` (one row of feature ids per candidate
    head, self-attachment excluded); ``tok_gold[t]`` is the gold head's
    row offset within that block and ``tok_rel[t]`` the gold label id
    (-1 disables the relation update).  ``orders[e]`` gives the sentence
    visit order of epoch e.  Returns the mean cross-entropy (attachment
    plus relation) measured after each epoch.
    """
    n_epochs = orders.shape[0]
    n_labels = rel_w.shape[0]
    losses = np.zeros(n_epochs)
    n_tok = tok_start.shape[0]

    for e in range(n_epochs):
        for s in orders[e]:
            t0, tc = sent_start[s], sent_count[s]
            for t in range(t0, t0 + tc):
                ids = cand_feats[tok_start[t] : tok_start[t] + tok_count[t]]
                p = _softmax(arc_w[ids].sum(axis=1))
                p[tok_gold[t]] -= 1.0
                np.add.at(arc_w, ids.reshape(-1), np.repeat(-lr * p, ids.shape[1]))
                if n_labels > 0 and tok_rel[t] >= 0:
                    gids = ids[tok_gold[t]]
                    q = _softmax(rel_w[:, gids].sum(axis=1))
                    q[tok_rel[t]] -= 1.0
                    # duplicate ids (hash collisions) must accumulate
                    np.subtract.at(rel_w, (slice(None), gids), lr * q[:, None])

        total = 0.0
        for t in range(n_tok):
            ids = cand_feats[tok_start[t] : tok_start[t] + tok_count[t]]
            p = _softmax(arc_w[ids].sum(axis=1))
            total -= np.log(max(p[tok_gold[t]], 1e-300))
            if n_labels > 0 and tok_rel[t] >= 0:
                q = _softmax(rel_w[:, ids[tok_gold[t]]].sum(axis=1))
                total -= np.log(max(q[tok_rel[t]], 1e-300))
        losses[e] = total / max(n_tok, 1)
    return losses
