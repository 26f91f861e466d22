"""Numba-jitted implementations of the hot kernels.

Mirrors ``_kernels_np`` function for function.  Feature ids are bit-exact
with the numpy backend; floating point results may differ in the last ulp
because summation order differs.  Compiled objects are cached on disk, so
the jit cost is paid once per machine.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .hashing import SPLITMIX_GAMMA, SPLITMIX_M1, SPLITMIX_M2

NAME = "numba"

N_TEMPLATES = 14

_GAMMA = np.uint64(SPLITMIX_GAMMA)
_M1 = np.uint64(SPLITMIX_M1)
_M2 = np.uint64(SPLITMIX_M2)
_MIX_INIT = np.uint64(0x8E3C5B1D0A7F9E21)


@njit(cache=True, inline="always")
def _sm64(x):
    x = x + _GAMMA
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


@njit(cache=True, inline="always")
def _fold(h, p):
    return _sm64(h ^ p)


@njit(cache=True)
def arc_feature_ids(form_h, upos_h, mask):
    n = form_h.shape[0] - 1
    msk = np.uint64(mask)
    bos = _sm64(np.uint64(0xB05B05))
    eos = _sm64(np.uint64(0xE05E05))
    padded = np.empty(n + 3, dtype=np.uint64)
    padded[0] = bos
    for i in range(n + 1):
        padded[i + 1] = upos_h[i]
    padded[n + 2] = eos

    out = np.empty((n + 1, n, N_TEMPLATES), dtype=np.int64)
    for h in range(n + 1):
        hf = form_h[h]
        hu = upos_h[h]
        h_prev = padded[h]
        h_next = padded[h + 2]
        is_root = np.uint64(1) if h == 0 else np.uint64(0)
        for j in range(n):
            m = j + 1
            mf = form_h[m]
            mu = upos_h[m]
            m_prev = padded[m]
            m_next = padded[m + 2]
            delta = m - h
            d = delta if delta > 0 else -delta
            if d <= 5:
                b = d
            elif d <= 10:
                b = 6
            else:
                b = 7
            sbin = np.uint64(b * 2 + (1 if delta > 0 else 0))
            direction = np.uint64(1) if delta > 0 else np.uint64(0)

            out[h, j, 0] = np.int64(_fold(_fold(_MIX_INIT, np.uint64(1)), hf) & msk)
            out[h, j, 1] = np.int64(_fold(_fold(_MIX_INIT, np.uint64(2)), mf) & msk)
            out[h, j, 2] = np.int64(_fold(_fold(_MIX_INIT, np.uint64(3)), hu) & msk)
            out[h, j, 3] = np.int64(_fold(_fold(_MIX_INIT, np.uint64(4)), mu) & msk)
            out[h, j, 4] = np.int64(_fold(_fold(_fold(_MIX_INIT, np.uint64(5)), hf), mf) & msk)
            out[h, j, 5] = np.int64(_fold(_fold(_fold(_MIX_INIT, np.uint64(6)), hu), mu) & msk)
            out[h, j, 6] = np.int64(_fold(_fold(_fold(_MIX_INIT, np.uint64(7)), hf), mu) & msk)
            out[h, j, 7] = np.int64(_fold(_fold(_fold(_MIX_INIT, np.uint64(8)), hu), mf) & msk)
            out[h, j, 8] = np.int64(_fold(_fold(_MIX_INIT, np.uint64(9)), sbin) & msk)
            out[h, j, 9] = np.int64(_fold(_fold(_MIX_INIT, np.uint64(10)), direction) & msk)
            out[h, j, 10] = np.int64(
                _fold(_fold(_fold(_fold(_MIX_INIT, np.uint64(11)), hu), mu), sbin) & msk
            )
            out[h, j, 11] = np.int64(
                _fold(_fold(_fold(_fold(_fold(_MIX_INIT, np.uint64(12)), h_prev), hu), m_prev), mu) & msk
            )
            out[h, j, 12] = np.int64(
                _fold(_fold(_fold(_fold(_fold(_MIX_INIT, np.uint64(13)), hu), h_next), mu), m_next) & msk
            )
            out[h, j, 13] = np.int64(_fold(_fold(_MIX_INIT, np.uint64(14)), is_root) & msk)
    return out


@njit(cache=True)
def score_arcs(feat_ids, weights):
    n1, n, nf = feat_ids.shape
    out = np.empty((n1, n), dtype=np.float64)
    for h in range(n1):
        for j in range(n):
            acc = 0.0
            for f in range(nf):
                acc += weights[feat_ids[h, j, f]]
            out[h, j] = acc
    return out


@njit(cache=True)
def score_arcs_masked(feat_ids, weights, keep):
    n1, n, nf = feat_ids.shape
    out = np.empty((n1, n), dtype=np.float64)
    for h in range(n1):
        for j in range(n):
            acc = 0.0
            for f in range(nf):
                acc += weights[feat_ids[h, j, f]] * keep[h, j, f]
            out[h, j] = acc
    return out


@njit(cache=True)
def _token_arc_probs(arc_w, cand_feats, start, count, p):
    mx = -1e308
    for j in range(count):
        acc = 0.0
        for f in range(cand_feats.shape[1]):
            acc += arc_w[cand_feats[start + j, f]]
        p[j] = acc
        if acc > mx:
            mx = acc
    z = 0.0
    for j in range(count):
        p[j] = np.exp(p[j] - mx)
        z += p[j]
    for j in range(count):
        p[j] /= z


@njit(cache=True)
def _token_rel_probs(rel_w, cand_feats, grow, q):
    n_labels = rel_w.shape[0]
    mx = -1e308
    for l in range(n_labels):
        acc = 0.0
        for f in range(cand_feats.shape[1]):
            acc += rel_w[l, cand_feats[grow, f]]
        q[l] = acc
        if acc > mx:
            mx = acc
    z = 0.0
    for l in range(n_labels):
        q[l] = np.exp(q[l] - mx)
        z += q[l]
    for l in range(n_labels):
        q[l] /= z


@njit(cache=True)
def sgd_epochs(
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
    lr,
):
    n_epochs = orders.shape[0]
    n_labels = rel_w.shape[0]
    n_tok = tok_start.shape[0]
    nf = cand_feats.shape[1]
    losses = np.zeros(n_epochs)
    max_cand = 0
    for t in range(n_tok):
        if tok_count[t] > max_cand:
            max_cand = tok_count[t]
    p = np.empty(max_cand, dtype=np.float64)
    q = np.empty(max(n_labels, 1), dtype=np.float64)

    for e in range(n_epochs):
        for si in range(orders.shape[1]):
            s = orders[e, si]
            for t in range(sent_start[s], sent_start[s] + sent_count[s]):
                start = tok_start[t]
                count = tok_count[t]
                _token_arc_probs(arc_w, cand_feats, start, count, p)
                p[tok_gold[t]] -= 1.0
                for j in range(count):
                    g = lr * p[j]
                    if g != 0.0:
                        for f in range(nf):
                            arc_w[cand_feats[start + j, f]] -= g
                if n_labels > 0 and tok_rel[t] >= 0:
                    grow = start + tok_gold[t]
                    _token_rel_probs(rel_w, cand_feats, grow, q)
                    q[tok_rel[t]] -= 1.0
                    for l in range(n_labels):
                        g = lr * q[l]
                        for f in range(nf):
                            rel_w[l, cand_feats[grow, f]] -= g

        total = 0.0
        for t in range(n_tok):
            start = tok_start[t]
            count = tok_count[t]
            _token_arc_probs(arc_w, cand_feats, start, count, p)
            pg = p[tok_gold[t]]
            total -= np.log(pg if pg > 1e-300 else 1e-300)
            if n_labels > 0 and tok_rel[t] >= 0:
                _token_rel_probs(rel_w, cand_feats, start + tok_gold[t], q)
                qg = q[tok_rel[t]]
                total -= np.log(qg if qg > 1e-300 else 1e-300)
        losses[e] = total / max(n_tok, 1)
    return losses
