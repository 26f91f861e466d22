"""L-ensemble subset selection with a quality-diversity kernel.

The kernel over candidates i, j is ``L[i,j] = q_i * <phi_i, phi_j> * q_j``
with unit-norm diversity features phi, so singleton determinants are q^2
and duplicated features collapse subset determinants to zero.  Greedy MAP
inference grows the selection one argmax-determinant item at a time under
a total size budget, with the budget checked before each add (the final
add may cross the boundary).  Marginal determinants are maintained with
an incremental Cholesky factorization: O(N * |selected|) per step.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

QUALITY_FLOOR = 1e-6  # zero-uncertainty items must not zero out determinants


@dataclass(frozen=True)
class GreedyStep:
    """One selection trace entry: what was added and at what determinant gain."""

    item: object
    marginal_log_det: float
    cumulative_size: int
    fallback: bool = False


@dataclass(frozen=True)
class SelectionKernel:
    items: tuple
    q: np.ndarray
    phi: np.ndarray
    sizes: np.ndarray

    @classmethod
    def build(
        cls,
        items: Sequence,
        q: Sequence[float],
        phi: np.ndarray,
        sizes: Sequence[int] | None = None,
    ) -> "SelectionKernel":
        items = tuple(items)
        q_arr = np.maximum(np.asarray(q, dtype=np.float64), QUALITY_FLOOR)
        phi = np.asarray(phi, dtype=np.float64)
        if phi.shape[0] != len(items) or q_arr.shape[0] != len(items):
            raise ValueError("items, q and phi sizes disagree")
        norms = np.linalg.norm(phi, axis=1)
        if len(items) and not np.allclose(norms, 1.0, atol=1e-6):
            raise ValueError("diversity features must be unit-normalized")
        sz = (
            np.ones(len(items), dtype=np.int64)
            if sizes is None
            else np.asarray(sizes, dtype=np.int64)
        )
        if sz.shape[0] != len(items):
            raise ValueError("sizes length disagrees with items")
        return cls(items=items, q=q_arr, phi=phi, sizes=sz)

    def __len__(self) -> int:
        return len(self.items)


def kernel_entry(kernel: SelectionKernel, i: int, j: int) -> float:
    """L[i, j], computed on demand; the full matrix is never materialized."""
    n = len(kernel)
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"kernel index ({i}, {j}) out of range for {n} items")
    return float(kernel.q[i] * kernel.q[j] * kernel.phi[i] @ kernel.phi[j])


def full_matrix(kernel: SelectionKernel) -> np.ndarray:
    """Dense L for small ground sets (tests and the brute-force oracle)."""
    qphi = kernel.phi * kernel.q[:, None]
    return qphi @ qphi.T


def subset_log_det(kernel: SelectionKernel, subset: Sequence[int]) -> float:
    """log det of the indexed submatrix; -inf when singular."""
    idx = list(subset)
    if not idx:
        raise ValueError("subset must be non-empty")
    sub = full_matrix(kernel)[np.ix_(idx, idx)]
    try:
        chol = np.linalg.cholesky(sub)
    except np.linalg.LinAlgError:
        return float("-inf")
    diag = np.diag(chol)
    if np.any(diag <= 0):
        return float("-inf")
    return float(2.0 * np.log(diag).sum())


def greedy_map(
    kernel: SelectionKernel,
    budget: int,
    trace: list | None = None,
) -> list:
    """Budgeted greedy MAP selection; returns chosen item ids in pick order.

    Each step adds the candidate maximizing the grown subset determinant,
    ties to the smallest candidate index.  Once every remaining marginal
    determinant is numerically zero (the selection saturated the feature
    rank), the argmax is undefined; remaining picks fall back to
    descending quality then smallest index, which is logged and marked in
    the trace.
    """
    n = len(kernel)
    if trace is None:
        trace = []
    if n == 0 or budget <= 0:
        return []

    d2 = kernel.q.astype(np.float64) ** 2
    sat_eps = 1e-12 * max(1.0, float(d2.max()))
    remaining = np.ones(n, dtype=bool)
    rows = np.empty((16, n))  # incremental Cholesky rows, grown on demand
    n_rows = 0
    selected: list[int] = []
    total = 0
    saturated = False

    while remaining.any() and total < budget:
        if not saturated:
            masked = np.where(remaining, d2, -np.inf)
            best = int(np.argmax(masked))
            if masked[best] <= sat_eps:
                saturated = True
                logger.debug(
                    "greedy_map: marginal determinants exhausted after %d picks; "
                    "falling back to quality order",
                    len(selected),
                )
        if saturated:
            best = int(np.argmax(np.where(remaining, kernel.q, -np.inf)))
            remaining[best] = False
            selected.append(best)
            total += int(kernel.sizes[best])
            trace.append(
                GreedyStep(
                    item=kernel.items[best],
                    marginal_log_det=float("-inf"),
                    cumulative_size=total,
                    fallback=True,
                )
            )
            continue

        gain = float(masked[best])
        d_best = math.sqrt(gain)
        l_row = kernel.q[best] * kernel.q * (kernel.phi @ kernel.phi[best])
        if n_rows:
            e = (l_row - rows[:n_rows].T @ rows[:n_rows, best]) / d_best
        else:
            e = l_row / d_best
        if n_rows == rows.shape[0]:
            rows = np.vstack([rows, np.empty_like(rows)])
        rows[n_rows] = e
        n_rows += 1
        d2 -= e**2
        remaining[best] = False
        selected.append(best)
        total += int(kernel.sizes[best])
        trace.append(
            GreedyStep(
                item=kernel.items[best],
                marginal_log_det=math.log(gain),
                cumulative_size=total,
            )
        )

    for step in trace:
        logger.debug(
            "greedy_map pick item=%r marginal_log_det=%s cumulative_size=%d%s",
            step.item,
            step.marginal_log_det,
            step.cumulative_size,
            " (fallback)" if step.fallback else "",
        )
    return [kernel.items[i] for i in selected]


def brute_force_map(kernel: SelectionKernel, budget: int, max_ground: int = 15) -> tuple:
    """Exhaustive argmax-determinant subset within the size budget.

    Test oracle only; ties go to the first subset in (size, lexicographic)
    order.
    """
    n = len(kernel)
    if n > max_ground:
        raise ValueError(f"ground set of {n} too large for exhaustive search (max {max_ground})")
    if budget <= 0:
        return ()
    best: tuple = ()
    best_ld = float("-inf")
    for r in range(1, n + 1):
        for combo in itertools.combinations(range(n), r):
            if int(kernel.sizes[list(combo)].sum()) > budget:
                continue
            ld = subset_log_det(kernel, combo)
            if ld > best_ld:
                best, best_ld = combo, ld
    return tuple(kernel.items[i] for i in best)
