"""K-best linear assignment via Murty's partitioning scheme.

Costs are minimized; every row must receive a distinct column.  Forbidden
pairings are encoded as +inf.  The optimal assignment of each subproblem is
delegated to scipy's Jonker-Volgenant solver; Murty's scheme partitions the
solution space so successive solutions come out in nondecreasing cost order.
"""

from __future__ import annotations

import heapq

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = ["murty"]


def _solve(cost: np.ndarray):
    """Best assignment of all rows, or None when infeasible."""
    try:
        rows, cols = linear_sum_assignment(cost)
    except ValueError:
        return None
    total = float(cost[rows, cols].sum())
    if not np.isfinite(total):
        return None
    order = np.argsort(rows)
    return tuple(int(c) for c in cols[order]), total


def murty(cost: np.ndarray, k: int) -> list:
    """Return up to k cheapest assignments as (columns, total_cost) pairs.

    ``columns[i]`` is the column assigned to row i.  Requires
    rows <= columns; rows with no finite entry make the problem infeasible
    and yield an empty list.
    """
    cost = np.asarray(cost, dtype=float)
    n_rows, n_cols = cost.shape
    if n_rows == 0:
        return [((), 0.0)]
    if n_rows > n_cols:
        raise ValueError("murty requires at least as many columns as rows")
    if k < 1:
        return []

    root = _solve(cost)
    if root is None:
        return []

    results = []
    counter = 0
    # heap of (total_cost, tiebreak, solution, problem matrix it solved)
    heap = [(root[1], counter, root[0], cost)]
    while heap and len(results) < k:
        total, _, solution, problem = heapq.heappop(heap)
        results.append((solution, total))
        if len(results) >= k:
            break
        # Partition: child p forbids the p-th pairing while fixing pairings
        # 0..p-1, implemented by striking fixed rows/columns to +inf except
        # at the fixed cell.
        partition = problem
        for row in range(n_rows):
            child = partition.copy()
            child[row, solution[row]] = np.inf
            sub = _solve(child)
            if sub is not None:
                counter += 1
                heapq.heappush(heap, (sub[1], counter, sub[0], child))
            # Fix (row, solution[row]) for deeper children.
            fixed = partition.copy()
            fixed[row, :] = np.inf
            fixed[:, solution[row]] = np.inf
            fixed[row, solution[row]] = partition[row, solution[row]]
            partition = fixed
    return results
