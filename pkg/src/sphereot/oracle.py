"""Exact discrete optimal transport on equal-size, uniform-weight clouds.

The assignment problem is solved exactly (Jonker-Volgenant via scipy);
ties between optimal permutations are broken toward the lexicographically
smallest one by re-solving row by row, so results are reproducible
independent of solver internals.
"""

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import NonFinite, NonSquare, SizeMismatch
from .geometry import EPS_COST, PointCloud


@dataclass(frozen=True)
class Assignment:
    permutation: np.ndarray
    total_cost: float
    cost_matrix_hash: str


def cost_matrix(x_cloud, y_cloud) -> np.ndarray:
    """C[i, j] = log(2 - <x_i, y_j>)."""
    x = x_cloud.points if isinstance(x_cloud, PointCloud) else np.atleast_2d(x_cloud)
    y = y_cloud.points if isinstance(y_cloud, PointCloud) else np.atleast_2d(y_cloud)
    if x.shape[1] != y.shape[1]:
        raise SizeMismatch(f"ambient dims {x.shape[1]} vs {y.shape[1]}")
    return np.log(np.maximum(2.0 - x @ y.T, EPS_COST))


def _solve_value(c):
    rows, cols = linear_sum_assignment(c)
    return float(c[rows, cols].sum()), cols


def solve_assignment(c, lexicographic=True) -> Assignment:
    """Globally optimal assignment of a square cost matrix.

    With `lexicographic` the returned permutation is the smallest optimal
    one in lexicographic order (same optimal value, deterministic
    permutation even under ties).
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise NonSquare(f"expected square matrix, got {c.shape}")
    if not np.all(np.isfinite(c)):
        raise NonFinite("cost matrix has non-finite entries")
    n = c.shape[0]
    total, cols = _solve_value(c)
    perm = np.asarray(cols, dtype=np.int64)
    if lexicographic and n > 1:
        perm = _lexicographic_refine(c, total)
    digest = hashlib.sha256(np.ascontiguousarray(c).tobytes()).hexdigest()[:16]
    return Assignment(permutation=perm, total_cost=total, cost_matrix_hash=digest)


def _lexicographic_refine(c, total):
    """Fix rows in order, taking the smallest column that still admits an
    optimal completion. `available` stays sorted, so candidate columns are
    scanned in ascending order; the column the sub-solver picks for the
    current row bounds the scan."""
    n = c.shape[0]
    tol = 1e-9 * max(1.0, abs(total))
    available = list(range(n))
    perm = np.empty(n, dtype=np.int64)
    fixed = 0.0
    for i in range(n):
        _, cols = _solve_value(c[np.ix_(range(i, n), available)])
        chosen = available[cols[0]]
        for pos, j in enumerate(available):
            if j >= chosen:
                break
            rest_cols = available[:pos] + available[pos + 1:]
            if i + 1 < n:
                completion, _ = _solve_value(c[np.ix_(range(i + 1, n), rest_cols)])
            else:
                completion = 0.0
            if fixed + c[i, j] + completion <= total + tol:
                chosen = j
                break
        perm[i] = chosen
        fixed += c[i, chosen]
        available.remove(chosen)
    return perm


def oracle_value(x_cloud, y_cloud) -> float:
    """Exact empirical transport cost between equal-size uniform clouds."""
    x = x_cloud.points if isinstance(x_cloud, PointCloud) else np.atleast_2d(x_cloud)
    y = y_cloud.points if isinstance(y_cloud, PointCloud) else np.atleast_2d(y_cloud)
    if x.shape[0] != y.shape[0]:
        raise SizeMismatch(f"{x.shape[0]} vs {y.shape[0]} points")
    c = cost_matrix(x, y)
    total, _ = _solve_value(c)
    return total / x.shape[0]
