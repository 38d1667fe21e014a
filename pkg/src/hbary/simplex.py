"""Dense two-phase revised simplex with Bland's anti-cycling rule.

Solves min c.x s.t. A x = b, x >= 0 for the (heavily degenerate)
transportation-polytope LPs in this package.  Bland's rule (smallest
eligible index enters; ratio ties broken by smallest basic variable
index) guarantees termination; the basis system is re-solved densely at
every pivot, which is exact enough at desk scale to hand out
certificate-grade duals.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import HbaryError


class SimplexFailure(HbaryError):
    pass


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    basis: np.ndarray
    duals: np.ndarray
    reduced_costs: np.ndarray
    objective: float
    iterations: int

    @property
    def min_nonbasic_reduced_cost(self) -> float:
        mask = np.ones(self.x.size, dtype=bool)
        mask[self.basis] = False
        if not mask.any():
            return math.inf
        return float(np.min(self.reduced_costs[mask]))


def _bland_iterate(c, A, b, basis, allowed, tol, max_iter):
    m, n = A.shape
    in_basis = np.zeros(n, dtype=bool)
    in_basis[basis] = True
    it = 0
    for it in range(1, max_iter + 1):
        B = A[:, basis]
        xB = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, c[basis])
        rc = c - y @ A
        rc[basis] = 0.0
        candidates = np.nonzero(allowed & ~in_basis & (rc < -tol))[0]
        if candidates.size == 0:
            return basis, np.maximum(xB, 0.0), y, rc, it
        entering = int(candidates[0])
        d = np.linalg.solve(B, A[:, entering])
        pos = d > tol
        if not pos.any():
            raise SimplexFailure("unbounded direction in a transportation LP")
        ratios = np.where(pos, np.maximum(xB, 0.0) / np.where(pos, d, 1.0), math.inf)
        theta = float(np.min(ratios))
        tie = np.nonzero(ratios <= theta + 1e-12)[0]
        # Bland tie-break: leave the smallest basic variable index
        leave_pos = int(tie[np.argmin(np.asarray(basis)[tie])])
        in_basis[basis[leave_pos]] = False
        in_basis[entering] = True
        basis[leave_pos] = entering
    raise SimplexFailure(f"no convergence in {max_iter} pivots")


def solve_equality_lp(cost, A, b, tol: float = 1e-11, max_iter: int = 200000) -> SimplexResult:
    """Two-phase simplex for min cost.x, A x = b, x >= 0 with full-row-rank A."""
    cost = np.asarray(cost, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    m, n = A.shape
    flip = b < 0
    if flip.any():
        A = A.copy()
        A[flip] *= -1.0
        b[flip] *= -1.0

    # phase 1: artificial basis
    A1 = np.hstack([A, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    basis = list(range(n, n + m))
    allowed = np.ones(n + m, dtype=bool)
    basis, xB, _, _, it1 = _bland_iterate(c1, A1, b, basis, allowed, tol, max_iter)
    art_mass = sum(xB[i] for i, j in enumerate(basis) if j >= n)
    if art_mass > 1e-7 * max(1.0, float(np.abs(b).sum())):
        raise SimplexFailure("phase 1 ended infeasible; marginals inconsistent")

    # drive leftover (necessarily zero-mass) artificials out of the basis
    for pos in range(m):
        if basis[pos] < n:
            continue
        B = A1[:, basis]
        Binv_row = np.linalg.solve(B.T, np.eye(m)[pos])
        row = Binv_row @ A
        pivot_cols = np.nonzero(np.abs(row) > 1e-9)[0]
        pivot_cols = [j for j in pivot_cols if j not in basis]
        if not pivot_cols:
            raise SimplexFailure("redundant row survived preprocessing")
        basis[pos] = int(pivot_cols[0])

    # phase 2 on the original columns
    allowed = np.concatenate([np.ones(n, dtype=bool), np.zeros(m, dtype=bool)])
    c2 = np.concatenate([cost, np.zeros(m)])
    basis, xB, y, rc, it2 = _bland_iterate(c2, A1, b, basis, allowed, tol, max_iter)

    x = np.zeros(n)
    for i, j in enumerate(basis):
        if j < n:
            x[j] = xB[i]
    if flip.any():
        y = y.copy()
        y[flip] *= -1.0
    return SimplexResult(
        x=x,
        basis=np.asarray(basis),
        duals=y,
        reduced_costs=rc[:n],
        objective=float(cost @ x),
        iterations=it1 + it2,
    )


def transport_constraints(sizes):
    """Constraint matrix of the n-marginal assignment polytope over index
    tuples, with one redundant row dropped per marginal after the first."""
    sizes = list(sizes)
    n_cols = int(np.prod(sizes))
    idx = np.array(np.unravel_index(np.arange(n_cols), sizes))  # (n_marg, n_cols)
    rows = []
    for i, size in enumerate(sizes):
        keep = size if i == 0 else size - 1
        for a in range(keep):
            rows.append(idx[i] == a)
    return np.array(rows, dtype=float), idx


def solve_tuple_lp(cost_flat, sizes, weights, tol: float = 1e-11):
    """Min-cost joint table with the given marginals.

    Returns (masses over flat tuple indices, per-marginal dual vectors,
    SimplexResult).  Dropped rows carry dual value 0.
    """
    A, _ = transport_constraints(sizes)
    b = []
    for i, w in enumerate(weights):
        keep = len(w) if i == 0 else len(w) - 1
        b.extend(w[:keep])
    res = solve_equality_lp(np.asarray(cost_flat, dtype=float), A, np.asarray(b), tol=tol)
    duals = []
    offset = 0
    for i, w in enumerate(weights):
        keep = len(w) if i == 0 else len(w) - 1
        block = list(res.duals[offset : offset + keep])
        if keep < len(w):
            block.append(0.0)
        duals.append(np.array(block))
        offset += keep
    return res.x, duals, res
