"""Shared fixtures and independent numerical oracles.

The oracles here (finite differences, metric-line integration, vertex
enumeration of transportation polytopes, dense 1-d grid search) never
call the code paths they are used to check.
"""

import itertools
import math

import numpy as np
import pytest

from hbary import EuclideanChart, HyperbolicChart, SphereChart


# ---------------------------------------------------------------------------
# charts and random instances
# ---------------------------------------------------------------------------


def all_charts():
    return [
        EuclideanChart(dim=1),
        EuclideanChart(dim=2),
        SphereChart(dim=2, curvature=1.0),
        SphereChart(dim=2, curvature=4.0),
        HyperbolicChart(curvature=-1.0),
    ]


def random_point(chart, rng, spread=1.2):
    if chart.kind == "euclidean":
        return rng.normal(scale=spread, size=chart.dim)
    if chart.kind == "sphere":
        v = rng.normal(size=chart.ambient_dim)
        return v / np.linalg.norm(v) * chart.radius
    r = rng.uniform(0.0, 0.75)
    ang = rng.uniform(0.0, 2.0 * math.pi)
    return np.array([r * math.cos(ang), r * math.sin(ang)])


def random_tangent(chart, rng, base, length=1.0):
    frame = chart.frame(base)
    raw = rng.normal(size=len(frame))
    raw /= np.linalg.norm(raw)
    return length * sum(c * e for c, e in zip(raw, frame))


def cluster(chart, rng, n, center=None, spread=0.6, min_sep=1e-6):
    if center is None:
        center = random_point(chart, rng)
    pts = []
    while len(pts) < n:
        p = chart.exp(center, random_tangent(chart, rng, center, rng.uniform(0.05, spread)))
        if all(chart.dist(p, q) > min_sep for q in pts):
            pts.append(p)
    return np.array(pts)


def generic_weights(rng, n):
    w = rng.uniform(0.25, 1.0, size=n)
    return w / w.sum()


# ---------------------------------------------------------------------------
# finite-difference oracles
# ---------------------------------------------------------------------------


def fd_directional(chart, f, z, u, step=1e-4):
    """Central difference of f along the geodesic through z with velocity u."""
    return (f(chart.exp(z, step * u)) - f(chart.exp(z, -step * u))) / (2.0 * step)


def fd_hessian_matrix(chart, f, z, step=1e-3):
    """Second central differences of f in the orthonormal frame at z."""
    frame = chart.frame(z)
    dim = len(frame)
    f0 = f(z)

    def second(vec):
        return (f(chart.exp(z, step * vec)) - 2.0 * f0 + f(chart.exp(z, -step * vec))) / step**2

    H = np.zeros((dim, dim))
    diag = [second(e) for e in frame]
    for a in range(dim):
        H[a, a] = diag[a]
        for b in range(a + 1, dim):
            mixed = second((frame[a] + frame[b]) / math.sqrt(2.0))
            H[a, b] = H[b, a] = mixed - 0.5 * (diag[a] + diag[b])
    return H


def hess_step_for(r):
    """Adaptive second-difference step (truncation grows like step^2/r^3)."""
    return max(2e-5, 1e-3 * min(1.0, r) ** 1.5)


# ---------------------------------------------------------------------------
# transportation polytope vertex enumeration (two-marginal)
# ---------------------------------------------------------------------------


def vertex_enumeration_cost(cmat, wa, wb):
    """Minimum cost over all vertices of the transportation polytope,
    enumerated as nonsingular column bases of the reduced constraint system."""
    cmat = np.asarray(cmat, dtype=float)
    m, n = cmat.shape
    rows = []
    for i in range(m):
        rows.append([1.0 if k // n == i else 0.0 for k in range(m * n)])
    for j in range(n - 1):
        rows.append([1.0 if k % n == j else 0.0 for k in range(m * n)])
    A = np.array(rows)
    b = np.concatenate([wa, wb[:-1]])
    best = math.inf
    for cols in itertools.combinations(range(m * n), m + n - 1):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-10:
            continue
        x = np.linalg.solve(B, b)
        if np.all(x >= -1e-12):
            best = min(best, float(cmat.ravel()[list(cols)] @ x))
    return best


def tuple_vertex_enumeration_cost(cost_flat, sizes, weights):
    """Brute-force optimum of the n-marginal tuple LP by basis enumeration."""
    n_cols = int(np.prod(sizes))
    idx = np.array(np.unravel_index(np.arange(n_cols), sizes))
    rows = []
    b = []
    for i, size in enumerate(sizes):
        keep = size if i == 0 else size - 1
        for a in range(keep):
            rows.append((idx[i] == a).astype(float))
            b.append(weights[i][a])
    A = np.array(rows)
    b = np.array(b)
    m = A.shape[0]
    best = math.inf
    for cols in itertools.combinations(range(n_cols), m):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-10:
            continue
        x = np.linalg.solve(B, b)
        if np.all(x >= -1e-12):
            best = min(best, float(np.asarray(cost_flat)[list(cols)] @ x))
    return best


# ---------------------------------------------------------------------------
# misc oracles
# ---------------------------------------------------------------------------


def integrate_poincare_diameter(a, b, scale=1.0, n=200001):
    """Length of the straight chart segment [a, b] on the x-axis of the
    Poincare disk, by composite-Simpson integration of the metric factor."""
    ts = np.linspace(a, b, n)
    vals = 2.0 * scale / (1.0 - ts * ts)
    h = (b - a) / (n - 1)
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(h / 3.0 * np.sum(w * vals))


def grid_search_segment(chart, profile, lam, points, x_from, x_to, n=10001):
    """Dense 1-d search of the barycenter objective along a geodesic."""
    direction = chart.log(x_from, x_to)
    d = float(chart.dist(x_from, x_to))
    best_val, best_t = math.inf, 0.0
    for t in np.linspace(0.0, 1.0, n):
        z = chart.exp(x_from, t * direction)
        val = float(np.sum(lam * profile.h(chart.dist(points, z))))
        if val < best_val:
            best_val, best_t = val, t
    return best_val, chart.exp(x_from, best_t * direction)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
