"""Exact discrete optimal transport for costs h(dist), two- and multi-marginal.

Solver routing:

* ``solve_ot2`` uses a monotone (north-west corner) construction on the
  Euclidean line, where convexity of t -> h(|t|) makes the sorted
  coupling provably optimal and chain-propagated duals exactly feasible;
  everywhere else it runs the dense Bland simplex.  Either way the
  returned plan carries dual certificates.
* ``solve_mmot`` builds the barycenter cost C over index tuples
  (memoized) and solves the tuple LP, with fast paths for instances whose
  plan is forced (all marginals but one a single atom) and for two
  marginals on the line.
"""

from dataclasses import dataclass, field
import itertools
import math

import numpy as np

from .barycenter import (
    BarycenterSolution,
    Configuration,
    pair_cost_line,
    solve_barycenter,
)
from .cost import CostProfile
from .errors import (
    ChartMembershipError,
    InjectivityViolation,
    ProfileViolatesAssumptions,
    SizeLimit,
)
from .simplex import solve_equality_lp, solve_tuple_lp
from .tolerances import DEFAULT as TOL

TUPLE_BUDGET = 100_000


@dataclass(frozen=True)
class DiscreteMeasure:
    """Normalized weighted point cloud on a chart."""

    chart: object
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if pts.shape[0] != w.shape[0]:
            raise ChartMembershipError("one weight per support point")
        if np.any(w <= 0):
            raise ChartMembershipError("weights must be strictly positive")
        if abs(float(w.sum()) - 1.0) > TOL.weight_sum:
            raise ChartMembershipError("weights must sum to 1 within 1e-12")
        self.chart.check_point(pts)
        if pts.shape[0] <= 4096:
            d = self.chart.dist(pts[:, None, :], pts[None, :, :])
            d = d + np.eye(pts.shape[0])
            if np.any(d < TOL.support_distinct):
                raise ChartMembershipError("support points must be pairwise distinct")

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @staticmethod
    def from_atoms(chart, points, weights, merge_tol: float = TOL.support_distinct):
        """Build a measure, merging atoms closer than ``merge_tol``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        w = np.asarray(weights, dtype=float)
        kept_pts, kept_w = [], []
        for p, wi in zip(pts, w):
            for k, q in enumerate(kept_pts):
                if chart.dist(p, q) < merge_tol:
                    kept_w[k] += wi
                    break
            else:
                kept_pts.append(p)
                kept_w.append(wi)
        w = np.asarray(kept_w, dtype=float)
        return DiscreteMeasure(chart=chart, points=np.asarray(kept_pts), weights=w / w.sum())


@dataclass(frozen=True)
class Potential:
    """Kantorovich potentials on the two support sets (psi on source)."""

    psi: np.ndarray
    xi: np.ndarray
    source_points: np.ndarray
    target_points: np.ndarray

    def feasibility_violation(self, cost_matrix) -> float:
        gap = self.psi[:, None] + self.xi[None, :] - cost_matrix
        return float(np.max(gap))


@dataclass(frozen=True)
class MultiPlan:
    """Joint probability table over the product of marginal supports."""

    support: list              # [(index tuple, mass), ...]
    marginals: list            # the input DiscreteMeasures
    total_cost: float
    weights: np.ndarray | None = None   # barycenter weights (MMOT context)
    duals: list | None = None           # per-marginal dual vectors
    max_slack: float = 0.0              # complementary slackness on the support
    dual_violation: float = 0.0         # max positive dual infeasibility
    min_reduced_cost: float | None = None  # > 0 certifies plan uniqueness
    tuple_solutions: dict | None = field(default=None, repr=False, compare=False)

    @property
    def n_marginals(self) -> int:
        return len(self.marginals)

    def marginal_certificates(self) -> np.ndarray:
        """Max deviation of each table marginal from the input measure."""
        out = []
        for i, mu in enumerate(self.marginals):
            acc = np.zeros(mu.size)
            for idx, mass in self.support:
                acc[idx[i]] += mass
            out.append(float(np.max(np.abs(acc - mu.weights))))
        return np.array(out)

    def mass_total(self) -> float:
        return float(sum(m for _, m in self.support))

    def to_json_dict(self):
        return {
            "support": [{"idx": list(map(int, idx)), "mass": float(m)} for idx, m in self.support],
            "cost": self.total_cost,
            "max_slack": self.max_slack,
            "dual_violation": self.dual_violation,
            "duals": None if self.duals is None else [list(map(float, d)) for d in self.duals],
        }


def _require_same_chart(measures):
    chart = measures[0].chart
    for m in measures[1:]:
        if m.chart != chart:
            raise ChartMembershipError("all measures must live on one chart")
    return chart


def cost_matrix(mu: DiscreteMeasure, nu: DiscreteMeasure, profile: CostProfile):
    d = mu.chart.dist(mu.points[:, None, :], nu.points[None, :, :])
    return profile.h(d)


# ---------------------------------------------------------------------------
# two-marginal solver
# ---------------------------------------------------------------------------


def _northwest_pairs(wa, wb):
    """North-west corner walk; zero-mass links keep the chain connected."""
    pairs = []
    i = j = 0
    na, nb = len(wa), len(wb)
    ra, rb = float(wa[0]), float(wb[0])
    while True:
        m = min(ra, rb)
        pairs.append((i, j, m))
        ra -= m
        rb -= m
        a_done, b_done = ra <= 1e-15, rb <= 1e-15
        if a_done and b_done and i == na - 1 and j == nb - 1:
            break
        if a_done and i < na - 1:
            i += 1
            ra = float(wa[i])
        elif b_done and j < nb - 1:
            j += 1
            rb = float(wb[j])
        elif i < na - 1:
            i += 1
            ra = float(wa[i])
        elif j < nb - 1:
            j += 1
            rb = float(wb[j])
        else:
            break
    return pairs


def _chain_duals(pairs, cmat, na, nb):
    """Duals from the connected chain of positive-mass pairs.

    Zero-mass links only mark segment boundaries: propagating equalities
    through them would create spurious tight pairs (and ambiguous Monge
    rows), so each positive segment gets its own chain and segments are
    stitched with the midpoint of the feasible shift interval.
    """
    psi = np.full(na, np.nan)
    xi = np.full(nb, np.nan)

    segments = []
    current = []
    for i, j, m in pairs:
        if m > 0.0:
            current.append((i, j))
        elif current:
            segments.append(current)
            current = []
    if current:
        segments.append(current)

    done_rows, done_cols = [], []
    for seg in segments:
        rows = sorted({i for i, _ in seg})
        cols = sorted({j for _, j in seg})
        psi[rows[0]] = 0.0
        for i, j in seg:
            if np.isnan(xi[j]) and not np.isnan(psi[i]):
                xi[j] = cmat[i, j] - psi[i]
            elif np.isnan(psi[i]) and not np.isnan(xi[j]):
                psi[i] = cmat[i, j] - xi[j]
        if done_rows:
            # shift (psi+a, xi-a) on the new segment into the feasible window
            hi = float(
                np.min(
                    cmat[np.ix_(rows, done_cols)]
                    - psi[rows][:, None]
                    - xi[done_cols][None, :]
                )
            )
            lo = float(
                np.max(
                    psi[done_rows][:, None]
                    + xi[cols][None, :]
                    - cmat[np.ix_(done_rows, cols)]
                )
            )
            a = 0.5 * (lo + hi) if lo <= hi else hi
            for i in rows:
                psi[i] += a
            for j in cols:
                xi[j] -= a
        done_rows.extend(rows)
        done_cols.extend(cols)
    return psi, xi


def _solve_pairs_monotone(cmat, wa, wb):
    """Monotone plan + chain duals in sorted index space; returns None when
    the duals are not feasible (cost not compatible with the sorted order)."""
    pairs = _northwest_pairs(wa, wb)
    psi, xi = _chain_duals(pairs, cmat, len(wa), len(wb))
    if np.any(np.isnan(psi)) or np.any(np.isnan(xi)):
        return None
    violation = float(np.max(psi[:, None] + xi[None, :] - cmat))
    if violation > TOL.dual_feasibility:
        return None
    support = [(i, j, m) for i, j, m in pairs if m > 0.0]
    cost = float(sum(m * cmat[i, j] for i, j, m in support))
    return support, psi, xi, cost, max(violation, 0.0)


def _solve_pairs_simplex(cmat, wa, wb):
    m, n = cmat.shape
    if m * n > TUPLE_BUDGET:
        raise SizeLimit(f"{m}x{n} exceeds the {TUPLE_BUDGET}-tuple simplex budget")
    x, duals, res = solve_tuple_lp(cmat.ravel(), [m, n], [wa, wb])
    plan = x.reshape(m, n)
    support = [(int(i), int(j), float(plan[i, j])) for i, j in zip(*np.nonzero(plan > 1e-15))]
    return support, duals[0], duals[1], res.objective, max(0.0, -res.reduced_costs.min()), res


def solve_lp_pair(cmat, wa, wb, *, monotone_ok: bool = False):
    """Solve a raw m x n transportation LP; returns (support, psi, xi, cost, info)."""
    cmat = np.asarray(cmat, dtype=float)
    wa = np.asarray(wa, dtype=float)
    wb = np.asarray(wb, dtype=float)
    if monotone_ok:
        out = _solve_pairs_monotone(cmat, wa, wb)
        if out is not None:
            support, psi, xi, cost, violation = out
            return support, psi, xi, cost, {"route": "monotone", "dual_violation": violation}
    support, psi, xi, cost, violation, res = _solve_pairs_simplex(cmat, wa, wb)
    return support, psi, xi, cost, {
        "route": "simplex",
        "dual_violation": violation,
        "min_reduced_cost": res.min_nonbasic_reduced_cost,
    }


def solve_ot2(mu: DiscreteMeasure, nu: DiscreteMeasure, profile: CostProfile, *, force_simplex=False):
    """Optimal plan and dual potentials for the cost h(dist).

    Optimality is certified by complementary slackness: every positive-mass
    pair attains psi(x) + xi(y) = c(x, y) within tolerance.
    """
    chart = _require_same_chart([mu, nu])
    cmat = cost_matrix(mu, nu, profile)
    monotone_ok = (not force_simplex) and chart.kind == "euclidean" and chart.dim == 1
    route_info = {}
    min_rc = None

    if monotone_ok:
        order_a = np.argsort(mu.points[:, 0], kind="stable")
        order_b = np.argsort(nu.points[:, 0], kind="stable")
        sorted_c = cmat[np.ix_(order_a, order_b)]
        out = _solve_pairs_monotone(sorted_c, mu.weights[order_a], nu.weights[order_b])
        if out is not None:
            s_support, s_psi, s_xi, cost, violation = out
            psi = np.empty(mu.size)
            xi = np.empty(nu.size)
            psi[order_a] = s_psi
            xi[order_b] = s_xi
            support = [
                ((int(order_a[i]), int(order_b[j])), m) for i, j, m in s_support
            ]
            route_info = {"route": "monotone", "dual_violation": violation}
        else:
            monotone_ok = False
    if not monotone_ok or not route_info:
        support_raw, psi, xi, cost, violation, res = _solve_pairs_simplex(
            cmat, mu.weights, nu.weights
        )
        support = [((i, j), m) for i, j, m in support_raw]
        min_rc = res.min_nonbasic_reduced_cost
        route_info = {"route": "simplex", "dual_violation": violation}

    slack = max(
        (abs(psi[i] + xi[j] - cmat[i, j]) for (i, j), m in support),
        default=0.0,
    )
    plan = MultiPlan(
        support=support,
        marginals=[mu, nu],
        total_cost=float(cost),
        duals=[psi, xi],
        max_slack=float(slack),
        dual_violation=float(route_info["dual_violation"]),
        min_reduced_cost=min_rc,
    )
    potential = Potential(psi=psi, xi=xi, source_points=mu.points, target_points=nu.points)
    return plan, potential


# ---------------------------------------------------------------------------
# multi-marginal solver
# ---------------------------------------------------------------------------


class _CostCache:
    """Memoized barycenter cost per index tuple."""

    def __init__(self, measures, weights, profile, allow_nonstandard=False):
        self.measures = measures
        self.weights = np.asarray(weights, dtype=float)
        self.profile = profile
        self.chart = measures[0].chart
        self.allow_nonstandard = allow_nonstandard
        self.solutions: dict = {}

    def solve(self, idx) -> BarycenterSolution:
        idx = tuple(int(i) for i in idx)
        if idx not in self.solutions:
            pts = np.array([m.points[a] for m, a in zip(self.measures, idx)])
            cfg = Configuration(
                chart=self.chart, profile=self.profile, points=pts, weights=self.weights
            )
            self.solutions[idx] = solve_barycenter(cfg, allow_nonstandard=self.allow_nonstandard)
        return self.solutions[idx]

    def cost(self, idx) -> float:
        return self.solve(idx).value


def make_cost_fn(measures, weights, profile, allow_nonstandard=False):
    """Memoized C(index tuple) evaluator shared by solver and checks."""
    cache = _CostCache(measures, weights, profile, allow_nonstandard)
    return cache


def solve_mmot(
    measures,
    weights,
    profile: CostProfile,
    *,
    allow_nonstandard: bool = False,
    force_simplex: bool = False,
) -> MultiPlan:
    """Multi-marginal optimal plan for the barycenter cost C.

    C is evaluated by solving the barycenter problem on every needed index
    tuple (memoized).  Raises SizeLimit when the full tuple LP would
    exceed the desk-scale budget and no structural fast path applies.
    """
    if len(measures) < 2:
        raise ChartMembershipError("need n >= 2 marginals")
    chart = _require_same_chart(measures)
    if not profile.standard and not allow_nonstandard:
        raise ProfileViolatesAssumptions(
            f"{profile.name} violates H2; pass allow_nonstandard to use it anyway"
        )
    weights = np.asarray(weights, dtype=float)
    if weights.size != len(measures) or np.any(weights <= 0) or abs(weights.sum() - 1.0) > TOL.weight_sum:
        raise ChartMembershipError("weights must be positive and sum to 1")

    sizes = [m.size for m in measures]
    cache = _CostCache(measures, weights, profile, allow_nonstandard)

    # forced plan: at most one marginal with more than one atom
    big = [i for i, s in enumerate(sizes) if s > 1]
    if len(big) <= 1 and not force_simplex:
        return _solve_forced(measures, weights, cache, big)

    if len(measures) == 2 and chart.kind == "euclidean" and chart.dim == 1 and not force_simplex:
        plan = _solve_mmot_line2(measures, weights, profile, cache)
        if plan is not None:
            return plan

    n_tuples = int(np.prod(sizes))
    if n_tuples > TUPLE_BUDGET:
        raise SizeLimit(
            f"product support {n_tuples} exceeds the {TUPLE_BUDGET}-tuple budget"
        )
    cost_flat = np.empty(n_tuples)
    for flat, idx in enumerate(itertools.product(*[range(s) for s in sizes])):
        cost_flat[flat] = cache.cost(idx)
    x, duals, res = solve_tuple_lp(cost_flat, sizes, [m.weights for m in measures])
    support = []
    for flat in np.nonzero(x > 1e-15)[0]:
        idx = tuple(int(a) for a in np.unravel_index(int(flat), sizes))
        support.append((idx, float(x[flat])))
    slack = max(
        (
            abs(sum(d[a] for d, a in zip(duals, idx)) - cache.cost(idx))
            for idx, _ in support
        ),
        default=0.0,
    )
    return MultiPlan(
        support=support,
        marginals=list(measures),
        total_cost=float(res.objective),
        weights=weights,
        duals=duals,
        max_slack=float(slack),
        dual_violation=max(0.0, -float(res.reduced_costs.min())),
        min_reduced_cost=res.min_nonbasic_reduced_cost,
        tuple_solutions=cache.solutions,
    )


def _solve_forced(measures, weights, cache, big):
    """Plan forced by the marginal constraints (<= 1 non-singleton marginal)."""
    sizes = [m.size for m in measures]
    if not big:
        idx = tuple(0 for _ in sizes)
        c = cache.cost(idx)
        duals = [np.array([c])] + [np.array([0.0]) for _ in sizes[1:]]
        return MultiPlan(
            support=[(idx, 1.0)],
            marginals=list(measures),
            total_cost=c,
            weights=weights,
            duals=duals,
            max_slack=0.0,
            dual_violation=0.0,
            min_reduced_cost=math.inf,
            tuple_solutions=cache.solutions,
        )
    b = big[0]
    support, costs = [], []
    for a in range(sizes[b]):
        idx = tuple(a if i == b else 0 for i in range(len(sizes)))
        support.append((idx, float(measures[b].weights[a])))
        costs.append(cache.cost(idx))
    duals = []
    for i, s in enumerate(sizes):
        if i == b:
            duals.append(np.array(costs))
        else:
            duals.append(np.zeros(s))
    total = float(sum(m * c for (_, m), c in zip(support, costs)))
    return MultiPlan(
        support=support,
        marginals=list(measures),
        total_cost=total,
        weights=weights,
        duals=duals,
        max_slack=0.0,
        dual_violation=0.0,
        min_reduced_cost=math.inf,
        tuple_solutions=cache.solutions,
    )


def _solve_mmot_line2(measures, weights, profile, cache):
    """Two marginals on the Euclidean line: C(x1, x2) is convex in x1 - x2
    (infimal convolution of convex profiles), so the sorted monotone plan is
    optimal; duals are chain-propagated and verified."""
    mu, nu = measures
    order_a = np.argsort(mu.points[:, 0], kind="stable")
    order_b = np.argsort(nu.points[:, 0], kind="stable")
    d = np.abs(mu.points[order_a, 0][:, None] - nu.points[order_b, 0][None, :])
    cmat, _ = pair_cost_line(profile, float(weights[0]), float(weights[1]), d)
    out = _solve_pairs_monotone(cmat, mu.weights[order_a], nu.weights[order_b])
    if out is None:
        return None
    s_support, s_psi, s_xi, cost, violation = out
    psi = np.empty(mu.size)
    xi = np.empty(nu.size)
    psi[order_a] = s_psi
    xi[order_b] = s_xi
    support = [((int(order_a[i]), int(order_b[j])), m) for i, j, m in s_support]
    slack = max(
        (abs(psi[ia] + xi[jb] - cache.cost((ia, jb))) for (ia, jb), _ in support),
        default=0.0,
    )
    return MultiPlan(
        support=support,
        marginals=list(measures),
        total_cost=float(cost),
        weights=np.asarray(weights, dtype=float),
        duals=[psi, xi],
        max_slack=float(slack),
        dual_violation=float(violation),
        min_reduced_cost=None,
        tuple_solutions=cache.solutions,
    )


def support_barycenters(plan: MultiPlan, weights, profile: CostProfile, *, allow_nonstandard=False):
    """BarycenterSolution for every support tuple of an MMOT plan."""
    cache = _CostCache(plan.marginals, weights, profile, allow_nonstandard)
    if plan.tuple_solutions:
        cache.solutions.update(plan.tuple_solutions)
    return {idx: cache.solve(idx) for idx, _ in plan.support}


# ---------------------------------------------------------------------------
# c-transforms and the Monge map
# ---------------------------------------------------------------------------


def c_transform(xi_values, y_points, x_points, profile: CostProfile, chart):
    """psi(x) = min_y { h(d(x, y)) - xi(y) } over the finite target set."""
    y_points = np.atleast_2d(np.asarray(y_points, dtype=float))
    x_points = np.atleast_2d(np.asarray(x_points, dtype=float))
    xi_values = np.asarray(xi_values, dtype=float)
    if y_points.shape[0] == 0:
        raise ChartMembershipError("c-transform over an empty target set")
    d = chart.dist(x_points[:, None, :], y_points[None, :, :])
    return np.min(profile.h(d) - xi_values[None, :], axis=1)


@dataclass(frozen=True)
class MongeMapResult:
    point: np.ndarray | None
    ambiguous: bool
    active_index: int
    gradient_norm: float


def monge_map_from_potential(
    potential: Potential, x, profile: CostProfile, chart, tie_tol: float = 1e-9
) -> MongeMapResult:
    """T(x) from the potential via the tangency formula.

    The gradient of psi at a support atom comes from the unique active
    competitor y* of the c-transform; when two competitors are active
    within ``tie_tol`` the atom is flagged ambiguous (mass splitting at a
    mu-null tie) instead of raising.
    """
    x = np.asarray(x, dtype=float)
    vals = (
        profile.h(chart.dist(potential.target_points, x[None, :]))
        - potential.xi
    )
    order = np.argsort(vals, kind="stable")
    best = int(order[0])
    ambiguous = vals.size > 1 and vals[order[1]] - vals[order[0]] <= tie_tol
    y_star = potential.target_points[best]
    d = float(chart.dist(x, y_star))
    if d <= TOL.diagonal_guard:
        return MongeMapResult(point=x.copy(), ambiguous=ambiguous, active_index=best, gradient_norm=0.0)
    grad = profile.h1(d) * chart.grad_dist(x, y_star)
    gn = chart.norm(x, grad)
    step = profile.inv_deriv(gn)
    point = chart.exp(x, (-step / gn) * grad)
    return MongeMapResult(point=point, ambiguous=ambiguous, active_index=best, gradient_norm=gn)


# ---------------------------------------------------------------------------
# structure checks
# ---------------------------------------------------------------------------


def check_cyclical_monotonicity(plan: MultiPlan, cost_fn, k: int = 2) -> float:
    """Max first-coordinate swap violation over support pairs (<= 0 up to
    tolerance for optimal plans).  ``cost_fn`` maps an index tuple to C."""
    if k != 2:
        raise ValueError("only pairwise swaps (k = 2) are implemented")
    tuples = [idx for idx, _ in plan.support]
    worst = 0.0
    for a in range(len(tuples)):
        for b in range(a + 1, len(tuples)):
            s, t = tuples[a], tuples[b]
            swap_st = (s[0],) + t[1:]
            swap_ts = (t[0],) + s[1:]
            viol = cost_fn(s) + cost_fn(t) - cost_fn(swap_st) - cost_fn(swap_ts)
            worst = max(worst, viol)
    return worst


@dataclass(frozen=True)
class InjectivityReport:
    pairs_checked: int
    violations: list  # [(idx_a, idx_b, barycenter), ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_injectivity(
    plan: MultiPlan,
    solutions: dict,
    *,
    z_tol: float = TOL.injectivity_z,
    x_tol: float = TOL.injectivity_x,
    raise_on_violation: bool = True,
) -> InjectivityReport:
    """Support tuples whose barycenters coincide must coincide themselves.

    Scans all support pairs; a violation raises InjectivityViolation with
    the witness pair (expected only for profiles breaking H2).
    """
    chart = plan.marginals[0].chart
    tuples = [idx for idx, _ in plan.support]
    violations = []
    pairs = 0
    for a in range(len(tuples)):
        for b in range(a + 1, len(tuples)):
            pairs += 1
            sa, sb = solutions[tuples[a]], solutions[tuples[b]]
            if chart.dist(sa.point, sb.point) <= z_tol:
                gap = max(
                    float(
                        chart.dist(
                            plan.marginals[i].points[tuples[a][i]],
                            plan.marginals[i].points[tuples[b][i]],
                        )
                    )
                    for i in range(plan.n_marginals)
                )
                if gap > x_tol:
                    violations.append((tuples[a], tuples[b], sa.point))
    if violations and raise_on_violation:
        a, b, z = violations[0]
        raise InjectivityViolation(a, b, z)
    return InjectivityReport(pairs_checked=pairs, violations=violations)
