"""Weighted h-barycenters of finitely many points on a chart.

The objective is Phi(x, y) = sum_i lambda_i h(d(y, x_i)).  The solver is a
multi-start Riemannian descent: seeds at every marginal point plus the
argmin of a coarse polar grid covering the coercivity ball, Armijo
backtracking along exp_z(-t grad), and a guarded Newton polish in the
orthonormal tangent frame to push the residual to solver tolerance.
Phi is not geodesically convex in general, so the grid provides the
global certificate at desk scale.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .cost import CostProfile, OriginClass, counterexample_profile, power_profile
from .errors import CutLocusError, NonConvergence, ProfileViolatesAssumptions
from .geometry import EuclideanChart
from .invmap import cost_gradient, hess_cost
from .tolerances import DEFAULT as TOL

ARMIJO_C = 1e-4
ARMIJO_CONTRACT = 0.5
MAX_ITER = 500


@dataclass(frozen=True)
class Configuration:
    """Points x_1..x_n with positive weights summing to 1, plus cost context."""

    chart: object
    profile: CostProfile
    points: np.ndarray   # (n, coord_dim)
    weights: np.ndarray  # (n,)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if pts.shape[0] < 2:
            raise ValueError("a configuration needs n >= 2 points")
        if w.shape[0] != pts.shape[0]:
            raise ValueError("one weight per point")
        if np.any(w <= 0) or abs(float(w.sum()) - 1.0) > TOL.weight_sum:
            raise ValueError("weights must be positive and sum to 1")
        for p in pts:
            self.chart.check_point(p)

    @property
    def n(self) -> int:
        return int(self.points.shape[0])


@dataclass(frozen=True)
class BarycenterSolution:
    point: np.ndarray
    value: float
    grad_residual: float
    cut_margins: np.ndarray          # injectivity_radius - dist(z, x_i)
    alternates: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = True


def objective_phi(config: Configuration, y) -> float:
    """Phi(x, y) = sum_i lambda_i h(d(y, x_i))."""
    d = config.chart.dist(config.points, np.asarray(y, dtype=float))
    return float(np.sum(config.weights * config.profile.h(d)))


def _phi_gradient(config: Configuration, z):
    g = np.zeros_like(np.asarray(z, dtype=float))
    for lam, x in zip(config.weights, config.points):
        g = g + lam * cost_gradient(config.chart, config.profile, z, x)
    return g


def first_order_residual(config: Configuration, z) -> float:
    """Norm of sum_i lambda_i grad_z h(d(z, x_i)); collisions contribute 0."""
    chart = config.chart
    z = np.asarray(z, dtype=float)
    inj = chart.injectivity_radius(z)
    if math.isfinite(inj):
        d = chart.dist(config.points, z)
        if np.any(d >= inj - TOL.cut_locus_guard):
            raise CutLocusError("residual undefined: a marginal point sits on the cut locus")
    return chart.norm(z, _phi_gradient(config, z))


def _solver_tol(config: Configuration) -> float:
    if config.chart.kind == "sphere":
        return TOL.grad_residual_sphere
    return TOL.grad_residual


def _coercivity_ball(config: Configuration):
    """Ball certain to contain every global minimizer (via the affine bound)."""
    values = [objective_phi(config, x) for x in config.points]
    best = int(np.argmin(values))
    c0 = values[best]
    lam = float(config.weights[best])
    radius = config.profile.h_inverse(c0 / lam) * 1.001 + 1e-9
    inj = config.chart.injectivity_radius(config.points[best])
    if math.isfinite(inj):
        radius = min(radius, inj * 0.999)
    return config.points[best], radius


def _lexicographic_less(a, b) -> bool:
    for ai, bi in zip(a, b):
        if ai < bi - 1e-15:
            return True
        if ai > bi + 1e-15:
            return False
    return False


def _descend(config: Configuration, z0, max_iter=MAX_ITER):
    """Armijo gradient descent into the Newton basin, then polish; repeated
    with a tighter descent target if the polish stalls."""
    chart, profile = config.chart, config.profile
    z = np.asarray(z0, dtype=float).copy()
    phi = objective_phi(config, z)
    total_it = 0
    gd_tol = 1e-5
    for _ in range(3):
        while total_it < max_iter:
            g = _phi_gradient(config, z)
            gn = chart.norm(z, g)
            if gn < gd_tol:
                break
            step, accepted = 1.0, False
            while step > 1e-16:
                trial = chart.exp(z, -step * g)
                trial_phi = objective_phi(config, trial)
                if trial_phi <= phi - ARMIJO_C * step * gn * gn:
                    accepted = True
                    break
                step *= ARMIJO_CONTRACT
            total_it += 1
            if not accepted:
                break
            z, phi = trial, trial_phi
            # iterate landed exactly on a marginal point of a singular
            # profile: nudge off it so the gradient stays informative (the
            # grid certificate catches the case where that point is optimal)
            if profile.origin_class is OriginClass.SINGULAR_AT_ZERO:
                d = chart.dist(config.points, z)
                if np.any(d <= TOL.diagonal_guard):
                    frame = chart.frame(z)
                    z = chart.exp(z, TOL.collision_perturb * frame[0])
                    phi = objective_phi(config, z)
        z, phi = _newton_polish(config, z, phi)
        if chart.norm(z, _phi_gradient(config, z)) <= 1e-12 or total_it >= max_iter:
            break
        gd_tol *= 1e-2
    return z, phi, max(total_it, 1)


def _newton_polish(config: Configuration, z, phi, rounds: int = 12):
    """Frame-coordinate Newton steps; each accepted only if it improves both
    the objective and the residual."""
    chart, profile = config.chart, config.profile
    for _ in range(rounds):
        g = _phi_gradient(config, z)
        gn = chart.norm(z, g)
        if gn < 1e-14:
            break
        frame = chart.frame(z)
        gc = np.array([chart.inner(z, g, e) for e in frame])
        try:
            H = sum(
                lam * hess_cost(profile, chart, z, x).matrix
                for lam, x in zip(config.weights, config.points)
            )
            delta = np.linalg.solve(H, -gc)
        except Exception:
            break
        if not np.all(np.isfinite(delta)):
            break
        v = sum(c * e for c, e in zip(delta, frame))
        trial = chart.exp(z, v)
        trial_phi = objective_phi(config, trial)
        trial_res = chart.norm(trial, _phi_gradient(config, trial))
        if trial_phi <= phi + 1e-15 and trial_res < gn:
            z, phi = trial, trial_phi
        else:
            break
    return z, phi


def _finish_solution(config: Configuration, z, phi, iterations, alternates=()):
    chart = config.chart
    residual = chart.norm(z, _phi_gradient(config, z))
    inj = chart.injectivity_radius(z)
    dists = chart.dist(config.points, z)
    margins = (inj - dists) if math.isfinite(inj) else np.full(config.n, math.inf)
    return BarycenterSolution(
        point=z,
        value=phi,
        grad_residual=float(residual),
        cut_margins=np.asarray(margins, dtype=float),
        alternates=list(alternates),
        iterations=iterations,
        converged=True,
    )


def _solve_two_point(config: Configuration) -> BarycenterSolution | None:
    """Exact path for n = 2: minimizers of lam1 h(d1) + lam2 h(d2) satisfy
    d1 + d2 = d(x1, x2) (triangle equality forces them onto the minimal
    geodesic), so a monotone 1-d root find locates the barycenter."""
    chart = config.chart
    x1, x2 = config.points
    d = float(chart.dist(x1, x2))
    if d <= TOL.diagonal_guard:
        return _finish_solution(config, np.asarray(x1, dtype=float).copy(), 0.0, 0)
    inj = chart.injectivity_radius(x1)
    if math.isfinite(inj) and d >= inj - TOL.cut_locus_guard:
        return None  # antipodal-degenerate; let the generic search handle it
    lam1, lam2 = float(config.weights[0]), float(config.weights[1])
    cost, t = pair_cost_line(config.profile, lam1, lam2, np.array([d]))
    t = float(t[0])
    direction = chart.log(x1, x2)
    z = chart.exp(x1, (t / d) * direction)
    phi = objective_phi(config, z)
    z, phi = _newton_polish(config, z, phi)
    return _finish_solution(config, z, phi, 1)


def solve_barycenter(
    config: Configuration,
    *,
    coarse_grid: int = 64,
    certify_grid: int = 0,
    allow_nonstandard: bool = False,
    max_iter: int = MAX_ITER,
    method: str = "auto",
) -> BarycenterSolution:
    """Global h-barycenter of the configuration.

    ``method="auto"`` takes the exact geodesic path for two-point
    configurations and the multi-start descent otherwise;
    ``method="descent"`` forces the generic search.  Raises
    ProfileViolatesAssumptions for quarantined profiles unless
    ``allow_nonstandard`` is set, and NonConvergence (carrying the best
    iterate) when the residual tolerance cannot be met.  ``certify_grid``
    > 0 additionally checks the solution against that many candidate
    points covering the coercivity ball.
    """
    if not config.profile.standard and not allow_nonstandard:
        raise ProfileViolatesAssumptions(
            f"{config.profile.name} violates H2; pass allow_nonstandard to use it anyway"
        )
    chart = config.chart
    if method == "auto" and config.n == 2:
        solution = _solve_two_point(config)
        if solution is not None:
            tol = _solver_tol(config)
            if config.profile.standard and (
                solution.grad_residual > tol or np.any(solution.cut_margins <= 0)
            ):
                raise NonConvergence(solution)
            return solution
    center, radius = _coercivity_ball(config)
    grid = chart.ball_grid(center, radius, coarse_grid)
    grid_vals = np.array([objective_phi(config, p) for p in grid])
    seeds = [np.asarray(p, dtype=float) for p in config.points]
    seeds.append(grid[int(np.argmin(grid_vals))])

    best_z, best_phi, total_it = None, math.inf, 0
    finals = []
    for seed in seeds:
        z, phi, it = _descend(config, seed, max_iter=max_iter)
        total_it += it
        finals.append((z, phi))
        if phi < best_phi - TOL.value_tie or (
            abs(phi - best_phi) <= TOL.value_tie
            and (best_z is None or _lexicographic_less(z, best_z))
        ):
            best_z, best_phi = z, phi

    alternates = [
        z
        for z, phi in finals
        if abs(phi - best_phi) <= TOL.value_tie and chart.dist(z, best_z) > 1e-7
    ]

    residual = chart.norm(best_z, _phi_gradient(config, best_z))
    inj = chart.injectivity_radius(best_z)
    dists = chart.dist(config.points, best_z)
    margins = (inj - dists) if math.isfinite(inj) else np.full(config.n, math.inf)

    solution = BarycenterSolution(
        point=best_z,
        value=best_phi,
        grad_residual=float(residual),
        cut_margins=np.asarray(margins, dtype=float),
        alternates=alternates,
        iterations=total_it,
        converged=True,
    )
    tol = _solver_tol(config)
    if config.profile.standard and (residual > tol or np.any(margins <= 0)):
        raise NonConvergence(solution)
    if certify_grid:
        cert = chart.ball_grid(center, radius, certify_grid)
        cert_min = min(objective_phi(config, p) for p in cert)
        if best_phi > cert_min + TOL.grid_certificate:
            raise NonConvergence(solution, "descent missed the grid minimum")
    return solution


def barycenter_cost(config: Configuration, **kwargs) -> float:
    """C(x_1, ..., x_n) = inf_y Phi(x, y), the multi-marginal cost entry."""
    return solve_barycenter(config, **kwargs).value


# ---------------------------------------------------------------------------
# fast path: two points on the Euclidean line (vectorized over instances)
# ---------------------------------------------------------------------------


def pair_cost_line(profile: CostProfile, lam1: float, lam2: float, dists):
    """Vectorized C(x1, x2) for two-point configurations at given distances.

    Minimizes lam1 h(t) + lam2 h(d - t) over t in [0, d]; the derivative is
    strictly increasing so bisection is exact.  Returns (costs, offsets)
    where ``offsets`` is the minimizing t (distance of the barycenter from
    the first point along the connecting geodesic).
    """
    d = np.asarray(dists, dtype=float)
    lo = np.zeros_like(d)
    hi = d.copy()
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        deriv = lam1 * profile.h1(mid) - lam2 * profile.h1(np.maximum(d - mid, 0.0))
        neg = deriv < 0.0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    t = 0.5 * (lo + hi)
    cost = lam1 * profile.h(t) + lam2 * profile.h(np.maximum(d - t, 0.0))
    return cost, t


# ---------------------------------------------------------------------------
# the injectivity counterexample (h(t) = t^2 + t)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SharedBarycenterReport:
    configs: list
    shared_point: float
    grid_minima: list            # argmin of each objective on the dense grid
    subgradient_intervals: list  # [D^- Phi(0), D^+ Phi(0)] per config
    quadratic_barycenters: list  # minimizers under h = d^2/2 instead


def one_sided_derivative(f, x: float, side: int, h0: float = 1e-5) -> float:
    """One-sided derivative by Richardson-extrapolated one-sided differences."""
    a = (f(x + side * h0) - f(x)) / (side * h0)
    b = (f(x + side * h0 / 2) - f(x)) / (side * h0 / 2)
    return 2.0 * b - a


def counterexample_shared_barycenter(grid_points: int = 100001) -> SharedBarycenterReport:
    """Reproduce the failure of barycenter injectivity when h'(0) > 0.

    On the line with weights (0.8, 0.2) and h(t) = t^2 + t, the
    configurations (0, 1) and (0, 0.5) both have their global minimum at 0:
    the dense-grid minimum lands at 0 and both subdifferential intervals at
    0 contain it.  Under h = d^2/2 the same configurations separate.
    """
    profile = counterexample_profile()
    chart = EuclideanChart(dim=1)
    weights = np.array([0.8, 0.2])
    configs = [np.array([[0.0], [1.0]]), np.array([[0.0], [0.5]])]
    grid = np.linspace(-2.0, 2.0, grid_points)

    minima, intervals = [], []
    for pts in configs:
        cfg = Configuration(chart=chart, profile=profile, points=pts, weights=weights)
        vals = (
            weights[0] * profile.h(np.abs(grid - pts[0, 0]))
            + weights[1] * profile.h(np.abs(grid - pts[1, 0]))
        )
        minima.append(float(grid[int(np.argmin(vals))]))

        def f(y, cfg=cfg):
            return objective_phi(cfg, np.array([y]))

        d_minus = one_sided_derivative(f, 0.0, side=-1)
        d_plus = one_sided_derivative(f, 0.0, side=+1)
        intervals.append([d_minus, d_plus])

    quad = power_profile(2.0)
    quad_minima = []
    for pts in configs:
        cfg = Configuration(chart=chart, profile=quad, points=pts, weights=weights)
        quad_minima.append(float(solve_barycenter(cfg).point[0]))

    return SharedBarycenterReport(
        configs=[c.tolist() for c in configs],
        shared_point=0.0,
        grid_minima=minima,
        subgradient_intervals=intervals,
        quadratic_barycenters=quad_minima,
    )
