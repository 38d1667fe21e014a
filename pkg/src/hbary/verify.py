"""Seeded verification suites behind ``bary verify``.

Each check runs a batch of random instances and reports its worst
violation; the verdict thresholds are the library's own certificate
tolerances.  A different seed changes the instances but must not change
any verdict.
"""

from dataclasses import dataclass
import itertools
import math

import numpy as np

from .barycenter import (
    Configuration,
    counterexample_shared_barycenter,
    objective_phi,
    solve_barycenter,
)
from .cost import counterexample_profile, power_profile
from .errors import InjectivityViolation
from .geometry import Ball, EuclideanChart, HyperbolicChart, SphereChart, hess_dist
from .invmap import (
    AnchorSlice,
    anchor_field_V,
    hess_cost,
    hessian_collision_limit_check,
    inverse_map_F,
    lipschitz_probe,
)
from .simplex import transport_constraints
from .tolerances import DEFAULT as TOL
from .transport import (
    DiscreteMeasure,
    c_transform,
    check_cyclical_monotonicity,
    check_injectivity,
    cost_matrix,
    make_cost_fn,
    monge_map_from_potential,
    solve_lp_pair,
    solve_mmot,
    solve_ot2,
    support_barycenters,
)


@dataclass(frozen=True)
class CheckRow:
    check: str
    instances: int
    max_violation: float
    verdict: str
    threshold: float = 0.0

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def rescaled(self, tol_scale: float) -> "CheckRow":
        verdict = "PASS" if self.max_violation <= self.threshold * tol_scale else "FAIL"
        if self.threshold == 0.0:
            verdict = self.verdict
        return CheckRow(self.check, self.instances, self.max_violation, verdict, self.threshold)


def _row(check, instances, violation, threshold):
    verdict = "PASS" if violation <= threshold else "FAIL"
    return CheckRow(
        check=check,
        instances=instances,
        max_violation=float(violation),
        verdict=verdict,
        threshold=float(threshold),
    )


def _charts():
    return [
        EuclideanChart(dim=1),
        EuclideanChart(dim=2),
        SphereChart(dim=2, curvature=1.0),
        SphereChart(dim=2, curvature=4.0),
        HyperbolicChart(curvature=-1.0),
    ]


def _random_point(chart, rng, spread=1.5):
    if chart.kind == "euclidean":
        return rng.normal(scale=spread, size=chart.dim)
    if chart.kind == "sphere":
        v = rng.normal(size=chart.ambient_dim)
        return v / np.linalg.norm(v) * chart.radius
    r = rng.uniform(0.0, 0.8)
    ang = rng.uniform(0.0, 2 * math.pi)
    return np.array([r * math.cos(ang), r * math.sin(ang)])


def _random_tangent(chart, rng, base, length):
    frame = chart.frame(base)
    raw = rng.normal(size=len(frame))
    raw /= np.linalg.norm(raw)
    return length * sum(c * e for c, e in zip(raw, frame))


def _random_cluster(chart, rng, n, spread=0.6):
    """n points inside a ball of radius `spread` around a random center."""
    center = _random_point(chart, rng)
    pts = []
    while len(pts) < n:
        p = chart.exp(center, _random_tangent(chart, rng, center, rng.uniform(0.05, spread)))
        if all(chart.dist(p, q) > 10 * TOL.support_distinct for q in pts):
            pts.append(p)
    return np.array(pts)


def _dirichlet(rng, n):
    w = rng.uniform(0.2, 1.0, size=n)
    return w / w.sum()


# ---------------------------------------------------------------------------
# geometry suite
# ---------------------------------------------------------------------------


def geometry_suite(seed: int = 0):
    rng = np.random.default_rng(seed)
    rows = []

    worst = 0.0
    count = 0
    for chart in _charts():
        for _ in range(60):
            base = _random_point(chart, rng)
            inj = chart.injectivity_radius(base)
            length = rng.uniform(1e-3, 0.9 * min(inj, 2.5))
            v = _random_tangent(chart, rng, base, length)
            w = chart.log(base, chart.exp(base, v))
            worst = max(worst, chart.norm(base, w - v))
            count += 1
    rows.append(_row("exp_log_roundtrip", count, worst, 1e-8))

    worst = 0.0
    tri = 0.0
    for chart in _charts():
        for _ in range(60):
            x, y, z = (_random_point(chart, rng) for _ in range(3))
            worst = max(worst, abs(float(chart.dist(x, y)) - float(chart.dist(y, x))))
            tri = max(tri, float(chart.dist(x, z)) - float(chart.dist(x, y)) - float(chart.dist(y, z)))
    rows.append(_row("dist_symmetry", 300, worst, TOL.dist_symmetry))
    rows.append(_row("triangle_inequality", 300, tri, 1e-10))

    worst = 0.0
    step = 1e-4
    count = 0
    for chart in _charts():
        for _ in range(40):
            z = _random_point(chart, rng)
            x = _random_point(chart, rng)
            r = float(chart.dist(z, x))
            inj = chart.injectivity_radius(z)
            if r < 0.05 or r > 0.9 * min(inj, 4.0):
                continue
            grad = chart.grad_dist(z, x)
            u = _random_tangent(chart, rng, z, 1.0)
            fd = (
                float(chart.dist(chart.exp(z, step * u), x))
                - float(chart.dist(chart.exp(z, -step * u), x))
            ) / (2 * step)
            worst = max(worst, abs(chart.inner(z, grad, u) - fd))
            count += 1
    rows.append(_row("grad_dist_fd", count, worst, 1e-6))

    worst = 0.0
    count = 0
    for chart in _charts():
        if chart.dim < 2 and chart.kind == "euclidean":
            continue
        for _ in range(25):
            z = _random_point(chart, rng)
            x = _random_point(chart, rng)
            r = float(chart.dist(z, x))
            inj = chart.injectivity_radius(z)
            if r < 5e-2 or r > 0.9 * min(inj, 4.0):
                continue
            H = hess_dist(chart, z, x)
            step = _hess_step(r)
            Hfd = _fd_hessian(chart, lambda p: float(chart.dist(p, x)), z, step)
            worst = max(worst, float(np.max(np.abs(H - Hfd))))
            count += 1
    rows.append(_row("hess_dist_fd", count, worst, 1e-5))

    sphere = SphereChart(dim=2, curvature=1.0)
    viol = abs(sphere.injectivity_radius(None) - math.pi)
    viol = max(viol, abs(SphereChart(dim=2, curvature=4.0).injectivity_radius(None) - math.pi / 2))
    rows.append(_row("injectivity_radius_values", 2, viol, 1e-12))

    worst = 0.0
    for chart in _charts():
        if chart.dim != 2:
            continue
        center = _random_point(chart, rng)
        radius = 0.8
        part = chart.uniform_cell_volumes(Ball(center=center, radius=radius), 5)
        worst = max(worst, abs(float(part.volumes.sum()) / chart.ball_area(radius) - 1.0))
    rows.append(_row("cell_volume_sum", 3, worst, 0.01))
    return rows


def _hess_step(r: float) -> float:
    """Second-difference step balancing truncation (~ step^2 / r^3 near the
    diagonal) against roundoff."""
    return max(2e-5, TOL.fd_hess_step * min(1.0, r) ** 1.5)


def _fd_hessian(chart, f, z, step):
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


# ---------------------------------------------------------------------------
# transport suite
# ---------------------------------------------------------------------------


def enumerate_transport_cost(cmat, wa, wb):
    """Brute-force optimum over all vertices of the transportation polytope."""
    cmat = np.asarray(cmat, dtype=float)
    m, n = cmat.shape
    A, _ = transport_constraints([m, n])
    b = np.concatenate([wa, wb[:-1]])
    best = math.inf
    for cols in itertools.combinations(range(m * n), m + n - 1):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-10:
            continue
        x = np.linalg.solve(B, b)
        if np.all(x >= -1e-12):
            cost = float(cmat.ravel()[list(cols)] @ x)
            best = min(best, cost)
    return best


def transport_suite(seed: int = 0):
    rng = np.random.default_rng(seed)
    rows = []

    worst = 0.0
    count = 0
    for m, n in [(2, 2), (2, 3), (3, 3)]:
        for _ in range(10):
            cmat = rng.uniform(0.0, 5.0, size=(m, n))
            wa = _dirichlet(rng, m)
            wb = _dirichlet(rng, n)
            _, _, _, cost, _ = solve_lp_pair(cmat, wa, wb)
            ref = enumerate_transport_cost(cmat, wa, wb)
            worst = max(worst, abs(cost - ref))
            count += 1
    rows.append(_row("lp_vs_vertex_enumeration", count, worst, 1e-9))

    gap_worst, slack_worst, mono_worst = 0.0, 0.0, 0.0
    count = 0
    charts = [EuclideanChart(dim=1), EuclideanChart(dim=2), SphereChart(dim=2, curvature=1.0)]
    for chart in charts:
        for p in (1.5, 2.0, 3.0):
            profile = power_profile(p)
            mu = DiscreteMeasure(chart, _random_cluster(chart, rng, 3), _dirichlet(rng, 3))
            nu = DiscreteMeasure(chart, _random_cluster(chart, rng, 3), _dirichlet(rng, 3))
            plan, pot = solve_ot2(mu, nu, profile)
            cmat = cost_matrix(mu, nu, profile)
            gap = abs(
                plan.total_cost - float(pot.psi @ mu.weights + pot.xi @ nu.weights)
            )
            gap_worst = max(gap_worst, gap)
            slack_worst = max(slack_worst, plan.max_slack, plan.dual_violation)
            count += 1
    rows.append(_row("duality_gap", count, gap_worst, TOL.duality_gap))
    rows.append(_row("support_in_contact_set", count, slack_worst, TOL.slackness))

    # c-transform: idempotence and the h'(R) Lipschitz bound
    idem_worst, lip_worst = 0.0, 0.0
    for chart in charts:
        profile = power_profile(1.5)
        X = _random_cluster(chart, rng, 6)
        Y = _random_cluster(chart, rng, 5)
        xi = rng.uniform(-1.0, 1.0, size=5)
        psi = c_transform(xi, Y, X, profile, chart)
        xi2 = c_transform(psi, X, Y, profile, chart)
        psi2 = c_transform(xi2, Y, X, profile, chart)
        idem_worst = max(idem_worst, float(np.max(np.abs(psi2 - psi))))
        pts = np.vstack([X, Y])
        R = float(np.max(chart.dist(pts[:, None, :], pts[None, :, :])))
        L = profile.h1(R)
        for a in range(len(X)):
            for b in range(len(X)):
                if a != b:
                    lip_worst = max(
                        lip_worst,
                        abs(psi[a] - psi[b]) - L * float(chart.dist(X[a], X[b])),
                    )
    rows.append(_row("ctransform_idempotent", 3, idem_worst, 1e-12))
    rows.append(_row("ctransform_lipschitz", 3, lip_worst, 1e-9))

    # Monge map against plan partners on single-atom rows
    monge_worst = 0.0
    count = 0
    for chart in charts:
        profile = power_profile(2.0)
        mu = DiscreteMeasure(chart, _random_cluster(chart, rng, 4), np.full(4, 0.25))
        nu = DiscreteMeasure(chart, _random_cluster(chart, rng, 4), np.full(4, 0.25))
        plan, pot = solve_ot2(mu, nu, profile)
        rows_mass = {}
        for (i, j), mass in plan.support:
            rows_mass.setdefault(i, []).append((j, mass))
        for i, pairs in rows_mass.items():
            if len(pairs) != 1:
                continue
            res = monge_map_from_potential(pot, mu.points[i], profile, chart)
            if res.ambiguous:
                continue
            partner = nu.points[pairs[0][0]]
            monge_worst = max(monge_worst, float(chart.dist(res.point, partner)))
            count += 1
    rows.append(_row("tangency_monge_formula", count, monge_worst, TOL.inverse_roundtrip))

    # super-differentiability decay of the cost remainder (sphere)
    sphere = SphereChart(dim=2, curvature=1.0)
    profile = power_profile(1.5)
    ratio_worst = 0.0
    for _ in range(40):
        x = _random_point(sphere, rng)
        y = _random_point(sphere, rng)
        d = float(sphere.dist(x, y))
        if d < 0.3 or d > 2.8:
            continue
        u = _random_tangent(sphere, rng, x, 1.0)
        v = -profile.h1(d) * sphere.log(x, y) / d
        eps_over_t = []
        for k in (4, 12):
            t = 2.0**-k
            val = profile.h(float(sphere.dist(sphere.exp(x, t * u), y)))
            eps = val - profile.h(d) - t * sphere.inner(x, v, u)
            eps_over_t.append(abs(eps) / t)
        if eps_over_t[0] > 1e-12:
            ratio_worst = max(ratio_worst, eps_over_t[1] / eps_over_t[0])
    rows.append(_row("superdiff_remainder_decay", 40, ratio_worst, 2.0**-6))

    # cyclical monotonicity of optimal multi-marginal plans
    mono_worst = 0.0
    count = 0
    for chart in [EuclideanChart(dim=2), SphereChart(dim=2, curvature=1.0)]:
        profile = power_profile(1.5)
        lam = _dirichlet(rng, 3)
        ms = [
            DiscreteMeasure(chart, _random_cluster(chart, rng, 2), _dirichlet(rng, 2))
            for _ in range(3)
        ]
        plan = solve_mmot(ms, lam, profile)
        cache = make_cost_fn(ms, lam, profile)
        mono_worst = max(mono_worst, check_cyclical_monotonicity(plan, cache.cost))
        count += 1
    rows.append(_row("cyclical_monotonicity", count, mono_worst, 1e-8))

    # injectivity of barycenter configurations on optimal plans
    worst = 0.0
    count = 0
    for chart in [EuclideanChart(dim=2), SphereChart(dim=2, curvature=1.0)]:
        for p in (1.5, 2.0, 3.0):
            profile = power_profile(p)
            lam = _dirichlet(rng, 2)
            ms = [
                DiscreteMeasure(chart, _random_cluster(chart, rng, 3), _dirichlet(rng, 3))
                for _ in range(2)
            ]
            plan = solve_mmot(ms, lam, profile)
            sols = support_barycenters(plan, lam, profile)
            report = check_injectivity(plan, sols, raise_on_violation=False)
            worst = max(worst, float(len(report.violations)))
            count += 1
    rows.append(_row("injectivity_random_instances", count, worst, 0.0))
    return rows


# ---------------------------------------------------------------------------
# inverse-map suite
# ---------------------------------------------------------------------------


def invmap_suite(seed: int = 0):
    rng = np.random.default_rng(seed)
    rows = []
    charts = [EuclideanChart(dim=2), SphereChart(dim=2, curvature=1.0), HyperbolicChart(curvature=-1.0)]

    # F o B round trip on MMOT support tuples
    worst = 0.0
    margin_min = math.inf
    count = 0
    for chart in charts[:2]:
        for p in (1.5, 2.0, 3.0):
            profile = power_profile(p)
            n = 2 if p != 2.0 else 3
            lam = _dirichlet(rng, n)
            ms = [
                DiscreteMeasure(chart, _random_cluster(chart, rng, 2), _dirichlet(rng, 2))
                for _ in range(n)
            ]
            plan = solve_mmot(ms, lam, profile)
            sols = support_barycenters(plan, lam, profile)
            for idx, _ in plan.support:
                z = sols[idx].point
                x1 = ms[0].points[idx[0]]
                if float(chart.dist(z, x1)) <= 1e-4:
                    continue
                anchors = np.array([ms[i].points[idx[i]] for i in range(1, n)])
                slc = AnchorSlice(chart=chart, profile=profile, anchors=anchors, weights=lam)
                worst = max(worst, float(chart.dist(inverse_map_F(slc, z), x1)))
                count += 1
                if chart.kind == "sphere":
                    margin_min = min(margin_min, float(np.min(sols[idx].cut_margins)))
    rows.append(_row("inverse_map_roundtrip", count, worst, TOL.inverse_roundtrip))
    margin_viol = max(0.0, TOL.cut_margin_sphere - margin_min) if math.isfinite(margin_min) else 0.0
    rows.append(_row("cut_locus_margins_sphere", count, margin_viol, 0.0))

    # Hessian of the cost vs second central differences
    worst = 0.0
    count = 0
    for chart in charts:
        for p in (1.5, 2.0, 3.0):
            profile = power_profile(p)
            for _ in range(15):
                z = _random_point(chart, rng)
                x = _random_point(chart, rng)
                r = float(chart.dist(z, x))
                if r < 0.05 or r > 0.9 * min(chart.injectivity_radius(z), 3.0):
                    continue
                H = hess_cost(profile, chart, z, x).matrix
                Hfd = _fd_hessian(
                    chart, lambda pnt: float(profile.h(chart.dist(pnt, x))), z, TOL.fd_hess_step
                )
                worst = max(worst, float(np.max(np.abs(H - Hfd))))
                count += 1
    rows.append(_row("hess_cost_fd", count, worst, 1e-4))

    # radial eigenvector alignment
    worst = 0.0
    for chart in charts:
        profile = power_profile(3.0)
        for _ in range(10):
            z = _random_point(chart, rng)
            x = _random_point(chart, rng)
            r = float(chart.dist(z, x))
            if r < 0.05 or r > 0.9 * min(chart.injectivity_radius(z), 3.0):
                continue
            H = hess_cost(profile, chart, z, x).matrix
            from .geometry import radial_unit_coords

            u = radial_unit_coords(chart, z, x)
            vals, vecs = np.linalg.eigh(H)
            idx = int(np.argmin(np.abs(vals - profile.h2(r))))
            angle = math.acos(min(1.0, abs(float(vecs[:, idx] @ u))))
            worst = max(worst, angle)
    rows.append(_row("radial_eigv_alignment", 30, worst, 1e-6))

    # collision limit slope for p = 3, blow-up slope for p = 1.5
    chart = EuclideanChart(dim=2)
    rep = hessian_collision_limit_check(
        power_profile(3.0), chart, np.zeros(2), [10.0**-k for k in range(1, 5)], seed=seed
    )
    rows.append(_row("collision_limit_slope_p3", rep.radii.size, abs(rep.slope - 1.0), 0.1))

    p15 = power_profile(1.5)
    ts = np.array([10.0**-k for k in range(2, 7)])
    slope = float(np.polyfit(np.log(ts), np.log(p15.h2(ts)), 1)[0])
    rows.append(_row("hessian_blowup_slope_p15", ts.size, abs(slope + 0.5), 0.05))

    # Lipschitz probe: stability under doubling, and boundedness across an
    # anchor collision for a C2-at-zero profile
    chart = EuclideanChart(dim=2)
    profile = power_profile(2.0)
    slc = AnchorSlice(
        chart=chart,
        profile=profile,
        anchors=np.array([[0.6, 0.0]]),
        weights=np.array([0.5, 0.5]),
    )
    region = Ball(center=np.zeros(2), radius=1.2)
    r1 = lipschitz_probe(slc, region, 0.05, 400, regime="omega_first", seed=seed)
    r2 = lipschitz_probe(slc, region, 0.05, 800, regime="omega_first", seed=seed + 1)
    stability = abs(r2.constant - r1.constant) / max(r1.constant, 1e-12)
    rows.append(_row("probe_stability_doubling", r1.n_pairs + r2.n_pairs, stability, 0.1))

    p3 = power_profile(3.0)
    slc3 = AnchorSlice(
        chart=chart, profile=p3, anchors=np.array([[0.3, 0.0]]), weights=np.array([0.5, 0.5])
    )
    rep3 = lipschitz_probe(slc3, region, 0.05, 400, regime="omega_first", seed=seed)
    rows.append(_row("collision_probe_bounded_case1", rep3.n_pairs, 0.0 if math.isfinite(rep3.constant) else 1.0, 0.0))
    return rows


# ---------------------------------------------------------------------------
# counterexample suite
# ---------------------------------------------------------------------------


def counterexample_suite(seed: int = 0):
    rows = []
    report = counterexample_shared_barycenter()
    rows.append(_row("f1_grid_min_at_zero", 1, abs(report.grid_minima[0]), 1e-4))
    rows.append(_row("f2_grid_min_at_zero", 1, abs(report.grid_minima[1]), 1e-4))

    expected = [(-1.4, 0.2), (-1.2, 0.4)]
    dev = 0.0
    contains = True
    for (lo, hi), (elo, ehi) in zip(report.subgradient_intervals, expected):
        dev = max(dev, abs(lo - elo), abs(hi - ehi))
        contains = contains and lo <= 0.0 <= hi
    rows.append(_row("subgradient_intervals", 2, dev, 1e-4))
    rows.append(_row("subgradient_contains_zero", 2, 0.0 if contains else 1.0, 0.0))

    qdev = max(
        abs(report.quadratic_barycenters[0] - 0.2),
        abs(report.quadratic_barycenters[1] - 0.1),
    )
    rows.append(_row("quadratic_configs_separate", 2, qdev, 1e-9))

    # the Remark instance must trigger an injectivity violation
    chart = EuclideanChart(dim=1)
    profile = counterexample_profile()
    mu1 = DiscreteMeasure(chart, np.array([[0.0]]), np.array([1.0]))
    mu2 = DiscreteMeasure(chart, np.array([[1.0], [0.5]]), np.array([0.5, 0.5]))
    lam = np.array([0.8, 0.2])
    plan = solve_mmot([mu1, mu2], lam, profile, allow_nonstandard=True)
    sols = support_barycenters(plan, lam, profile, allow_nonstandard=True)
    try:
        check_injectivity(plan, sols)
        detected = False
    except InjectivityViolation:
        detected = True
    rows.append(_row("injectivity_violation_detected", 1, 0.0 if detected else 1.0, 0.0))
    return rows


SUITES = {
    "geometry": geometry_suite,
    "transport": transport_suite,
    "invmap": invmap_suite,
    "counterexample": counterexample_suite,
}


def run_suite(name: str, seed: int = 0, tol_scale: float = 1.0, workers: int | None = None):
    """Run one suite (or all) and return the check rows.

    ``tol_scale`` rescales the nonzero verdict thresholds; ``workers`` > 1
    runs the sub-suites of ``all`` concurrently.
    """
    if name == "all":
        keys = ("geometry", "transport", "invmap", "counterexample")
        if workers and workers > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=min(workers, len(keys))) as pool:
                results = list(pool.map(lambda k: SUITES[k](seed), keys))
            rows = [row for chunk in results for row in chunk]
        else:
            rows = [row for key in keys for row in SUITES[key](seed)]
    elif name in SUITES:
        rows = SUITES[name](seed)
    else:
        raise KeyError(f"unknown suite {name!r}; pick from all/{'/'.join(SUITES)}")
    if tol_scale != 1.0:
        rows = [r.rescaled(tol_scale) for r in rows]
    return rows
