import math

import numpy as np
import pytest

from hbary import (
    Configuration,
    EuclideanChart,
    SphereChart,
    barycenter_cost,
    counterexample_profile,
    counterexample_shared_barycenter,
    first_order_residual,
    objective_phi,
    power_profile,
    solve_barycenter,
)
from hbary.errors import NonConvergence, ProfileViolatesAssumptions

from conftest import cluster, generic_weights, grid_search_segment, random_point

E1 = EuclideanChart(dim=1)
E2 = EuclideanChart(dim=2)
S2 = SphereChart(dim=2, curvature=1.0)
P2 = power_profile(2.0)


def config(chart, profile, pts, w):
    return Configuration(chart=chart, profile=profile, points=np.asarray(pts, dtype=float), weights=np.asarray(w))


class TestObjective:
    def test_quadratic_midpoint_value(self):
        cfg = config(E1, P2, [[0.0], [2.0]], [0.5, 0.5])
        assert objective_phi(cfg, np.array([1.0])) == pytest.approx(0.5)

    def test_zero_at_coincident(self):
        cfg = config(E2, P2, [[1.0, 1.0], [1.0, 1.0 + 1e-6]], [0.5, 0.5])
        assert objective_phi(cfg, np.array([1.0, 1.0])) <= 1e-12 + P2.h(1e-6)

    def test_matches_direct_summation(self, rng):
        pts = cluster(S2, rng, 3)
        lam = generic_weights(rng, 3)
        prof = power_profile(1.5)
        cfg = config(S2, prof, pts, lam)
        y = random_point(S2, rng)
        direct = sum(
            float(l) * float(prof.h(S2.dist(y, x))) for l, x in zip(lam, pts)
        )
        assert objective_phi(cfg, y) == pytest.approx(direct, rel=1e-14)


class TestSolve:
    def test_weighted_mean(self):
        cfg = config(E1, P2, [[0.0], [4.0]], [0.25, 0.75])
        sol = solve_barycenter(cfg)
        assert sol.point[0] == pytest.approx(3.0, abs=1e-10)
        assert sol.grad_residual <= 1e-8

    @pytest.mark.parametrize("p", [1.3, 1.5, 2.0, 3.0])
    def test_symmetric_pair_gives_zero(self, p):
        cfg = config(E1, power_profile(p), [[-1.0], [1.0]], [0.5, 0.5])
        assert solve_barycenter(cfg).point[0] == pytest.approx(0.0, abs=1e-9)

    def test_sphere_midpoint_vs_grid_oracle(self):
        prof = power_profile(1.5)
        x1 = np.array([1.0, 0.0, 0.0])
        x2 = S2.exp(x1, np.array([0.0, 1.0, 0.0]))  # distance 1 along great circle
        cfg = config(S2, prof, [x1, x2], [0.5, 0.5])
        sol = solve_barycenter(cfg)
        ref_val, ref_pt = grid_search_segment(S2, prof, cfg.weights, cfg.points, x1, x2)
        assert sol.value <= ref_val + 1e-9
        assert float(S2.dist(sol.point, ref_pt)) < 2e-4  # grid spacing limits the oracle
        mid = S2.exp(x1, np.array([0.0, 0.5, 0.0]))
        assert float(S2.dist(sol.point, mid)) < 1e-9

    def test_fast_path_agrees_with_descent(self, rng):
        for chart in (E2, S2):
            for p in (1.5, 2.0, 3.0):
                prof = power_profile(p)
                pts = cluster(chart, rng, 2)
                lam = generic_weights(rng, 2)
                cfg = config(chart, prof, pts, lam)
                fast = solve_barycenter(cfg)
                slow = solve_barycenter(cfg, method="descent")
                assert float(chart.dist(fast.point, slow.point)) < 1e-7
                assert fast.value == pytest.approx(slow.value, abs=1e-12)

    def test_minimality_certificate_grid(self, rng):
        for chart in (E2, S2):
            pts = cluster(chart, rng, 3)
            lam = generic_weights(rng, 3)
            cfg = config(chart, power_profile(1.5), pts, lam)
            # certify_grid raises if any of >= 10^4 candidates beats the solution
            solve_barycenter(cfg, certify_grid=10000)

    def test_cut_margins_positive_on_sphere(self, rng):
        pts = cluster(S2, rng, 3)
        cfg = config(S2, power_profile(2.0), pts, generic_weights(rng, 3))
        sol = solve_barycenter(cfg)
        assert np.all(sol.cut_margins > 0)

    def test_counterexample_profile_gated(self):
        cfg = config(E1, counterexample_profile(), [[0.0], [1.0]], [0.8, 0.2])
        with pytest.raises(ProfileViolatesAssumptions):
            solve_barycenter(cfg)
        sol = solve_barycenter(cfg, allow_nonstandard=True)
        assert sol.point[0] == pytest.approx(0.0, abs=1e-12)


class TestCost:
    def test_quadratic_pair(self):
        cfg = config(E1, P2, [[0.0], [2.0]], [0.5, 0.5])
        assert barycenter_cost(cfg) == pytest.approx(0.5)

    def test_coincident_zero(self):
        cfg = config(E2, P2, [[0.3, 0.3], [0.3, 0.3 + 1e-7]], [0.5, 0.5])
        assert barycenter_cost(cfg) <= 1e-13

    def test_midpoint_formula_equal_weights(self, rng):
        # oracle: minimize (1/4) y^2 + (1/4) (y - d)^2 symbolically -> d^2/8
        for _ in range(10):
            a, b = rng.normal(size=2) * 3
            cfg = config(E1, P2, [[a], [b]], [0.5, 0.5])
            assert barycenter_cost(cfg) == pytest.approx((a - b) ** 2 / 8.0, abs=1e-12)

    def test_continuity_under_perturbation(self, rng):
        pts = cluster(E2, rng, 3, spread=0.8)
        lam = generic_weights(rng, 3)
        prof = power_profile(1.5)
        cfg = config(E2, prof, pts, lam)
        base_cost = barycenter_cost(cfg)
        diam = max(float(E2.dist(p, q)) for p in pts for q in pts) + 2e-3
        lip = prof.h1(diam)
        delta = 1e-3
        for _ in range(5):
            moved = pts + delta * _unit_rows(rng, pts.shape)
            cfg2 = config(E2, prof, moved, lam)
            assert abs(barycenter_cost(cfg2) - base_cost) <= lip * delta + 1e-12


def _unit_rows(rng, shape):
    u = rng.normal(size=shape)
    return u / np.linalg.norm(u, axis=1, keepdims=True)


class TestResidual:
    def test_zero_at_weighted_mean(self):
        cfg = config(E1, P2, [[0.0], [4.0]], [0.25, 0.75])
        assert first_order_residual(cfg, np.array([3.0])) == pytest.approx(0.0, abs=1e-12)

    def test_collision_convention(self):
        # at z = x1 the first term contributes 0; remainder is |0.5 * (-2)| = 1
        cfg = config(E1, P2, [[0.0], [2.0]], [0.5, 0.5])
        assert first_order_residual(cfg, np.array([0.0])) == pytest.approx(1.0)

    def test_collision_equals_omitting_term(self, rng):
        pts = cluster(E2, rng, 3)
        lam = generic_weights(rng, 3)
        prof = power_profile(2.0)
        cfg = config(E2, prof, pts, lam)
        res = first_order_residual(cfg, pts[0])
        manual = np.linalg.norm(
            sum(lam[i] * prof.h1(float(E2.dist(pts[0], pts[i]))) * E2.grad_dist(pts[0], pts[i])
                for i in (1, 2))
        )
        assert res == pytest.approx(float(manual), abs=1e-12)

    def test_solved_instances_below_tolerance(self, rng):
        for _ in range(5):
            pts = cluster(S2, rng, 3)
            lam = generic_weights(rng, 3)
            cfg = config(S2, power_profile(1.5), pts, lam)
            sol = solve_barycenter(cfg)
            assert first_order_residual(cfg, sol.point) <= 1e-7


class TestCounterexampleReport:
    def test_shared_minimum_and_subgradients(self):
        rep = counterexample_shared_barycenter()
        assert rep.grid_minima[0] == pytest.approx(0.0, abs=1e-4)
        assert rep.grid_minima[1] == pytest.approx(0.0, abs=1e-4)
        (lo1, hi1), (lo2, hi2) = rep.subgradient_intervals
        # one-sided derivative oracle: 0.8*h'(0+-) -+ 0.2*h'(gap)
        assert (lo1, hi1) == pytest.approx((-1.4, 0.2), abs=1e-4)
        assert (lo2, hi2) == pytest.approx((-1.2, 0.4), abs=1e-4)
        assert lo1 <= 0.0 <= hi1 and lo2 <= 0.0 <= hi2

    def test_quadratic_configs_separate(self):
        rep = counterexample_shared_barycenter()
        assert rep.quadratic_barycenters[0] == pytest.approx(0.2, abs=1e-10)
        assert rep.quadratic_barycenters[1] == pytest.approx(0.1, abs=1e-10)
