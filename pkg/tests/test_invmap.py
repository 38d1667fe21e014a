import math

import numpy as np
import pytest

from hbary import (
    AnchorSlice,
    Configuration,
    DiscreteMeasure,
    EuclideanChart,
    SphereChart,
    anchor_field_V,
    hess_cost,
    hessian_collision_limit_check,
    inverse_map_F,
    lipschitz_probe,
    power_profile,
    solve_barycenter,
    solve_mmot,
    support_barycenters,
)
from hbary.errors import AssumptionViolation, DiagonalError
from hbary.geometry import Ball, radial_unit_coords

from conftest import cluster, fd_directional, fd_hessian_matrix, generic_weights, hess_step_for, random_point

E1 = EuclideanChart(dim=1)
E2 = EuclideanChart(dim=2)
S2 = SphereChart(dim=2, curvature=1.0)
P2 = power_profile(2.0)


def slc(chart, profile, anchors, weights):
    return AnchorSlice(
        chart=chart, profile=profile, anchors=np.asarray(anchors, dtype=float), weights=np.asarray(weights)
    )


class TestAnchorField:
    def test_euclidean_quadratic(self):
        s = slc(E1, P2, [[2.0]], [0.5, 0.5])
        assert anchor_field_V(s, np.array([1.0])) == pytest.approx(1.0)

    def test_anchor_collision_contributes_zero(self):
        s = slc(E1, P2, [[2.0]], [0.5, 0.5])
        assert anchor_field_V(s, np.array([2.0])) == pytest.approx(0.0)

    def test_matches_fd_on_sphere(self, rng):
        prof = power_profile(1.5)
        anchors = cluster(S2, rng, 2)
        lam = np.array([0.4, 0.3, 0.3])
        s = slc(S2, prof, anchors, lam)
        z = random_point(S2, rng)
        if min(float(S2.dist(z, a)) for a in anchors) < 0.05:
            z = S2.exp(z, 0.2 * S2.frame(z)[0])

        def scalar_field(p):
            return float(
                -(1.0 / lam[0]) * sum(l * prof.h(S2.dist(p, a)) for l, a in zip(lam[1:], anchors))
            )

        V = anchor_field_V(s, z)
        for e in S2.frame(z):
            fd = fd_directional(S2, scalar_field, z, e)
            assert S2.inner(z, V, e) == pytest.approx(fd, abs=1e-6)


class TestInverseMap:
    def test_euclidean_reflection(self):
        s = slc(E1, P2, [[2.0]], [0.5, 0.5])
        assert inverse_map_F(s, np.array([1.0])) == pytest.approx(0.0)

    def test_zero_field_returns_z(self):
        s = slc(E1, P2, [[1.0]], [0.5, 0.5])
        assert inverse_map_F(s, np.array([1.0])) == pytest.approx(1.0)

    def test_sphere_roundtrip_via_solver(self, rng):
        prof = power_profile(1.5)
        pts = cluster(S2, rng, 2)
        lam = generic_weights(rng, 2)
        cfg = Configuration(chart=S2, profile=prof, points=pts, weights=lam)
        sol = solve_barycenter(cfg)
        s = slc(S2, prof, pts[1:], lam)
        assert float(S2.dist(inverse_map_F(s, sol.point), pts[0])) < 1e-7

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_roundtrip_on_mmot_tuples(self, p, rng):
        prof = power_profile(p)
        lam = generic_weights(rng, 3)
        ms = [DiscreteMeasure(E2, cluster(E2, rng, 2), generic_weights(rng, 2)) for _ in range(3)]
        plan = solve_mmot(ms, lam, prof)
        sols = support_barycenters(plan, lam, prof)
        for idx, _ in plan.support:
            z = sols[idx].point
            x1 = ms[0].points[idx[0]]
            if float(E2.dist(z, x1)) <= 1e-4:
                continue
            s = slc(E2, prof, [ms[i].points[idx[i]] for i in range(1, 3)], lam)
            assert float(E2.dist(inverse_map_F(s, z), x1)) < 1e-7


class TestHessCost:
    def test_p15_small_radius_eigenvalues(self):
        # radial h''(r) = 0.5 r^{-1/2} = 5, tangential h'(r)/r = 10 at r = 0.01
        prof = power_profile(1.5)
        H = hess_cost(prof, E2, np.array([0.01, 0.0]), np.zeros(2))
        vals = np.sort(np.linalg.eigvalsh(H.matrix))
        assert vals == pytest.approx([5.0, 10.0], rel=1e-12)
        fd = fd_hessian_matrix(
            E2, lambda p: float(prof.h(E2.dist(p, np.zeros(2)))), np.array([0.01, 0.0]), step=2e-5
        )
        assert np.max(np.abs(H.matrix - fd)) < 2e-3 * np.max(np.abs(H.matrix))

    def test_collision_c2_profiles(self):
        z = np.zeros(2)
        assert np.allclose(hess_cost(power_profile(3.0), E2, z, z).matrix, 0.0)
        assert np.allclose(hess_cost(P2, E2, z, z).matrix, np.eye(2))

    def test_collision_singular_profile_rejected(self):
        with pytest.raises(DiagonalError):
            hess_cost(power_profile(1.5), E2, np.zeros(2), np.zeros(2))

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_matches_fd(self, p, rng):
        prof = power_profile(p)
        for chart in (E2, S2):
            for _ in range(10):
                z, x = random_point(chart, rng), random_point(chart, rng)
                r = float(chart.dist(z, x))
                if r < 0.05 or r > 0.9 * min(chart.injectivity_radius(z), 3.0):
                    continue
                H = hess_cost(prof, chart, z, x).matrix
                fd = fd_hessian_matrix(
                    chart, lambda pnt: float(prof.h(chart.dist(pnt, x))), z, step=hess_step_for(r)
                )
                assert np.max(np.abs(H - fd)) < 1e-4

    def test_radial_alignment(self, rng):
        prof = power_profile(3.0)
        z, x = np.array([0.3, 0.4]), np.array([-0.2, 0.1])
        H = hess_cost(prof, E2, z, x).matrix
        u = radial_unit_coords(E2, z, x)
        r = float(E2.dist(z, x))
        vals, vecs = np.linalg.eigh(H)
        radial_idx = int(np.argmin(np.abs(vals - prof.h2(r))))
        angle = math.acos(min(1.0, abs(float(vecs[:, radial_idx] @ u))))
        assert angle < 1e-6


class TestCollisionLimit:
    def test_quadratic_exactly_zero(self):
        rep = hessian_collision_limit_check(P2, E2, np.zeros(2), [0.1, 0.01, 0.001])
        assert np.allclose(rep.deviations, 0.0, atol=1e-10)

    def test_p3_slope_one(self):
        # oracle: h''(r) - h''(0) = 2r exactly, so log-log slope 1
        rep = hessian_collision_limit_check(
            power_profile(3.0), E2, np.zeros(2), [10.0**-k for k in range(1, 5)]
        )
        assert rep.slope == pytest.approx(1.0, abs=0.1)
        assert rep.decreasing

    def test_p15_rejected(self):
        with pytest.raises(AssumptionViolation):
            hessian_collision_limit_check(power_profile(1.5), E2, np.zeros(2), [0.1])


class TestLipschitzProbe:
    def test_affine_constant_two(self):
        s = slc(E2, P2, [[0.6, 0.0]], [0.5, 0.5])
        rep = lipschitz_probe(s, Ball(center=np.zeros(2), radius=1.0), 0.05, 300, regime="omega_first", seed=1)
        assert rep.constant == pytest.approx(2.0, rel=1e-9)

    def test_stable_under_doubling(self):
        prof = power_profile(1.5)
        s = slc(S2, prof, [np.array([0.0, 0.0, 1.0])], [0.5, 0.5])
        center = S2.exp(np.array([0.0, 0.0, 1.0]), np.array([0.5, 0.0, 0.0]))
        region = Ball(center=center, radius=0.35)
        r1 = lipschitz_probe(s, region, 0.2, 500, regime="omega_all", seed=2)
        r2 = lipschitz_probe(s, region, 0.2, 1000, regime="omega_all", seed=3)
        assert abs(r2.constant - r1.constant) <= 0.1 * r1.constant

    def test_blowup_near_anchor_for_singular_profile(self):
        # shrinking alpha lets pairs approach the anchor; the p = 1.5 ratio
        # grows, which is the content of the collision-free requirement
        prof = power_profile(1.5)
        anchor = np.array([0.0, 0.0])
        s = slc(E2, prof, [anchor], [0.5, 0.5])
        region = Ball(center=anchor, radius=0.8)
        consts = []
        for alpha in (0.2, 0.02, 0.002):
            rep = lipschitz_probe(s, region, alpha, 400, regime="omega_first", seed=4)
            consts.append(rep.constant)
        assert consts[2] > consts[0]

    def test_region_violating_alpha_rejected(self):
        s = slc(E2, P2, [[5.0, 0.0]], [0.5, 0.5])
        # every z in the region has |V| = d(z, anchor) in [3.8, 6.2], far from 0;
        # demanding alpha with h'(alpha) > 6.2 empties the admissible set
        with pytest.raises(AssumptionViolation):
            lipschitz_probe(s, Ball(center=np.zeros(2), radius=1.2), 10.0, 100, regime="omega_first")
