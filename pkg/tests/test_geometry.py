import math

import numpy as np
import pytest

from hbary import EuclideanChart, HyperbolicChart, SphereChart, hess_dist
from hbary.errors import ChartMembershipError, CutLocusError, DiagonalError, ResolutionError
from hbary.geometry import Ball

from conftest import (
    all_charts,
    fd_directional,
    fd_hessian_matrix,
    hess_step_for,
    integrate_poincare_diameter,
    random_point,
    random_tangent,
)

E1 = EuclideanChart(dim=1)
E2 = EuclideanChart(dim=2)
S2 = SphereChart(dim=2, curvature=1.0)
H2 = HyperbolicChart(curvature=-1.0)


class TestDist:
    def test_sphere_quarter_circle(self):
        assert S2.dist(np.array([1, 0, 0.0]), np.array([0, 1, 0.0])) == pytest.approx(
            math.pi / 2, abs=1e-14
        )

    def test_euclidean_line(self):
        assert E1.dist(np.array([0.0]), np.array([3.0])) == pytest.approx(3.0)

    def test_hyperbolic_against_line_integral(self):
        # oracle: integrate the disk metric along the diameter
        ref = integrate_poincare_diameter(0.0, 0.5)
        got = float(H2.dist(np.array([0.0, 0.0]), np.array([0.5, 0.0])))
        assert got == pytest.approx(ref, abs=1e-10)
        assert got == pytest.approx(math.log(3.0), abs=1e-12)

    def test_symmetry_exact(self, rng):
        for chart in all_charts():
            for _ in range(40):
                x, y = random_point(chart, rng), random_point(chart, rng)
                assert float(chart.dist(x, y)) == pytest.approx(
                    float(chart.dist(y, x)), abs=1e-12
                )

    def test_triangle_inequality(self, rng):
        for chart in all_charts():
            for _ in range(40):
                x, y, z = (random_point(chart, rng) for _ in range(3))
                assert float(chart.dist(x, z)) <= float(chart.dist(x, y)) + float(
                    chart.dist(y, z)
                ) + 1e-10

    def test_zero_iff_equal(self, rng):
        for chart in all_charts():
            x = random_point(chart, rng)
            assert float(chart.dist(x, x)) == 0.0


class TestExpLog:
    def test_sphere_antipode(self):
        out = S2.exp(np.array([1, 0, 0.0]), np.array([0.0, math.pi, 0.0]))
        assert np.allclose(out, [-1, 0, 0], atol=1e-12)

    def test_euclidean(self):
        assert E1.exp(np.array([1.0]), np.array([-1.0])) == pytest.approx(0.0)
        assert E1.log(np.array([2.0]), np.array([0.0])) == pytest.approx(-2.0)

    def test_hyperbolic_exp_reaches_right_distance(self, rng):
        for _ in range(20):
            base = random_point(H2, rng)
            v = random_tangent(H2, rng, base, rng.uniform(0.1, 2.0))
            y = H2.exp(base, v)
            assert float(H2.dist(base, y)) == pytest.approx(H2.norm(base, v), abs=1e-10)

    def test_sphere_log_quarter(self):
        out = S2.log(np.array([1, 0, 0.0]), np.array([0, 1, 0.0]))
        assert np.allclose(out, [0, math.pi / 2, 0], atol=1e-12)

    def test_antipode_raises_cut_locus(self):
        with pytest.raises(CutLocusError):
            S2.log(np.array([1, 0, 0.0]), np.array([-1, 0, 0.0]))

    def test_roundtrip_within_injectivity(self, rng):
        for chart in all_charts():
            for _ in range(60):
                base = random_point(chart, rng)
                cap = 0.9 * min(chart.injectivity_radius(base), 2.5)
                v = random_tangent(chart, rng, base, rng.uniform(1e-3, cap))
                w = chart.log(base, chart.exp(base, v))
                assert chart.norm(base, w - v) < 1e-8

    def test_exp_dist_consistency(self, rng):
        for chart in all_charts():
            for _ in range(30):
                base = random_point(chart, rng)
                cap = 0.9 * min(chart.injectivity_radius(base), 2.5)
                v = random_tangent(chart, rng, base, rng.uniform(1e-3, cap))
                assert float(chart.dist(base, chart.exp(base, v))) == pytest.approx(
                    chart.norm(base, v), abs=1e-10
                )


class TestGradDist:
    def test_euclidean_sign(self):
        assert E1.grad_dist(np.array([1.0]), np.array([0.0])) == pytest.approx(1.0)

    def test_diagonal_error(self):
        with pytest.raises(DiagonalError):
            E1.grad_dist(np.array([0.0]), np.array([0.0]))

    def test_unit_norm(self, rng):
        for chart in all_charts():
            for _ in range(20):
                z, x = random_point(chart, rng), random_point(chart, rng)
                r = float(chart.dist(z, x))
                if r < 1e-3 or r >= chart.injectivity_radius(z) - 1e-6:
                    continue
                g = chart.grad_dist(z, x)
                assert chart.norm(z, g) == pytest.approx(1.0, abs=1e-10)

    def test_matches_finite_differences(self, rng):
        for chart in all_charts():
            for _ in range(25):
                z, x = random_point(chart, rng), random_point(chart, rng)
                r = float(chart.dist(z, x))
                if r < 0.05 or r > 0.9 * min(chart.injectivity_radius(z), 4.0):
                    continue
                g = chart.grad_dist(z, x)
                u = random_tangent(chart, rng, z)
                fd = fd_directional(chart, lambda p: float(chart.dist(p, x)), z, u)
                assert chart.inner(z, g, u) == pytest.approx(fd, abs=1e-6)


class TestHessDist:
    def test_sphere_zero_form_at_quarter(self):
        H = hess_dist(S2, np.array([1, 0, 0.0]), np.array([0, 1, 0.0]))
        assert np.allclose(H, 0.0, atol=1e-12)

    def test_euclidean_tangential_eigenvalue(self):
        H = hess_dist(E2, np.array([0.5, 0.0]), np.zeros(2))
        vals = np.sort(np.linalg.eigvalsh(H))
        assert vals == pytest.approx([0.0, 2.0], abs=1e-12)

    def test_hyperbolic_coth_and_fd(self):
        base = np.array([0.0, 0.0])
        z = H2.exp(base, np.array([1.0, 0.0]) * (1.0 / (H2.scale * H2._lam(base))))
        H = hess_dist(H2, z, base)
        vals = np.sort(np.linalg.eigvalsh(H))
        assert vals[1] == pytest.approx(1.0 / math.tanh(1.0), abs=1e-9)
        fd = fd_hessian_matrix(H2, lambda p: float(H2.dist(p, base)), z, step=1e-3)
        assert np.max(np.abs(H - fd)) < 1e-5

    def test_matches_fd_generic(self, rng):
        for chart in [E2, S2, H2]:
            for _ in range(15):
                z, x = random_point(chart, rng), random_point(chart, rng)
                r = float(chart.dist(z, x))
                if r < 0.05 or r > 0.9 * min(chart.injectivity_radius(z), 4.0):
                    continue
                H = hess_dist(chart, z, x)
                fd = fd_hessian_matrix(
                    chart, lambda p: float(chart.dist(p, x)), z, step=hess_step_for(r)
                )
                assert np.max(np.abs(H - fd)) < 1e-5

    def test_annihilates_radial_direction(self, rng):
        for chart in [E2, S2, H2]:
            z, x = random_point(chart, rng), random_point(chart, rng)
            r = float(chart.dist(z, x))
            if r < 0.05 or r >= chart.injectivity_radius(z) - 1e-3:
                continue
            from hbary.geometry import radial_unit_coords

            H = hess_dist(chart, z, x)
            u = radial_unit_coords(chart, z, x)
            assert np.linalg.norm(H @ u) < 1e-10


class TestInjectivityRadius:
    def test_values(self):
        assert E2.injectivity_radius(None) == math.inf
        assert H2.injectivity_radius(None) == math.inf
        assert S2.injectivity_radius(None) == pytest.approx(math.pi)
        assert SphereChart(dim=2, curvature=4.0).injectivity_radius(None) == pytest.approx(
            math.pi / 2
        )


class TestMembership:
    def test_sphere_membership(self):
        with pytest.raises(ChartMembershipError):
            S2.check_point(np.array([1.0, 0.0, 0.1]))

    def test_hyperbolic_membership(self):
        with pytest.raises(ChartMembershipError):
            H2.check_point(np.array([1.0, 0.0]))

    def test_sphere_tangent_orthogonality(self):
        with pytest.raises(ChartMembershipError):
            S2.check_tangent(np.array([1, 0, 0.0]), np.array([0.5, 1.0, 0.0]))


class TestCellVolumes:
    def test_unit_interval_four_cells(self):
        part = E1.uniform_cell_volumes(Ball(center=np.array([0.5]), radius=0.5), 4)
        assert np.allclose(part.volumes, 0.25)
        assert part.n_cells == 4

    def test_sphere_cap_area(self):
        # oracle: analytic cap area 2*pi*(1 - cos(sqrt(K) r)) / K
        for K in (1.0, 4.0):
            chart = SphereChart(dim=2, curvature=K)
            r = 0.7 / math.sqrt(K)
            pole = np.array([0, 0, 1.0]) / math.sqrt(K)
            part = chart.uniform_cell_volumes(Ball(center=pole, radius=r), 6)
            analytic = 2.0 * math.pi * (1.0 - math.cos(math.sqrt(K) * r)) / K
            assert float(part.volumes.sum()) == pytest.approx(analytic, rel=1e-10)

    def test_degenerate_radius_raises(self):
        with pytest.raises(ResolutionError):
            E1.uniform_cell_volumes(Ball(center=np.array([0.0]), radius=0.0), 4)

    def test_too_coarse_raises(self):
        with pytest.raises(ResolutionError):
            E2.uniform_cell_volumes(Ball(center=np.zeros(2), radius=1.0), 1)

    def test_cells_partition_points(self, rng):
        for chart in [E1, E2, S2, H2]:
            center = random_point(chart, rng)
            radius = 0.6
            part = chart.uniform_cell_volumes(Ball(center=center, radius=radius), 4)
            for _ in range(50):
                p = chart.sample_ball(center, radius, 1, rng)[0]
                idx = part.cell_of(p)
                assert 0 <= idx < part.n_cells
