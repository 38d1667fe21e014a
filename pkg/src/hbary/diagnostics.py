"""Absolute-continuity diagnostics and approximation experiments.

The volume-distortion class at scale (epsilon, delta) contains the
measures putting at most epsilon mass on every Borel set of volume below
delta.  ``e_class_estimate`` checks an empirical measure against a polar
cell partition: sort cells by mass density and accumulate the densest
ones until their volume reaches delta (pro-rating the last cell); the
verdict fails when the accumulated mass exceeds epsilon.

Experiments:

* ``consistency_experiment`` ladders the discretizations of all marginals
  except the first and tracks the bounded-Lipschitz distance of the
  resulting barycenter measures to the finest level.
* ``abs_continuity_experiment`` runs the Case-1 (smooth profile, only the
  first marginal spread out) or Case-2 (singular profile, every marginal
  spread out) pipeline and scores the barycenter against an
  (epsilon_k, delta_k) ladder with delta_k = epsilon_k * probe^(-dim),
  the probe being the empirical Lipschitz constant of the inverse map.
"""

from dataclasses import dataclass
import math

import numpy as np

from .barycenter import Configuration, solve_barycenter
from .errors import AssumptionViolation, ResolutionError, SpecError
from .geometry import Ball, CellPartition
from .invmap import AnchorSlice, lipschitz_probe
from .tolerances import DEFAULT as TOL
from .transport import DiscreteMeasure, solve_mmot, support_barycenters


# ---------------------------------------------------------------------------
# measure specs and discretization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AtomSpec:
    points: np.ndarray
    weights: np.ndarray

    kind = "atoms"


@dataclass(frozen=True)
class UniformBallSpec:
    center: np.ndarray
    radius: float

    kind = "uniform_ball"

    def ball(self) -> Ball:
        return Ball(center=np.asarray(self.center, dtype=float), radius=float(self.radius))


def discretize(chart, spec, level: int) -> DiscreteMeasure:
    """Equal-mass quantization of a measure spec at 4^level atoms.

    Atom lists pass through unchanged; a uniform ball is cut into
    equal-volume polar cells (2^level rings x 2^level sectors in dimension
    2, 4^level subintervals in dimension 1) with one atom at each cell's
    area median.  Deterministic and seedless.
    """
    if level < 1:
        raise SpecError("discretization level must be >= 1")
    if isinstance(spec, AtomSpec):
        return DiscreteMeasure(chart=chart, points=spec.points, weights=spec.weights)
    if not isinstance(spec, UniformBallSpec):
        raise SpecError(f"unsupported measure spec {spec!r}")
    center = np.asarray(spec.center, dtype=float)
    radius = float(spec.radius)
    n = 4**level
    if chart.dim == 1:
        frame = chart.frame(center)
        offs = (np.arange(n) + 0.5) / n * (2.0 * radius) - radius
        pts = np.array([chart.exp(center, t * frame[0]) for t in offs])
        return DiscreteMeasure(chart=chart, points=pts, weights=np.full(n, 1.0 / n))
    if chart.dim != 2:
        raise SpecError("uniform_ball quantization supports dim <= 2")
    n_r = 2**level
    n_phi = 2**level
    total = chart.ball_area(radius)
    pts = []
    for i in range(n_r):
        rad = chart._ring_radius_for_area(total * (i + 0.5) / n_r)
        for s in range(n_phi):
            ang = 2.0 * math.pi * (s + 0.5) / n_phi
            pts.append(chart.polar_point(center, rad, ang))
    return DiscreteMeasure(chart=chart, points=np.array(pts), weights=np.full(n, 1.0 / n))


# ---------------------------------------------------------------------------
# bounded-Lipschitz distance (dictionary lower bound)
# ---------------------------------------------------------------------------


def _bl_anchors(chart, measures, n_funcs, seed):
    pts = np.vstack([m.points for m in measures])
    center = pts[0]
    radius = float(np.max(chart.dist(pts, center))) + 1.0
    inj = chart.injectivity_radius(center)
    if math.isfinite(inj):
        radius = min(radius, 0.99 * inj)
    rng = np.random.default_rng(seed)
    return chart.sample_ball(center, radius, n_funcs, rng)


def bl_distance(mu: DiscreteMeasure, nu: DiscreteMeasure, n_funcs: int = 200, seed: int = 7):
    """Lower-bound estimate of the bounded-Lipschitz distance.

    Evaluates a fixed dictionary of clipped distance functions
    f_w(x) = max(1 - d(x, w), -1), each 1-Lipschitz with |f| <= 1, and
    returns the largest mean discrepancy.
    """
    anchors = _bl_anchors(mu.chart, [mu, nu], n_funcs, seed)
    f_mu = np.maximum(1.0 - mu.chart.dist(anchors[:, None, :], mu.points[None, :, :]), -1.0)
    f_nu = np.maximum(1.0 - mu.chart.dist(anchors[:, None, :], nu.points[None, :, :]), -1.0)
    means_mu = f_mu @ mu.weights
    means_nu = f_nu @ nu.weights
    return float(np.max(np.abs(means_mu - means_nu)))


# ---------------------------------------------------------------------------
# E-class estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampledDensity:
    chart: object
    region: Ball
    partition: CellPartition
    masses: np.ndarray
    outside_mass: float

    @property
    def region_mass(self) -> float:
        return float(self.masses.sum())


def sample_density(measure: DiscreteMeasure, region: Ball, resolution: int) -> SampledDensity:
    chart = measure.chart
    part = chart.uniform_cell_volumes(region, resolution)
    masses = np.zeros(part.n_cells)
    outside = 0.0
    for p, w in zip(measure.points, measure.weights):
        if chart.dist(region.center, p) <= region.radius + 1e-12:
            masses[part.cell_of(p)] += w
        else:
            outside += w
    return SampledDensity(
        chart=chart, region=region, partition=part, masses=masses, outside_mass=outside
    )


@dataclass(frozen=True)
class EClassVerdict:
    passed: bool
    epsilon: float
    delta: float
    mass_at_delta: float
    resolution: int
    worst_cell: int
    outside_mass: float


def _resolution_for(chart, region: Ball, delta: float, cap: int = 4096) -> int:
    k = 2
    while k <= cap:
        part = chart.uniform_cell_volumes(region, k)
        if float(np.max(part.volumes)) < 0.9 * delta:
            return k
        k *= 2
    raise ResolutionError(f"cannot reach max cell volume below delta = {delta:g}")


def e_class_estimate(
    measure: DiscreteMeasure,
    region: Ball,
    epsilon: float,
    delta: float,
    resolution: int | None = None,
) -> EClassVerdict:
    """Greedy membership check of the (epsilon, delta) volume-distortion class.

    Requires cells finer than delta; the accumulated mass of the densest
    cells, pro-rated to total volume exactly delta, must stay below
    epsilon.
    """
    chart = measure.chart
    if resolution is None:
        resolution = _resolution_for(chart, region, delta)
    density = sample_density(measure, region, resolution)
    vols = density.partition.volumes
    if float(np.max(vols)) >= delta:
        raise ResolutionError("resolution insufficient: a cell is as large as delta")
    rho = density.masses / vols
    order = np.argsort(-rho, kind="stable")
    acc_vol, acc_mass = 0.0, 0.0
    for idx in order:
        v, m = float(vols[idx]), float(density.masses[idx])
        if acc_vol + v < delta:
            acc_vol += v
            acc_mass += m
        else:
            acc_mass += m * (delta - acc_vol) / v
            acc_vol = delta
            break
    worst = int(order[0])
    return EClassVerdict(
        passed=bool(acc_mass <= epsilon + 1e-12),
        epsilon=epsilon,
        delta=delta,
        mass_at_delta=float(acc_mass),
        resolution=int(resolution),
        worst_cell=worst,
        outside_mass=density.outside_mass,
    )


# ---------------------------------------------------------------------------
# barycenter pushforward
# ---------------------------------------------------------------------------


def barycenter_pushforward(plan, weights, profile, *, allow_nonstandard=False):
    """The barycenter measure B#gamma of an MMOT plan, with the per-tuple
    solutions used to build it."""
    sols = support_barycenters(plan, weights, profile, allow_nonstandard=allow_nonstandard)
    pts = [sols[idx].point for idx, _ in plan.support]
    masses = [m for _, m in plan.support]
    measure = DiscreteMeasure.from_atoms(plan.marginals[0].chart, np.array(pts), np.array(masses))
    return measure, sols


def collision_mass_fraction(plan, solutions, alpha: float) -> float:
    """Plan mass on support tuples whose barycenter sits within alpha of a
    marginal point."""
    chart = plan.marginals[0].chart
    total = 0.0
    for idx, mass in plan.support:
        z = solutions[idx].point
        dmin = min(
            float(chart.dist(z, plan.marginals[i].points[idx[i]]))
            for i in range(plan.n_marginals)
        )
        if dmin < alpha:
            total += mass
    return total


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConsistencyLadder:
    levels: list
    barycenters: list           # DiscreteMeasure per level
    bl_to_finest: list          # same length; last entry 0
    bl_to_reference: float | None

    def rows(self):
        out = []
        for lvl, mu, bl in zip(self.levels, self.barycenters, self.bl_to_finest):
            out.append(
                {
                    "level": lvl,
                    "atoms": mu.size,
                    "bl_to_finest": bl,
                    "epsilon": "",
                    "delta": "",
                    "mass_at_delta": "",
                    "verdict": "",
                }
            )
        return out


def consistency_experiment(
    chart,
    specs,
    weights,
    profile,
    levels: int,
    *,
    reference_spec=None,
    seed: int = 7,
) -> ConsistencyLadder:
    """Ladder the non-first marginals and track barycenter convergence.

    The first marginal is discretized once at the finest level and held
    fixed; the bounded-Lipschitz column is measured against the
    finest-level barycenter.
    """
    mu1 = discretize(chart, specs[0], levels)
    barys = []
    lvl_list = list(range(1, levels + 1))
    for j in lvl_list:
        ms = [mu1] + [discretize(chart, s, j) for s in specs[1:]]
        plan = solve_mmot(ms, weights, profile)
        measure, _ = barycenter_pushforward(plan, weights, profile)
        barys.append(measure)
    finest = barys[-1]
    bl = [bl_distance(b, finest, seed=seed) for b in barys]
    bl_ref = None
    if reference_spec is not None:
        ref = discretize(chart, reference_spec, levels)
        bl_ref = bl_distance(finest, ref, seed=seed)
    return ConsistencyLadder(
        levels=lvl_list, barycenters=barys, bl_to_finest=bl, bl_to_reference=bl_ref
    )


@dataclass(frozen=True)
class CaseLevel:
    level: int
    atoms: int
    probe_constant: float
    verdicts: list  # EClassVerdict per ladder rung
    collision_fraction: float


@dataclass(frozen=True)
class CaseLadder:
    case: int
    levels: list          # CaseLevel
    control: list | None  # Dirac-control verdicts at the finest level (case 2)

    def final_verdicts(self):
        return self.levels[-1].verdicts

    def rows(self):
        out = []
        for lv in self.levels:
            for v in lv.verdicts:
                out.append(
                    {
                        "level": lv.level,
                        "atoms": lv.atoms,
                        "bl_to_finest": "",
                        "epsilon": v.epsilon,
                        "delta": v.delta,
                        "mass_at_delta": v.mass_at_delta,
                        "verdict": "PASS" if v.passed else "FAIL",
                    }
                )
        if self.control:
            for v in self.control:
                out.append(
                    {
                        "level": "control",
                        "atoms": 1,
                        "bl_to_finest": "",
                        "epsilon": v.epsilon,
                        "delta": v.delta,
                        "mass_at_delta": v.mass_at_delta,
                        "verdict": "PASS" if v.passed else "FAIL",
                    }
                )
        return out


def _support_region(chart, measure: DiscreteMeasure) -> Ball:
    center = measure.points[int(np.argmax(measure.weights))]
    radius = float(np.max(chart.dist(measure.points, center))) * 1.05 + 1e-6
    inj = chart.injectivity_radius(center)
    if math.isfinite(inj):
        radius = min(radius, 0.9 * inj)
    return Ball(center=center, radius=radius)


def _probe_constant(chart, profile, weights, plan, solutions, regime, alpha, seed):
    """Empirical inverse-map Lipschitz constant over a few heavy support slices."""
    heavy = sorted(plan.support, key=lambda t: -t[1])[:3]
    pts = np.array([solutions[idx].point for idx, _ in plan.support])
    center = pts[0]
    radius = float(np.max(chart.dist(pts, center))) + 0.1
    inj = chart.injectivity_radius(center)
    if math.isfinite(inj):
        radius = min(radius, 0.45 * inj)
    best = 0.0
    a = alpha
    for idx, _ in heavy:
        anchors = np.array(
            [plan.marginals[i].points[idx[i]] for i in range(1, plan.n_marginals)]
        )
        slc = AnchorSlice(chart=chart, profile=profile, anchors=anchors, weights=weights)
        for _ in range(4):
            try:
                rep = lipschitz_probe(
                    slc, Ball(center=center, radius=radius), a, 200, regime=regime, seed=seed
                )
                best = max(best, rep.constant)
                break
            except AssumptionViolation:
                a *= 0.5
    return best if best > 0 else 2.0


def abs_continuity_experiment(
    case: int,
    chart,
    profile,
    weights,
    specs,
    *,
    levels: int = 4,
    k_max: int = 4,
    alpha: float = 0.05,
    seed: int = 7,
) -> CaseLadder:
    """Case-1 / Case-2 absolute-continuity pipeline.

    Case 1 needs a profile whose second derivative extends to the origin;
    the first marginal is a spread-out spec and the others may be atomic.
    Case 2 allows an origin-singular profile but every marginal spec must
    be spread out.  Each level discretizes, solves the multi-marginal
    problem, pushes the plan forward through the barycenter map, and
    scores the result on the (2^-k, delta_k) ladder.
    """
    from .cost import OriginClass

    if case == 1 and profile.origin_class is not OriginClass.C2_AT_ZERO:
        raise AssumptionViolation("case1", profile.name, "Case 1 needs a C2-at-zero profile")
    if case == 2:
        for s in specs:
            if isinstance(s, AtomSpec):
                raise AssumptionViolation(
                    "case2", "atoms", "Case 2 needs every marginal spread out"
                )
    if not isinstance(specs[0], UniformBallSpec):
        raise AssumptionViolation("case", specs[0], "first marginal must be a uniform ball")
    regime = "omega_first" if case == 1 else "omega_all"

    out_levels = []
    finest_region = None
    for j in range(1, levels + 1):
        ms = [discretize(chart, s, j) for s in specs]
        plan = solve_mmot(ms, weights, profile)
        measure, sols = barycenter_pushforward(plan, weights, profile)
        region = _support_region(chart, measure)
        probe = _probe_constant(chart, profile, weights, plan, sols, regime, alpha, seed)
        verdicts = []
        for k in range(1, k_max + 1):
            eps = 2.0**-k
            delta = eps * probe ** (-chart.dim)
            verdicts.append(e_class_estimate(measure, region, eps, delta))
        out_levels.append(
            CaseLevel(
                level=j,
                atoms=measure.size,
                probe_constant=probe,
                verdicts=verdicts,
                collision_fraction=collision_mass_fraction(plan, sols, alpha),
            )
        )
        finest_region = region

    control = None
    if case == 2:
        dirac = DiscreteMeasure(
            chart=chart,
            points=np.array([finest_region.center]),
            weights=np.array([1.0]),
        )
        control = [
            e_class_estimate(dirac, finest_region, 0.5, v.delta)
            for v in out_levels[-1].verdicts
        ]
    return CaseLadder(case=case, levels=out_levels, control=control)


# ---------------------------------------------------------------------------
# annulus decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnnulusPiece:
    measure: DiscreteMeasure
    mass: float
    inner_radius: float
    outer_radius: float


def annulus_decompose(measure: DiscreteMeasure, center, n_candidates: int = 64):
    """Split a measure into compact annular pieces around ``center``.

    Scans ``n_candidates`` equispaced candidate radii; a boundary is placed
    (at the candidate nearest the gap midpoint, which carries zero
    empirical sphere mass) in every radial gap of the atom cloud wide
    enough to contain a candidate.  Empty annuli are skipped, pieces are
    re-normalized, and piece masses sum to 1.
    """
    chart = measure.chart
    center = np.asarray(center, dtype=float)
    radii = np.asarray(chart.dist(measure.points, center), dtype=float)
    r_max = float(np.max(radii))
    if r_max <= 0.0:
        return [
            AnnulusPiece(measure=measure, mass=1.0, inner_radius=0.0, outer_radius=1e-9)
        ]
    candidates = np.linspace(0.0, r_max * 1.02, n_candidates)
    sorted_r = np.sort(radii)
    boundaries = []
    for lo, hi in zip(sorted_r[:-1], sorted_r[1:]):
        inside = candidates[(candidates > lo + 1e-12) & (candidates < hi - 1e-12)]
        if inside.size:
            mid = 0.5 * (lo + hi)
            boundaries.append(float(inside[np.argmin(np.abs(inside - mid))]))
    edges = [0.0] + sorted(set(boundaries)) + [r_max * 1.02 + 1e-9]
    pieces = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mask = (radii >= lo) & (radii < hi)
        if mask.any():
            w = measure.weights[mask]
            pieces.append(
                AnnulusPiece(
                    measure=DiscreteMeasure(
                        chart=chart, points=measure.points[mask], weights=w / w.sum()
                    ),
                    mass=float(w.sum()),
                    inner_radius=lo,
                    outer_radius=hi,
                )
            )
    return pieces
