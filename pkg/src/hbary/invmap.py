"""The inverse transport map F_v and the differential calculus around h(dist).

With the anchor points v = (x_2, ..., x_n) frozen, a barycenter z of a
configuration (x_1, v) determines x_1 explicitly:

    F_v(z) = exp_z( -(h')^{-1}(|V(z)|) V(z)/|V(z)| ),
    V(z)   = -(1/lambda_1) sum_{i>=2} lambda_i grad_z[ h(d(z, x_i)) ].

This module also provides the gradient/Hessian of z -> h(d(z, x)) used by
the barycenter solver, the collision-limit check for profiles whose h''
extends to 0, and empirical Lipschitz probes for the two regularity
regimes (fully collision-free vs. first-marginal-only exclusion).
"""

from dataclasses import dataclass
import math

import numpy as np

from .cost import CostProfile, OriginClass, origin_second_derivative
from .errors import AssumptionViolation, CutLocusError, DiagonalError
from .geometry import hess_dist, radial_unit_coords
from .tolerances import DEFAULT as TOL


def cost_gradient(chart, profile: CostProfile, z, x):
    """Gradient of z -> h(d(z, x)); zero at a collision (H2 convention)."""
    r = float(chart.dist(z, x))
    if r <= TOL.diagonal_guard:
        return np.zeros_like(np.asarray(z, dtype=float))
    return profile.h1(r) * chart.grad_dist(z, x)


@dataclass(frozen=True)
class HessianForm:
    """Symmetric bilinear form on T_z M in the chart's orthonormal frame."""

    base: np.ndarray
    matrix: np.ndarray

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)


def hess_cost(profile: CostProfile, chart, z, x_i) -> HessianForm:
    """Hessian of z -> h(d(z, x_i)) in the orthonormal frame at z.

    Away from the diagonal the chain rule gives
    h''(r) dr (x) dr + h'(r) Hess(r); at a collision the form extends to
    h''(0) g when the profile's second derivative does, and is undefined
    (DiagonalError) otherwise.
    """
    z = np.asarray(z, dtype=float)
    r = float(chart.dist(z, x_i))
    dim = chart.dim
    if r <= TOL.diagonal_guard:
        if profile.origin_class is OriginClass.C2_AT_ZERO:
            return HessianForm(base=z, matrix=origin_second_derivative(profile) * np.eye(dim))
        raise DiagonalError(
            f"{profile.name} has no second derivative at a collision (origin class "
            f"{profile.origin_class.value})"
        )
    u = radial_unit_coords(chart, z, x_i)
    radial = np.outer(u, u)
    tangential = hess_dist(chart, z, x_i)  # already annihilates the radial direction
    return HessianForm(base=z, matrix=profile.h2(r) * radial + profile.h1(r) * tangential)


@dataclass(frozen=True)
class AnchorSlice:
    """Frozen anchors (x_2, ..., x_n) with the full weight vector."""

    chart: object
    profile: CostProfile
    anchors: np.ndarray  # (n-1, coord_dim)
    weights: np.ndarray  # (n,), lambda_1 first

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.size < 2 or np.any(w <= 0) or abs(w.sum() - 1.0) > TOL.weight_sum:
            raise AssumptionViolation("weights", w, "weights must be positive and sum to 1")
        if len(self.anchors) != w.size - 1:
            raise AssumptionViolation(
                "anchors", len(self.anchors), "need one anchor per non-first weight"
            )


def anchor_field_V(slice_: AnchorSlice, z):
    """V(z) = -(1/lambda_1) sum_{i>=2} lambda_i grad_z h(d(z, x_i))."""
    z = np.asarray(z, dtype=float)
    acc = np.zeros_like(z)
    lam = slice_.weights
    for i, anchor in enumerate(slice_.anchors):
        acc += lam[i + 1] * cost_gradient(slice_.chart, slice_.profile, z, anchor)
    return -acc / lam[0]


def inverse_map_F(slice_: AnchorSlice, z):
    """Recover x_1 from a barycenter z of (x_1, anchors); F(z) = z when V = 0."""
    chart, profile = slice_.chart, slice_.profile
    z = np.asarray(z, dtype=float)
    V = anchor_field_V(slice_, z)
    norm_v = chart.norm(z, V)
    if norm_v <= TOL.diagonal_guard:
        return z.copy()
    step = profile.inv_deriv(norm_v)
    return chart.exp(z, (-step / norm_v) * V)


# ---------------------------------------------------------------------------
# collision limit of the Hessian
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CollisionLimitReport:
    radii: np.ndarray
    deviations: np.ndarray      # max |Hess at r - h''(0) g| over directions
    slope: float                # log-log slope of deviation vs radius
    bound_constant: float       # deviations <= bound_constant * r on the sample

    @property
    def decreasing(self) -> bool:
        return bool(np.all(np.diff(self.deviations) <= 1e-12))


def hessian_collision_limit_check(
    profile: CostProfile, chart, x_i, radii, n_dirs: int = 8, seed: int = 0
) -> CollisionLimitReport:
    """Measure how fast Hess[h o d] approaches h''(0) g as z -> x_i.

    Only meaningful for profiles with a continuous second derivative at the
    origin; rejects the others.
    """
    if profile.origin_class is not OriginClass.C2_AT_ZERO:
        raise AssumptionViolation(
            "origin", profile.name, "collision limit needs a C2-at-zero profile"
        )
    h2_0 = origin_second_derivative(profile)
    rng = np.random.default_rng(seed)
    frame = chart.frame(np.asarray(x_i, dtype=float))
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    devs = []
    for r in radii:
        worst = 0.0
        for _ in range(n_dirs):
            raw = rng.normal(size=len(frame))
            raw /= np.linalg.norm(raw)
            v = sum(c * e for c, e in zip(raw, frame))
            z = chart.exp(x_i, r * v)
            H = hess_cost(profile, chart, z, x_i).matrix
            worst = max(worst, float(np.linalg.norm(H - h2_0 * np.eye(len(frame)), 2)))
        devs.append(worst)
    devs = np.array(devs)
    mask = devs > 1e-15
    if mask.sum() >= 2:
        slope = float(
            np.polyfit(np.log(radii[mask]), np.log(devs[mask]), 1)[0]
        )
        bound = float(np.max(devs[mask] / radii[mask]))
    else:
        slope, bound = 0.0, 0.0
    return CollisionLimitReport(radii=radii, deviations=devs, slope=slope, bound_constant=bound)


# ---------------------------------------------------------------------------
# empirical Lipschitz probes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeReport:
    alpha: float
    regime: str
    constant: float
    n_pairs: int
    seed: int
    max_pair_distance: float
    min_pair_distance: float

    def to_json_dict(self):
        return {
            "alpha": self.alpha,
            "regime": self.regime,
            "constant": self.constant,
            "n_pairs": self.n_pairs,
            "seed": self.seed,
        }


def _satisfies_regime(slice_: AnchorSlice, z, alpha: float, regime: str) -> bool:
    chart, profile = slice_.chart, slice_.profile
    v_norm = chart.norm(z, anchor_field_V(slice_, z))
    if v_norm < profile.h1(alpha):
        return False  # the implied d(z, x_1) = (h')^{-1}(|V|) is <= alpha
    if regime == "omega_all":
        for anchor in slice_.anchors:
            if chart.dist(z, anchor) <= alpha:
                return False
    elif regime != "omega_first":
        raise ValueError(f"unknown regime {regime!r}")
    return True


def lipschitz_probe(
    slice_: AnchorSlice,
    region,
    alpha: float,
    n_pairs: int,
    regime: str = "omega_all",
    seed: int = 0,
) -> ProbeReport:
    """Empirical Lipschitz constant of F on a region, max over sampled pairs.

    Pair separations are drawn log-uniformly in [1e-4, region diameter] to
    expose both the local and the global ratio.  The constant is
    descriptive: no upper bound is claimed.
    """
    chart = slice_.chart
    rng = np.random.default_rng(seed)
    center, radius = np.asarray(region.center, dtype=float), float(region.radius)

    accepted = 0
    worst = 0.0
    dmin, dmax = math.inf, 0.0
    attempts = 0
    max_attempts = 200 * n_pairs
    while accepted < n_pairs and attempts < max_attempts:
        attempts += 1
        z = chart.sample_ball(center, radius, 1, rng)[0]
        if not _satisfies_regime(slice_, z, alpha, regime):
            continue
        t = math.exp(rng.uniform(math.log(1e-4), math.log(2.0 * radius)))
        frame = chart.frame(z)
        raw = rng.normal(size=len(frame))
        raw /= np.linalg.norm(raw)
        u = sum(c * e for c, e in zip(raw, frame))
        z2 = chart.exp(z, t * u)
        if chart.dist(center, z2) > radius:
            continue
        if not _satisfies_regime(slice_, z2, alpha, regime):
            continue
        try:
            f1 = inverse_map_F(slice_, z)
            f2 = inverse_map_F(slice_, z2)
        except (CutLocusError, DiagonalError):
            continue
        dz = float(chart.dist(z, z2))
        if dz <= 1e-12:
            continue
        ratio = float(chart.dist(f1, f2)) / dz
        worst = max(worst, ratio)
        dmin, dmax = min(dmin, dz), max(dmax, dz)
        accepted += 1
    if accepted < max(4, n_pairs // 10):
        raise AssumptionViolation(
            "region", alpha, "region leaves almost no room under the alpha constraint"
        )
    return ProbeReport(
        alpha=alpha,
        regime=regime,
        constant=worst,
        n_pairs=accepted,
        seed=seed,
        max_pair_distance=dmax,
        min_pair_distance=dmin,
    )
