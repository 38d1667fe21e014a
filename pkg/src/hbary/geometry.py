"""Closed-form differential geometry for three constant-curvature model spaces.

Charts
------
* ``EuclideanChart(dim)``: points are vectors in R^m.
* ``SphereChart(dim, curvature)``: curvature K > 0; points are ambient
  vectors of norm 1/sqrt(K) in R^(dim+1); tangent vectors are ambient
  vectors orthogonal to the base point.
* ``HyperbolicChart(curvature)``: curvature K < 0, dimension 2; points are
  Poincare-disk coordinates (Euclidean norm < 1) and the metric is the
  disk metric scaled so the curvature equals K.  Tangent vectors are
  chart-coordinate vectors; inner products carry the conformal factor.

All operations are pure functions of their inputs and broadcast over
leading axes where that is cheap to support (``dist`` in particular).
Distances, exponentials and logarithms are exact closed forms; no
geodesic shooting happens anywhere.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import ChartMembershipError, CutLocusError, DiagonalError, ResolutionError
from .tolerances import DEFAULT as TOL


def _as_array(x):
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class Ball:
    """Metric ball ``{ y : dist(center, y) <= radius }`` used as a region."""

    center: np.ndarray
    radius: float


@dataclass(frozen=True)
class CellPartition:
    """Exact partition of a metric ball into polar cells.

    ``volumes[i]`` is the exact Riemannian volume of cell ``i``; the
    assignment of points to cells is by geodesic polar coordinates around
    the ball center.
    """

    chart: "object"
    region: Ball
    volumes: np.ndarray
    ring_edges: np.ndarray        # radial boundaries, length n_rings+1
    sectors_per_ring: np.ndarray  # dim 2 only; empty for dim 1
    cell_offsets: np.ndarray      # first cell id of each ring

    @property
    def n_cells(self) -> int:
        return int(self.volumes.size)

    def cell_of(self, point) -> int:
        return self.chart._cell_index(self, _as_array(point))

    def contains(self, point) -> bool:
        return self.chart.dist(self.region.center, point) <= self.region.radius + 1e-12


class _ChartBase:
    """Shared helpers; concrete charts fill in the closed forms."""

    def norm(self, base, v):
        return math.sqrt(max(self.inner(base, v, v), 0.0))

    def check_tangent(self, base, v):
        return None

    # -- polar sampling / grids (uniform in Riemannian volume) ------------

    def ball_area(self, radius: float) -> float:
        """Volume of a metric ball of the given radius (dim 1: length)."""
        raise NotImplementedError

    def _ring_radius_for_area(self, area: float) -> float:
        """Inverse of ``ball_area`` (monotone; closed form per chart)."""
        raise NotImplementedError

    def polar_point(self, center, rad, ang):
        """exp_center of the tangent vector with polar coordinates (rad, ang)."""
        frame = self.frame(center)
        if self.dim == 1:
            v = rad * math.cos(ang) * frame[0]  # ang in {0, pi}
        else:
            v = rad * (math.cos(ang) * frame[0] + math.sin(ang) * frame[1])
        return self.exp(center, v)

    def sample_ball(self, center, radius, n, rng):
        """Draw ``n`` points uniformly (w.r.t. volume) from a metric ball."""
        pts = []
        total = self.ball_area(radius)
        for _ in range(n):
            rad = self._ring_radius_for_area(rng.uniform(0.0, total))
            if self.dim == 1:
                ang = 0.0 if rng.uniform() < 0.5 else math.pi
            else:
                ang = rng.uniform(0.0, 2.0 * math.pi)
            pts.append(self.polar_point(center, rad, ang))
        return np.array(pts)

    def ball_grid(self, center, radius, n_target):
        """Deterministic grid of >= n_target points covering a metric ball."""
        if self.dim == 1:
            n = max(int(n_target), 3)
            ts = np.linspace(-radius, radius, n)
            frame = self.frame(center)
            return np.array([self.exp(center, t * frame[0]) for t in ts])
        k = max(2, math.ceil(math.sqrt(n_target / 3.0)))
        pts = [np.asarray(center, dtype=float)]
        edges = np.linspace(0.0, radius, k + 1)
        for i in range(k):
            n_phi = 3 * (2 * i + 1)
            rad = 0.5 * (edges[i] + edges[i + 1])
            for s in range(n_phi):
                ang = 2.0 * math.pi * (s + 0.5) / n_phi
                pts.append(self.polar_point(center, rad, ang))
        return np.array(pts)

    # -- exact polar cell partitions ---------------------------------------

    def uniform_cell_volumes(self, region: Ball, resolution: int) -> CellPartition:
        """Partition a metric ball into cells with exact volumes.

        ``resolution`` is the number of radial subdivisions (the number of
        linear subdivisions in dimension 1).  Ring ``i`` is split into
        ``3*(2i+1)`` angular sectors, which makes the cells exactly
        equal-area on Euclidean charts and nearly so elsewhere.
        """
        if resolution < 2:
            raise ResolutionError(f"resolution {resolution} < 2 cells per dimension")
        if region.radius <= 0.0:
            raise ResolutionError("degenerate region of radius 0")
        inj = self.injectivity_radius(region.center)
        if region.radius >= inj:
            raise ChartMembershipError("region exceeds the injectivity radius")
        if self.dim > 2:
            raise ResolutionError("polar cell partitions support dim <= 2 only")

        edges = np.linspace(0.0, region.radius, resolution + 1)
        if self.dim == 1:
            # cells are the `resolution` subintervals of [-r, r]
            cell_edges = np.linspace(-region.radius, region.radius, resolution + 1)
            return CellPartition(
                chart=self,
                region=region,
                volumes=np.diff(cell_edges),
                ring_edges=cell_edges,
                sectors_per_ring=np.array([], dtype=int),
                cell_offsets=np.arange(resolution),
            )
        sectors = np.array([3 * (2 * i + 1) for i in range(resolution)], dtype=int)
        offsets = np.concatenate([[0], np.cumsum(sectors)])
        vols = []
        for i in range(resolution):
            ring = self.ball_area(edges[i + 1]) - self.ball_area(edges[i])
            vols.extend([ring / sectors[i]] * sectors[i])
        return CellPartition(
            chart=self,
            region=region,
            volumes=np.array(vols),
            ring_edges=edges,
            sectors_per_ring=sectors,
            cell_offsets=offsets,
        )

    def _cell_index(self, part: CellPartition, point) -> int:
        center = part.region.center
        rad = self.dist(center, point)
        if rad > part.region.radius + 1e-12:
            raise ChartMembershipError("point lies outside the partitioned region")
        if self.dim == 1:
            w = self.log(center, point)
            frame = self.frame(center)
            t = self.inner(center, w, frame[0])
            idx = int(np.searchsorted(part.ring_edges, t, side="right")) - 1
            return min(max(idx, 0), part.n_cells - 1)
        edges = part.ring_edges
        ring = min(int(np.searchsorted(edges, rad, side="right")) - 1, part.sectors_per_ring.size - 1)
        ring = max(ring, 0)
        if rad <= TOL.diagonal_guard:
            return int(part.cell_offsets[ring])
        w = self.log(center, point)
        frame = self.frame(center)
        a = self.inner(center, w, frame[0])
        b = self.inner(center, w, frame[1])
        ang = math.atan2(b, a) % (2.0 * math.pi)
        n_phi = int(part.sectors_per_ring[ring])
        sector = min(int(ang / (2.0 * math.pi / n_phi)), n_phi - 1)
        return int(part.cell_offsets[ring]) + sector


@dataclass(frozen=True)
class EuclideanChart(_ChartBase):
    dim: int

    kind = "euclidean"

    def check_point(self, x):
        x = _as_array(x)
        if x.shape[-1] != self.dim:
            raise ChartMembershipError(f"expected dim {self.dim}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ChartMembershipError("non-finite coordinates")
        return x

    def dist(self, x, y):
        x, y = _as_array(x), _as_array(y)
        return np.linalg.norm(x - y, axis=-1)

    def exp(self, base, v):
        return _as_array(base) + _as_array(v)

    def log(self, base, y):
        return _as_array(y) - _as_array(base)

    def inner(self, base, u, v):
        return float(np.dot(_as_array(u), _as_array(v)))

    def frame(self, base):
        return [e.copy() for e in np.eye(self.dim)]

    def injectivity_radius(self, x=None):
        return math.inf

    def grad_dist(self, z, x):
        z, x = _as_array(z), _as_array(x)
        r = float(np.linalg.norm(z - x))
        if r <= TOL.diagonal_guard:
            raise DiagonalError("grad_dist undefined at z = x")
        return (z - x) / r

    def dist_hess_coeff(self, r: float) -> float:
        return 1.0 / r

    def ball_area(self, radius):
        if self.dim == 1:
            return 2.0 * radius
        if self.dim == 2:
            return math.pi * radius * radius
        # m-ball volume; only dims 1-2 are used by the cell machinery
        from math import gamma

        return math.pi ** (self.dim / 2.0) / gamma(self.dim / 2.0 + 1.0) * radius**self.dim

    def _ring_radius_for_area(self, area):
        if self.dim == 1:
            return area / 2.0
        return math.sqrt(area / math.pi)


@dataclass(frozen=True)
class SphereChart(_ChartBase):
    dim: int
    curvature: float

    kind = "sphere"

    def __post_init__(self):
        if self.curvature <= 0:
            raise ChartMembershipError("sphere chart needs curvature K > 0")

    @property
    def radius(self) -> float:
        return 1.0 / math.sqrt(self.curvature)

    @property
    def ambient_dim(self) -> int:
        return self.dim + 1

    def check_point(self, x):
        x = _as_array(x)
        if x.shape[-1] != self.ambient_dim:
            raise ChartMembershipError(
                f"expected ambient dim {self.ambient_dim}, got shape {x.shape}"
            )
        r = np.linalg.norm(x, axis=-1)
        if np.any(np.abs(r - self.radius) > TOL.chart_membership * max(1.0, self.radius)):
            raise ChartMembershipError("point is not on the sphere of radius 1/sqrt(K)")
        return x

    def check_tangent(self, base, v):
        if abs(float(np.dot(_as_array(base), _as_array(v)))) > TOL.tangent_orthogonality * max(
            1.0, float(np.linalg.norm(v))
        ):
            raise ChartMembershipError("tangent vector is not orthogonal to the base point")

    def dist(self, x, y):
        x, y = _as_array(x), _as_array(y)
        R = self.radius
        c = np.sum(x * y, axis=-1) / (R * R)
        chord = np.linalg.norm(x - y, axis=-1)
        # arcsin form is accurate near 0, arccos near pi
        small = 2.0 * np.arcsin(np.clip(chord / (2.0 * R), 0.0, 1.0))
        large = np.arccos(np.clip(c, -1.0, 1.0))
        return R * np.where(c >= 0.0, small, large)

    def exp(self, base, v):
        base, v = _as_array(base), _as_array(v)
        R = self.radius
        t = float(np.linalg.norm(v))
        if t <= TOL.diagonal_guard:
            return base.copy()
        out = math.cos(t / R) * base + (R * math.sin(t / R) / t) * v
        return out * (R / float(np.linalg.norm(out)))

    def log(self, base, y):
        base, y = _as_array(base), _as_array(y)
        d = float(self.dist(base, y))
        inj = self.injectivity_radius(base)
        if d >= inj - TOL.cut_locus_guard:
            raise CutLocusError(
                f"log map undefined: dist {d:.6f} within guard of the cut locus at {inj:.6f}"
            )
        if d <= TOL.diagonal_guard:
            return np.zeros_like(base)
        R = self.radius
        w = y - (float(np.dot(base, y)) / (R * R)) * base
        nw = float(np.linalg.norm(w))
        if nw <= TOL.diagonal_guard:
            raise CutLocusError("antipodal direction is not determined")
        out = (d / nw) * w
        # re-project numerically onto the tangent space
        return out - (float(np.dot(out, base)) / (R * R)) * base

    def inner(self, base, u, v):
        return float(np.dot(_as_array(u), _as_array(v)))

    def frame(self, base):
        base = _as_array(base)
        unit = base / float(np.linalg.norm(base))
        vecs = []
        for e in np.eye(self.ambient_dim):
            w = e - np.dot(e, unit) * unit
            for f in vecs:
                w = w - np.dot(w, f) * f
            n = float(np.linalg.norm(w))
            if n > 1e-8:
                vecs.append(w / n)
            if len(vecs) == self.dim:
                break
        return vecs

    def injectivity_radius(self, x=None):
        return math.pi * self.radius

    def grad_dist(self, z, x):
        z, x = _as_array(z), _as_array(x)
        r = float(self.dist(z, x))
        if r <= TOL.diagonal_guard:
            raise DiagonalError("grad_dist undefined at z = x")
        return -self.log(z, x) / r

    def dist_hess_coeff(self, r: float) -> float:
        sk = math.sqrt(self.curvature)
        return sk / math.tan(sk * r)

    def ball_area(self, radius):
        if self.dim == 1:
            return 2.0 * radius
        K = self.curvature
        return 2.0 * math.pi * (1.0 - math.cos(math.sqrt(K) * radius)) / K

    def _ring_radius_for_area(self, area):
        if self.dim == 1:
            return area / 2.0
        K = self.curvature
        c = 1.0 - area * K / (2.0 * math.pi)
        return math.acos(min(max(c, -1.0), 1.0)) / math.sqrt(K)


@dataclass(frozen=True)
class HyperbolicChart(_ChartBase):
    curvature: float

    kind = "hyperbolic"
    dim = 2

    def __post_init__(self):
        if self.curvature >= 0:
            raise ChartMembershipError("hyperbolic chart needs curvature K < 0")

    @property
    def scale(self) -> float:
        """Metric scale s = 1/sqrt(|K|); the chart is the unit Poincare disk."""
        return 1.0 / math.sqrt(-self.curvature)

    def check_point(self, x):
        x = _as_array(x)
        if x.shape[-1] != 2:
            raise ChartMembershipError(f"expected dim 2, got shape {x.shape}")
        if np.any(np.linalg.norm(x, axis=-1) >= 1.0):
            raise ChartMembershipError("point is not strictly inside the Poincare disk")
        return x

    def _lam(self, x):
        return 2.0 / (1.0 - float(np.dot(x, x)))

    def dist(self, x, y):
        x, y = _as_array(x), _as_array(y)
        dxy = np.sum((x - y) ** 2, axis=-1)
        nx = np.sum(x * x, axis=-1)
        ny = np.sum(y * y, axis=-1)
        arg = 1.0 + 2.0 * dxy / ((1.0 - nx) * (1.0 - ny))
        return self.scale * np.arccosh(np.maximum(arg, 1.0))

    @staticmethod
    def _mobius_add(x, y):
        xy = float(np.dot(x, y))
        nx = float(np.dot(x, x))
        ny = float(np.dot(y, y))
        den = 1.0 + 2.0 * xy + nx * ny
        return ((1.0 + 2.0 * xy + ny) * x + (1.0 - nx) * y) / den

    def exp(self, base, v):
        base, v = _as_array(base), _as_array(v)
        t = self.norm(base, v)  # Riemannian length of v
        if t <= TOL.diagonal_guard:
            return base.copy()
        direction = v / float(np.linalg.norm(v))
        w = math.tanh(0.5 * t / self.scale) * direction
        return self._mobius_add(base, w)

    def log(self, base, y):
        base, y = _as_array(base), _as_array(y)
        u = self._mobius_add(-base, y)
        nu = float(np.linalg.norm(u))
        if nu <= TOL.diagonal_guard:
            return np.zeros(2)
        d = 2.0 * self.scale * math.atanh(min(nu, 1.0 - 1e-16))
        # chart components scaled so the Riemannian norm equals d
        return (d / (self.scale * self._lam(base) * nu)) * u

    def inner(self, base, u, v):
        lam = self._lam(_as_array(base))
        s = self.scale
        return s * s * lam * lam * float(np.dot(_as_array(u), _as_array(v)))

    def frame(self, base):
        base = _as_array(base)
        c = 1.0 / (self.scale * self._lam(base))
        return [c * e for e in np.eye(2)]

    def injectivity_radius(self, x=None):
        return math.inf

    def grad_dist(self, z, x):
        z, x = _as_array(z), _as_array(x)
        r = float(self.dist(z, x))
        if r <= TOL.diagonal_guard:
            raise DiagonalError("grad_dist undefined at z = x")
        return -self.log(z, x) / r

    def dist_hess_coeff(self, r: float) -> float:
        sk = math.sqrt(-self.curvature)
        return sk / math.tanh(sk * r)

    def ball_area(self, radius):
        s = self.scale
        return 2.0 * math.pi * s * s * (math.cosh(radius / s) - 1.0)

    def _ring_radius_for_area(self, area):
        s = self.scale
        return s * math.acosh(1.0 + area / (2.0 * math.pi * s * s))


def make_chart(kind: str, dim: int = 2, curvature: float | None = None):
    """Factory used by the JSON spec layer."""
    if kind == "euclidean":
        return EuclideanChart(dim=dim)
    if kind == "sphere":
        return SphereChart(dim=dim, curvature=1.0 if curvature is None else curvature)
    if kind == "hyperbolic":
        return HyperbolicChart(curvature=-1.0 if curvature is None else curvature)
    raise ChartMembershipError(f"unknown chart kind {kind!r}")


def hess_dist(chart, z, x) -> np.ndarray:
    """Hessian of y -> dist(y, x) at z, as a matrix in ``chart.frame(z)``.

    Closed form: coeff(r) * (g - dr (x) dr) with coeff 1/r, sqrt(K) cot(sqrt(K) r)
    or sqrt(|K|) coth(sqrt(|K|) r).  Radial direction is annihilated exactly.
    """
    r = float(chart.dist(z, x))
    if r <= TOL.diagonal_guard:
        raise DiagonalError("hess_dist undefined at z = x")
    inj = chart.injectivity_radius(z)
    if r >= inj - TOL.cut_locus_guard:
        raise CutLocusError("hess_dist undefined at the cut locus")
    grad = chart.grad_dist(z, x)
    frame = chart.frame(z)
    u = np.array([chart.inner(z, grad, e) for e in frame])
    coeff = chart.dist_hess_coeff(r)
    eye = np.eye(len(frame))
    return coeff * (eye - np.outer(u, u))


def radial_unit_coords(chart, z, x) -> np.ndarray:
    """Coordinates of grad_dist(z, x) in the orthonormal frame at z."""
    grad = chart.grad_dist(z, x)
    frame = chart.frame(z)
    return np.array([chart.inner(z, grad, e) for e in frame])
