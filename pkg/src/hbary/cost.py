"""Cost profiles h and their calculus.

A profile turns geodesic distance into transport cost ``c(x, y) = h(d(x, y))``.
Accepted profiles satisfy

* H1: h(0) = 0,
* H2: h is C^2 on (0, inf) and h'(0) := lim h(t)/t = 0,
* H3: h'(t) > 0 and h''(t) > 0 for t > 0.

The origin classification decides whether h'' extends continuously to 0
(``C2_AT_ZERO``) or blows up (``SINGULAR_AT_ZERO``); profiles with
h'(0) > 0 are quarantined as ``VIOLATES_H2`` and only the injectivity
counterexample is allowed to touch them.
"""

from dataclasses import dataclass, field
from enum import Enum
import math
from typing import Callable, Optional

import numpy as np

from .errors import AssumptionViolation, InvDerivOverflow


class OriginClass(Enum):
    C2_AT_ZERO = "c2_at_zero"
    SINGULAR_AT_ZERO = "singular_at_zero"
    VIOLATES_H2 = "violates_h2"


@dataclass(frozen=True)
class CostProfile:
    name: str
    h: Callable[[float], float]
    h1: Callable[[float], float]          # h'
    h2: Callable[[float], float]          # h'', defined for t > 0
    inv_h1: Callable[[float], float]      # (h')^{-1}
    origin_class: OriginClass
    h2_at_zero: Optional[float] = None    # only for C2_AT_ZERO
    domain_max: float = field(default=1e6)

    @property
    def standard(self) -> bool:
        """True when the profile satisfies H1-H3 (usable by the solvers)."""
        return self.origin_class is not OriginClass.VIOLATES_H2

    def inv_deriv(self, s: float) -> float:
        if s < 0:
            raise InvDerivOverflow("inverse derivative needs s >= 0")
        if s == 0.0:
            return 0.0
        if s > self.h1(self.domain_max) * (1.0 + 1e-12):
            raise InvDerivOverflow(
                f"slope {s:.3e} exceeds h'(domain_max) = {self.h1(self.domain_max):.3e}"
            )
        return self.inv_h1(s)

    def h_inverse(self, value: float) -> float:
        """Inverse of the (strictly increasing) profile itself, by bisection."""
        if value <= 0.0:
            return 0.0
        hi = 1.0
        while self.h(hi) < value and hi < self.domain_max:
            hi *= 2.0
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.h(mid) < value:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def coercivity_bound(self, t: float) -> float:
        """Affine lower bound h'(1) (t - 1) + h(1), valid for t >= 1."""
        if t < 1.0:
            raise AssumptionViolation("coercivity", t, "coercivity bound needs t >= 1")
        return self.h1(1.0) * (t - 1.0) + self.h(1.0)


def power_profile(p: float) -> CostProfile:
    """The family h(t) = t^p / p with p > 1."""
    if p <= 1.0:
        raise AssumptionViolation("H3", p, f"power profile needs p > 1, got {p}")
    if p == 2.0:
        origin, h2_at_zero = OriginClass.C2_AT_ZERO, 1.0
    elif p > 2.0:
        origin, h2_at_zero = OriginClass.C2_AT_ZERO, 0.0
    else:
        origin, h2_at_zero = OriginClass.SINGULAR_AT_ZERO, None

    def h(t, p=p):
        return np.abs(t) ** p / p

    def h1(t, p=p):
        return np.abs(t) ** (p - 1.0)

    def h2(t, p=p):
        return (p - 1.0) * np.abs(t) ** (p - 2.0)

    def inv_h1(s, p=p):
        return s ** (1.0 / (p - 1.0))

    return CostProfile(
        name=f"power(p={p:g})",
        h=h,
        h1=h1,
        h2=h2,
        inv_h1=inv_h1,
        origin_class=origin,
        h2_at_zero=h2_at_zero,
        domain_max=1e9,
    )


def counterexample_profile() -> CostProfile:
    """h(t) = t^2 + t; h'(0) = 1 breaks H2, so barycenter injectivity fails.

    Quarantined: only the counterexample checks may consume it.
    """

    def inv_h1(s):
        if s < 1.0:
            raise InvDerivOverflow("h' ranges in [1, inf) for t^2 + t")
        return (s - 1.0) / 2.0

    return CostProfile(
        name="counterexample(t^2+t)",
        h=lambda t: t * t + np.abs(t),
        h1=lambda t: 2.0 * t + 1.0,
        h2=lambda t: 2.0 * np.ones_like(np.asarray(t, dtype=float)),
        inv_h1=inv_h1,
        origin_class=OriginClass.VIOLATES_H2,
        domain_max=1e9,
    )


def cosh_profile() -> CostProfile:
    """h(t) = cosh(t) - 1, a smooth non-power profile (h''(0) = 1)."""
    return custom_profile(
        lambda t: np.cosh(t) - 1.0,
        np.sinh,
        np.cosh,
        domain_max=500.0,
        name="cosh-1",
    )


# ---------------------------------------------------------------------------
# origin classification
# ---------------------------------------------------------------------------

_LADDER_K = range(4, 25)   # t = 2^{-k}
_CLASSIFY_RTOL = 1e-3      # agreement tolerance for the two limits


def _geometric_limit(values):
    """Extrapolated limit of a sequence sampled on t = 2^{-k}.

    Works exactly for v + C t^beta (the differences form a geometric
    sequence, so one Aitken step recovers v).  Returns None when the
    sequence diverges.
    """
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        return None
    d = np.diff(v)
    tail = np.abs(d[-6:])
    if tail[-1] > 1e3 * max(abs(v[0]), 1.0):
        return None
    # diverging differences => no finite limit
    if tail[-1] > 1e-12 and tail[-1] >= 1.5 * tail[0]:
        return None
    if abs(d[-1]) < 1e-13 * max(1.0, abs(v[-1])):
        return float(v[-1])
    denom = d[-1] - d[-2]
    if abs(denom) < 1e-300:
        return float(v[-1])
    aitken = v[-1] - d[-1] * d[-1] / denom
    q = d[-1] / d[-2] if abs(d[-2]) > 1e-300 else 0.0
    if abs(q) >= 1.0:
        return None
    return float(aitken)


def classify_origin(profile: CostProfile) -> OriginClass:
    """Decide C2-at-zero vs singular-at-zero on the ladder t = 2^{-k}, k = 4..24.

    The two candidate limits h'(t)/t and h''(t) are extrapolated
    geometrically; the profile is C2 at zero iff both limits exist and
    agree within a relative 1e-3 (configurable in `_CLASSIFY_RTOL`).
    """
    if profile.origin_class is OriginClass.VIOLATES_H2:
        return OriginClass.VIOLATES_H2
    ts = [2.0**-k for k in _LADDER_K]
    a = _geometric_limit([profile.h1(t) / t for t in ts])
    b = _geometric_limit([profile.h2(t) for t in ts])
    if a is None or b is None:
        return OriginClass.SINGULAR_AT_ZERO
    scale = max(1.0, abs(a), abs(b))
    if abs(a - b) <= _CLASSIFY_RTOL * scale:
        return OriginClass.C2_AT_ZERO
    return OriginClass.SINGULAR_AT_ZERO


def origin_second_derivative(profile: CostProfile) -> float:
    """The extended value h''(0) for a C2-at-zero profile."""
    if profile.h2_at_zero is not None:
        return profile.h2_at_zero
    ts = [2.0**-k for k in _LADDER_K]
    b = _geometric_limit([profile.h2(t) for t in ts])
    if b is None:
        raise AssumptionViolation("origin", 0.0, "profile is not C2 at zero")
    return b


# ---------------------------------------------------------------------------
# custom profiles
# ---------------------------------------------------------------------------


def _build_inv_deriv(h1, domain_max):
    """Invert a strictly increasing h' by doubling bracket + bisection,
    then a few Newton steps (falling back to the bisection answer if
    Newton leaves the bracket)."""

    def inv(s, h1=h1, domain_max=domain_max):
        if s <= 0.0:
            return 0.0
        hi = 1.0
        while h1(hi) < s:
            hi *= 2.0
            if hi > domain_max * 2.0:
                raise InvDerivOverflow(f"slope {s:.3e} out of range on (0, {domain_max:g}]")
        lo = 0.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if h1(mid) < s:
                lo = mid
            else:
                hi = mid
        t = 0.5 * (lo + hi)
        for _ in range(5):
            slope = (h1(t + 1e-9) - h1(t - 1e-9)) / 2e-9 if t > 1e-9 else None
            if not slope or not math.isfinite(slope) or slope <= 0:
                break
            step = (h1(t) - s) / slope
            trial = t - step
            if not (lo <= trial <= hi):
                break
            t = trial
        return t

    return inv


def custom_profile(h, h1, h2, domain_max: float = 1e3, name: str = "custom") -> CostProfile:
    """Wrap user callables as a profile, verifying H1-H3 by sampling.

    1e3 log-spaced points on (0, domain_max] witness H3; the H2 limit
    h(t)/t -> 0 is extrapolated on the dyadic ladder.  Raises
    AssumptionViolation with the violated clause and a witness t.
    """
    if abs(h(0.0)) > 1e-12:
        raise AssumptionViolation("H1", 0.0, f"h(0) = {h(0.0)!r} != 0")
    ts = np.logspace(-6, math.log10(domain_max), 1000)
    for t in ts:
        if not h1(t) > 0.0:
            raise AssumptionViolation("H3", float(t), f"h'({t:g}) = {h1(t):g} <= 0")
        if not h2(t) > 0.0:
            raise AssumptionViolation("H3", float(t), f"h''({t:g}) = {h2(t):g} <= 0")
    ratio_limit = _geometric_limit([h(2.0**-k) / 2.0**-k for k in _LADDER_K])
    if ratio_limit is None or abs(ratio_limit) > 1e-6:
        raise AssumptionViolation(
            "H2", 2.0**-24, f"h(t)/t -> {ratio_limit!r} != 0 as t -> 0"
        )

    base = CostProfile(
        name=name,
        h=h,
        h1=h1,
        h2=h2,
        inv_h1=_build_inv_deriv(h1, domain_max),
        origin_class=OriginClass.SINGULAR_AT_ZERO,  # refined below
        domain_max=domain_max,
    )
    origin = classify_origin(base)
    h2_at_zero = origin_second_derivative(base) if origin is OriginClass.C2_AT_ZERO else None
    return CostProfile(
        name=name,
        h=h,
        h1=h1,
        h2=h2,
        inv_h1=base.inv_h1,
        origin_class=origin,
        h2_at_zero=h2_at_zero,
        domain_max=domain_max,
    )
