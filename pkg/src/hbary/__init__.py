"""Generalized h-cost barycenters on constant-curvature manifolds.

Library layout:

* :mod:`hbary.geometry` -- charts (Euclidean, sphere, Poincare disk) with
  closed-form distance/exp/log/Hessian and exact polar cell partitions.
* :mod:`hbary.cost` -- cost profiles h with derivative calculus and the
  origin-regularity classification.
* :mod:`hbary.barycenter` -- the weighted h-barycenter solver.
* :mod:`hbary.transport` -- exact discrete optimal transport (two- and
  multi-marginal) with dual certificates, c-transforms, Monge maps, and
  the injectivity / cyclical-monotonicity structure checks.
* :mod:`hbary.invmap` -- the inverse transport map on anchor slices and
  its Lipschitz probes.
* :mod:`hbary.diagnostics` -- discretization, bounded-Lipschitz distance,
  volume-distortion class estimation, and the convergence experiments.
* :mod:`hbary.cli` -- the ``bary`` command.
"""

from .barycenter import (
    BarycenterSolution,
    Configuration,
    barycenter_cost,
    counterexample_shared_barycenter,
    first_order_residual,
    objective_phi,
    solve_barycenter,
)
from .cost import (
    CostProfile,
    OriginClass,
    classify_origin,
    cosh_profile,
    counterexample_profile,
    custom_profile,
    power_profile,
)
from .geometry import (
    Ball,
    EuclideanChart,
    HyperbolicChart,
    SphereChart,
    hess_dist,
    make_chart,
)
from .invmap import (
    AnchorSlice,
    HessianForm,
    anchor_field_V,
    hess_cost,
    hessian_collision_limit_check,
    inverse_map_F,
    lipschitz_probe,
)
from .transport import (
    DiscreteMeasure,
    MultiPlan,
    Potential,
    c_transform,
    check_cyclical_monotonicity,
    check_injectivity,
    monge_map_from_potential,
    solve_mmot,
    solve_ot2,
    support_barycenters,
)

__version__ = "0.1.0"

__all__ = [
    "AnchorSlice",
    "Ball",
    "BarycenterSolution",
    "Configuration",
    "CostProfile",
    "DiscreteMeasure",
    "EuclideanChart",
    "HessianForm",
    "HyperbolicChart",
    "MultiPlan",
    "OriginClass",
    "Potential",
    "SphereChart",
    "anchor_field_V",
    "barycenter_cost",
    "c_transform",
    "check_cyclical_monotonicity",
    "check_injectivity",
    "classify_origin",
    "cosh_profile",
    "counterexample_profile",
    "counterexample_shared_barycenter",
    "custom_profile",
    "first_order_residual",
    "hess_cost",
    "hess_dist",
    "hessian_collision_limit_check",
    "inverse_map_F",
    "lipschitz_probe",
    "make_chart",
    "monge_map_from_potential",
    "objective_phi",
    "power_profile",
    "solve_barycenter",
    "solve_mmot",
    "solve_ot2",
    "support_barycenters",
]
