"""Central numeric tolerance configuration.

Every guard and certificate threshold used by the library lives here so
that one record documents them all and the CLI can scale the solver-side
ones uniformly (``--tol-scale``).
"""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # chart / tangent membership
    chart_membership: float = 1e-12
    tangent_orthogonality: float = 1e-10

    # geometry guards
    cut_locus_guard: float = 1e-7
    diagonal_guard: float = 1e-14
    dist_symmetry: float = 1e-12
    log_roundtrip: float = 1e-8
    grad_fd: float = 1e-6
    hess_fd: float = 1e-5

    # measure bookkeeping
    weight_sum: float = 1e-12
    support_distinct: float = 1e-10
    marginal_match: float = 1e-10

    # transport certificates
    dual_feasibility: float = 1e-9
    slackness: float = 1e-8
    duality_gap: float = 1e-8
    reduced_cost_unique: float = 1e-9

    # barycenter solver
    grad_residual: float = 1e-8
    grad_residual_sphere: float = 1e-7
    value_tie: float = 1e-9
    grid_certificate: float = 1e-9
    collision_perturb: float = 1e-9

    # structure checks
    injectivity_z: float = 1e-6
    injectivity_x: float = 1e-5
    inverse_roundtrip: float = 1e-7
    cut_margin_sphere: float = 1e-3

    # finite differences (step sizes)
    fd_grad_step: float = 1e-5
    fd_hess_step: float = 1e-3

    def scaled(self, factor: float) -> "Tolerances":
        """Return a copy with the solver/certificate tolerances multiplied by ``factor``.

        Structural guards (chart membership, cut locus) are left untouched.
        """
        return replace(
            self,
            grad_residual=self.grad_residual * factor,
            grad_residual_sphere=self.grad_residual_sphere * factor,
            slackness=self.slackness * factor,
            duality_gap=self.duality_gap * factor,
            dual_feasibility=self.dual_feasibility * factor,
            marginal_match=self.marginal_match * factor,
            grid_certificate=self.grid_certificate * factor,
        )


DEFAULT = Tolerances()
