"""Exception types shared across the package."""


class HbaryError(Exception):
    """Base class for all package errors."""


class ChartMembershipError(HbaryError):
    """A point does not satisfy the membership constraint of its chart."""


class DiagonalError(HbaryError):
    """An operation that requires two distinct points was called on the diagonal."""


class CutLocusError(HbaryError):
    """The target point lies on (or numerically too close to) the cut locus."""


class AssumptionViolation(HbaryError):
    """A cost profile fails one of the structural assumptions H1/H2/H3.

    Carries the violated clause and a witness argument value.
    """

    def __init__(self, clause, witness, message=None):
        self.clause = clause
        self.witness = witness
        super().__init__(message or f"assumption {clause} violated at t={witness!r}")


class ProfileViolatesAssumptions(HbaryError):
    """A quarantined profile (h'(0) > 0) was passed to a solver that requires H1-H3."""


class NonConvergence(HbaryError):
    """The barycenter solver exhausted its iteration budget.

    The best iterate found is attached as ``best``.
    """

    def __init__(self, best, message="solver did not reach the residual tolerance"):
        self.best = best
        super().__init__(message)


class SizeLimit(HbaryError):
    """The instance exceeds the desk-scale budget of the tuple linear program."""


class InjectivityViolation(HbaryError):
    """Two distinct support configurations share a barycenter.

    Expected only for profiles violating H2; carries the witness pair.
    """

    def __init__(self, tuple_a, tuple_b, barycenter, message=None):
        self.tuple_a = tuple_a
        self.tuple_b = tuple_b
        self.barycenter = barycenter
        super().__init__(
            message
            or f"configurations {tuple_a} and {tuple_b} share barycenter {barycenter}"
        )


class InvDerivOverflow(HbaryError):
    """The field magnitude exceeds the range of the inverse derivative."""


class ResolutionError(HbaryError):
    """A cell partition is too coarse (or would be absurdly fine) for the request."""


class SpecError(HbaryError):
    """A JSON spec file is malformed or references missing data."""
