"""Exception hierarchy shared across the package."""


class ExrotError(Exception):
    """Base class for all package errors."""


class InvalidArgument(ExrotError, ValueError):
    pass


class DegenerateInput(ExrotError, ValueError):
    """Points are not in general position (some d-subset is singular)."""


class Unsupported(ExrotError, ValueError):
    pass


class ConstructionFailure(ExrotError, RuntimeError):
    pass


class Infeasible(ExrotError):
    """The requested sign pattern has no unit-norm witness.

    ``min_norm`` is the smallest norm of a point satisfying all constraints
    (``inf`` when the constraint polyhedron is empty).
    """

    def __init__(self, min_norm, message=None):
        self.min_norm = float(min_norm)
        super().__init__(message or f"pattern infeasible: min-norm {self.min_norm:.6g} > 1")


class SolverFailure(ExrotError, RuntimeError):
    """Numerical trouble in the min-norm solver (distinct from infeasibility)."""
