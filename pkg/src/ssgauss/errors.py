"""Exception types shared across the package.

The command line front end maps these onto its exit-code contract:
domain/usage problems exit 2, applicability-gate violations exit 3,
numerical failures exit 4.
"""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class SingularityError(DomainError):
    """The requested quantity diverges at the evaluation point."""


class GridError(DomainError):
    """Time index falls outside the sampled grid."""


class GateError(RuntimeError):
    """Violation of the applicability condition alpha < 2 - 1/d.

    Outside this range the limit-variance series may diverge and the
    normal limit is not guaranteed, so dependent computations refuse
    to run.
    """


class NumericalError(RuntimeError):
    """A computation could not meet its accuracy or stability contract."""
