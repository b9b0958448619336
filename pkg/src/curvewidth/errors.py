"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the domain where an operation or bound is defined."""


class DegenerateError(DomainError):
    """Coincident, antipodal or otherwise degenerate configuration."""


class BudgetExceeded(RuntimeError):
    """A sampler or solver ran out of its evaluation budget."""


class CompositionDepthError(RuntimeError):
    """Too many nested oracle transforms; re-materialize the body first."""


class NotApplicable(DomainError):
    """The check has no admissible configurations in this space or setting."""
