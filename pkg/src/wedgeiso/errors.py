"""Exception types shared by the numerical modules."""


class NonConvergence(RuntimeError):
    """An iterative routine hit its work cap before meeting its tolerance."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""
