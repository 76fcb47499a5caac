"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid input to a constructor or operation."""


class InvalidSizeError(ValidationError):
    """A size parameter is outside the supported range."""


class BudgetError(ValidationError):
    """The request exceeds a configured computational budget."""


class UnsupportedGraphError(ValidationError):
    """The operation is only defined for a different graph family."""
