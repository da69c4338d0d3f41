"""Exception types shared across the toolkit."""


class DTAPError(Exception):
    """Base class for all toolkit errors."""


class InstanceError(DTAPError, ValueError):
    """Malformed instance input. ``line`` is set when parsing text."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Infeasible(DTAPError):
    """Some arc cannot be covered, or an LP has no feasible point."""


class NotIntegral(DTAPError):
    """A vertex solution expected to be integral has a fractional entry."""

    def __init__(self, link, value):
        self.link = link
        self.value = value
        super().__init__(f"x{link} = {value} is fractional")


class NotWillow(DTAPError):
    def __init__(self, violator):
        self.violator = violator
        super().__init__(f"vertex {violator!r} is neither up- nor down-independent")


class TooLarge(DTAPError):
    pass


class WidthExceeded(DTAPError):
    def __init__(self, width, k):
        self.width = width
        self.k = k
        super().__init__(f"visible width {width} exceeds k={k}")


class PreconditionViolation(DTAPError):
    pass


class InvalidSplitting(DTAPError):
    pass


class BudgetExceeded(DTAPError):
    pass


class IterationBudgetExceeded(DTAPError):
    pass


class NotACover(DTAPError):
    pass


class PropertyViolation(DTAPError, AssertionError):
    """A proven structural property failed at runtime. Always a bug."""
