"""Exception hierarchy shared by every module."""


class InvalidInputError(ValueError):
    """Arguments violate an operation's preconditions."""


class ParameterRegimeError(ValueError):
    """Class constants put an algorithm outside the regime its analysis covers."""


class InvariantViolationError(RuntimeError):
    """A maintained certificate failed, usually because L, gamma or mu are wrong.

    The offending algorithm state is attached as ``state`` for post-mortem.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class DivergenceError(InvariantViolationError):
    """Gradient descent blew up, which points at a mis-specified L."""


class InstabilityError(ValueError):
    """A feedback gain does not stabilise the closed loop."""


class NotStabilizableError(RuntimeError):
    """The Riccati iteration did not converge."""
