"""Exception types shared by the numerical modules.

The CLI maps :class:`ValidationError` to exit status 2 and
:class:`NonConvergenceError` (and its subclasses) to exit status 3.
"""


class ValidationError(ValueError):
    """Input data violates a documented invariant."""


class NonConvergenceError(RuntimeError):
    """A numerical estimate did not reach the requested tolerance."""


class InstabilityError(NonConvergenceError):
    """Time stepping blew up."""


class InfeasibleError(NonConvergenceError):
    """A requested accuracy needs more resources than the configured limit."""
