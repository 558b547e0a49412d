"""Exception types shared across the package.

Every numerical failure derives from :class:`NumericalFailure` so the CLI can
map it to exit code 2; parameter problems derive from :class:`InvalidParams`
(exit code 1).
"""


class MinkHypError(Exception):
    """Base class for all package errors."""


class InvalidParams(MinkHypError, ValueError):
    """Parameters violate an operation's precondition."""


class NumericalFailure(MinkHypError, RuntimeError):
    """A computation ran but could not meet its own contract."""


class NotSpacelike(NumericalFailure):
    """|Du| >= 1 - tol where strict spacelikeness is required."""


class DomainError(InvalidParams):
    """Argument outside the domain of a pointwise formula."""


class OutOfRange(InvalidParams):
    """Query outside the sampled range of a profile or grid."""


class TolUnachievable(NumericalFailure):
    """Requested accuracy could not be reached."""


class LeftDomain(NumericalFailure):
    """A path left the region where its data are defined."""


class NotConvex(NumericalFailure):
    """Discrete convexity test failed."""


class NonMonotone(NumericalFailure):
    """A sequence expected to be monotone was not."""


class NoWitness(NumericalFailure):
    """Null-condition search found no witness."""


class EmptySet(InvalidParams):
    """Operation needs a nonempty set."""


class NotWeaklySpacelike(NumericalFailure):
    """|Du| > 1 + tol on a non-negligible set."""


class HypothesisViolated(NumericalFailure):
    """An input fails a hypothesis of the comparison being checked."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class GridTooCoarse(InvalidParams):
    """Grid does not resolve the subdomain."""


class NewtonStall(NumericalFailure):
    """Newton iteration failed to reduce the residual."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class NonConvexIterate(NumericalFailure):
    """Newton iterate left the discrete convex cone."""


class MonotonicityViolated(NumericalFailure):
    """The exhaustion sandwich failed beyond its allowance."""

    def __init__(self, message, node=None, stage=None):
        super().__init__(message)
        self.node = node
        self.stage = stage


class SearchFailed(NumericalFailure):
    """Parameter search exhausted its range."""


class DegenerateCone(InvalidParams):
    """Prescribed set E lies in a hyperplane."""


class NotStrictlyConvex(NumericalFailure):
    """Solution failed the strict convexity probe."""
