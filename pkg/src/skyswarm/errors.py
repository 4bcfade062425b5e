"""Exception hierarchy shared by every skyswarm module."""


class SkyswarmError(Exception):
    """Base class for all library errors."""


class UnknownNode(SkyswarmError, KeyError):
    def __init__(self, node):
        super().__init__(f"unknown node {node!r}")
        self.node = node

    def __str__(self):
        return self.args[0]


class InvalidParameter(SkyswarmError, ValueError):
    pass


class ParseError(SkyswarmError, ValueError):
    """Malformed network or itinerary document."""

    def __init__(self, message, *, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.line = line
        self.field = field


class ValidationError(SkyswarmError, ValueError):
    """A structural invariant does not hold; ``invariant`` names it."""

    def __init__(self, invariant, message):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


class PathBudgetExceeded(SkyswarmError):
    def __init__(self, paths, budget):
        super().__init__(f"more than {budget} simple paths")
        self.paths = paths
        self.budget = budget


class PayloadExceedsCapacity(SkyswarmError, ValueError):
    pass


class TooFewPackages(SkyswarmError, ValueError):
    pass


class IllegalSplit(SkyswarmError, ValueError):
    pass


class PartitionLimitExceeded(SkyswarmError):
    pass


class NoFeasibleCandidate(SkyswarmError):
    pass


class NoFeasiblePath(SkyswarmError):
    pass
