"""Exception types shared across the package."""


class NNSemiError(Exception):
    """Base class for every error raised by nnsemi."""


class Divergent(NNSemiError):
    """A walk supremum is +inf (a strictly positive cycle is reachable).

    ``pairs`` holds the offending (x, y) pairs, 0-based.
    """

    def __init__(self, pairs, message=None):
        self.pairs = [tuple(int(i) for i in p) for p in pairs]
        shown = ", ".join(f"({x + 1},{y + 1})" for x, y in self.pairs[:10])
        more = "" if len(self.pairs) <= 10 else f", ... ({len(self.pairs)} total)"
        super().__init__(message or f"walk supremum diverges at {shown}{more}")


class BasepointUnusable(NNSemiError):
    """No basepoint (or not the requested one) has a finite row or column."""


class PreconditionViolated(NNSemiError):
    pass


class DimensionMismatch(NNSemiError, ValueError):
    pass


class NotIndecomposable(NNSemiError):
    pass


class NotBinaryDiagonal(NNSemiError):
    """A semigroup element has a diagonal entry outside {0, 1}.

    ``element`` is the closure index of the offender, ``index`` its 0-based
    diagonal position and ``value`` the entry found there.
    """

    def __init__(self, element, index, value, message=None):
        self.element = element
        self.index = index
        self.value = float(value)
        super().__init__(
            message
            or f"element {element} has diagonal entry ({index + 1},{index + 1}) = {value!r}"
        )


class RescaleFailed(NNSemiError):
    """The synthesized diagonal similarity did not produce a binary semigroup."""


class NotAProjection(NNSemiError):
    pass


class BlockNotRankOne(NNSemiError):
    pass


class EmptyPositivePart(NNSemiError):
    pass


class TruncationTooShort(NNSemiError, ValueError):
    pass
