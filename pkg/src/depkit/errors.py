"""Exception hierarchy shared by all depkit modules."""


class DepkitError(Exception):
    """Base class for every error raised by depkit."""


class ShapeMismatch(DepkitError, ValueError):
    pass


class NonPositiveMass(DepkitError, ValueError):
    pass


class NotNormalized(DepkitError, ValueError):
    pass


class UncoveredSymbol(DepkitError, ValueError):
    def __init__(self, cells):
        self.cells = list(cells)
        shown = ", ".join(f"({x}, {y})" for x, y in self.cells[:5])
        more = "" if len(self.cells) <= 5 else f" and {len(self.cells) - 5} more"
        super().__init__(f"cells with zero count: {shown}{more}")


class UnknownSymbol(DepkitError, KeyError):
    def __str__(self):
        return f"unknown symbol {self.args[0]!r}"


class BadIndex(DepkitError, IndexError):
    pass


class UnmatchedRow(DepkitError, ValueError):
    pass


class DegenerateTopMode(DepkitError, ValueError):
    pass


class DecompositionFailed(DepkitError, RuntimeError):
    pass


class DimMismatch(DepkitError, ValueError):
    pass


class NonConvexCertificateMissing(DepkitError, ValueError):
    pass


class LossSyntaxError(DepkitError, ValueError):
    pass


class InfiniteLoss(DepkitError, ValueError):
    pass


class DivergenceDetected(DepkitError, ArithmeticError):
    pass


class NoFeasiblePoint(DepkitError, ValueError):
    pass


class BadClassCount(DepkitError, ValueError):
    pass
