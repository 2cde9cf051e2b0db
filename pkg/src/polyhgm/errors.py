"""Exception hierarchy shared by all modules."""


class HgmError(Exception):
    """Base class for every error raised by polyhgm."""


class ParseError(HgmError, ValueError):
    pass


class InvalidSystem(HgmError, ValueError):
    pass


class DimensionMismatch(InvalidSystem):
    pass


class NonFiniteEntry(InvalidSystem):
    pass


class ZeroNormal(InvalidSystem):
    def __init__(self, j: int):
        super().__init__(f"normal of half-space {j} is the zero vector")
        self.j = j


class IndexOutOfRange(HgmError, IndexError):
    pass


class NotOnHyperplane(HgmError, ValueError):
    pass


class DimensionTooLarge(HgmError, ValueError):
    pass


class NoApplicableMethod(HgmError):
    """Neither the bounded nor the simplicial-cone preconditions hold."""


class UnboundedPolyhedron(NoApplicableMethod):
    pass


class GeneralPositionFailure(NoApplicableMethod):
    pass


class NotSquare(NoApplicableMethod):
    pass


class SingularNormals(NoApplicableMethod):
    pass


class ZeroDiagonal(NoApplicableMethod):
    pass


class NumericalFailure(HgmError, ArithmeticError):
    pass


class SingularGram(NumericalFailure):
    def __init__(self, face, condition: float = float("inf")):
        face = tuple(face)
        super().__init__(
            f"Gram matrix of face {face} is singular (condition {condition:.3g})"
        )
        self.face = face
        self.condition = condition


class LpNumericalFailure(NumericalFailure):
    pass


class StepUnderflow(NumericalFailure):
    pass


class MaxStepsExceeded(NumericalFailure):
    pass
