"""Exception hierarchy shared by all modules."""


class ShearletError(Exception):
    """Base class for every error raised by bdshear."""


class DomainError(ShearletError):
    """A domain description violates the STAR^2(nu, L) model."""


class CurvatureBoundViolated(DomainError):
    pass


class RadiusBoundViolated(DomainError):
    pass


class NotInsideUnitSquare(DomainError):
    pass


class NotClosed(DomainError):
    pass


class NotSimple(DomainError):
    pass


class SlopeBoundViolated(DomainError):
    """A graph piece is too steep for its orientation and must be re-parameterized."""


class InconsistentDerivative(DomainError):
    pass


class CornerPoint(DomainError):
    pass


class NotOnBoundary(DomainError):
    pass


class CartoonError(ShearletError):
    """A cartoon function is not a member of the model class."""


class NotNested(CartoonError):
    pass


class C2BoundExceeded(CartoonError):
    def __init__(self, message, measured=None):
        super().__init__(message)
        self.measured = measured


class DomainTouchesUnitBoundary(CartoonError):
    pass


class NonConvergent(ShearletError):
    pass


class IndexNotInSystem(ShearletError):
    pass


class GridMismatch(ShearletError):
    pass


class NotAFrame(ShearletError):
    pass


class CGNotConverged(ShearletError):
    def __init__(self, message, residual=None, solution=None):
        super().__init__(message)
        self.residual = residual
        self.solution = solution


class EquivalenceViolated(ShearletError):
    def __init__(self, message, ratio=None):
        super().__init__(message)
        self.ratio = ratio


class NOutOfRange(ShearletError):
    pass


class InsufficientPoints(ShearletError):
    pass


class CornerInCube(ShearletError):
    pass


class NoCorners(ShearletError):
    pass
