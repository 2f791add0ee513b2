"""Exception hierarchy shared by every module of the package."""


class ToeplitzError(Exception):
    """Base class for all errors raised by ``toeplitz_hv``."""


class NumericalFailure(ToeplitzError):
    """A numerical routine could not produce a trustworthy value."""


class NonConvergence(NumericalFailure):
    pass


class InvalidDomain(NumericalFailure):
    """An integrand evaluated to a non-finite value on a quadrature node."""


class DenominatorUnderflow(NumericalFailure):
    pass


class GridTooLarge(NumericalFailure):
    """The circle grid required by the oversampling rule exceeds the memory cap."""


class UndersampledGrid(ToeplitzError, ValueError):
    pass


class OutOfDomain(ToeplitzError, ValueError):
    pass


class InvalidParams(ToeplitzError, ValueError):
    pass


class InvalidB(InvalidParams):
    pass


class SpecParseError(ToeplitzError, ValueError):
    """A weight/symbol spec string, table file or config could not be parsed."""


class NotDifferentiable(ToeplitzError):
    pass


class DegenerateBlock(ToeplitzError):
    """Integer parts of consecutive block indices collide."""


class BlockOverflow(ToeplitzError, OverflowError):
    pass


class RangeExceeded(ToeplitzError, IndexError):
    pass


class DivisionDegenerate(ToeplitzError, ZeroDivisionError):
    pass
