"""Exception hierarchy shared by all modules."""


class TopoprismError(Exception):
    """Base class for all errors raised by this package."""


class ComplexError(TopoprismError, ValueError):
    pass


class EmptyComplexError(ComplexError):
    pass


class MixedDimensionError(ComplexError):
    pass


class NotAFaceError(ComplexError, KeyError):
    def __str__(self):  # KeyError quotes its argument otherwise
        return ComplexError.__str__(self)


class NotAVertexError(NotAFaceError):
    pass


class NotAFacetError(NotAFaceError):
    pass


class UnknownFacetError(NotAFacetError):
    pass


class NotPseudomanifoldError(ComplexError):
    pass


class NotManifoldError(NotPseudomanifoldError):
    pass


class VertexClashError(ComplexError):
    pass


class LabelClashError(VertexClashError):
    pass


class NonBijectiveError(ComplexError):
    pass


class InvalidPrismatoidError(ComplexError):
    """A complex failed one of the prismatoid validation checks."""


class BaseNotInducedError(InvalidPrismatoidError):
    pass


class BasesOverlapError(InvalidPrismatoidError):
    pass


class VertexOutsideBasesError(InvalidPrismatoidError):
    pass


class WrongBoundaryCountError(InvalidPrismatoidError):
    pass


class DualDisconnectedError(InvalidPrismatoidError):
    pass


class EulerMismatchError(InvalidPrismatoidError):
    pass


class NotAPermutationError(TopoprismError, ValueError):
    pass


class BadSupportSizeError(TopoprismError, ValueError):
    pass


class InvalidFlipError(TopoprismError, ValueError):
    pass


class NoValidFlipsError(TopoprismError, RuntimeError):
    pass


class NonpositiveTemperatureError(TopoprismError, ValueError):
    pass


class DegenerateConeError(TopoprismError, ValueError):
    pass


class NoValidPairError(TopoprismError, RuntimeError):
    pass


class WidthRegressionError(TopoprismError, AssertionError):
    pass


class NotSimplexBasesError(TopoprismError, RuntimeError):
    pass


class DStepPreconditionError(TopoprismError, ValueError):
    pass


class ParseError(TopoprismError, ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class FacetSizeError(ParseError, MixedDimensionError):
    """A facet line whose size disagrees with the declared dimension."""
