"""Exception hierarchy.

Validation problems derive from ``ValidationError`` and numerical failures
from ``NumericalError``; the CLI maps the two to distinct exit codes.
"""


class GraphAdvectError(Exception):
    pass


class ValidationError(GraphAdvectError, ValueError):
    pass


class NumericalError(GraphAdvectError, ArithmeticError):
    pass


class DuplicateEdge(ValidationError):
    pass


class SelfLoop(ValidationError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


class NonFiniteWeight(ValidationError):
    pass


class InvalidFamilyParams(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class InvalidResolutionList(ValidationError):
    pass


class NotSymmetric(ValidationError):
    pass


class DegenerateSplit(ValidationError):
    pass


class ParseError(ValidationError):
    pass


class UnknownNode(ValidationError):
    pass


class EmptyData(ValidationError):
    pass


class NonFiniteState(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class FactorizationFailure(NumericalError):
    pass


class SingularCovariance(FactorizationFailure):
    pass
