"""
Exception hierarchy.

Input problems (bad files, wrong dimensions, states that violate a
precondition) are ValidationErrors and map to exit code 2. Failures of the
numerics themselves, or a checked inequality coming out false, are
NumericalErrors and map to exit code 3.
"""


class DpiError(Exception):
    kind = "error"
    exit_code = 1


class ValidationError(DpiError, ValueError):
    kind = "validation"
    exit_code = 2


class ParseError(ValidationError):
    kind = "parse"


class DimensionMismatch(ValidationError):
    pass


class NotHermitian(ValidationError):
    pass


class BadRank(ValidationError):
    pass


class NonFaithful(ValidationError):
    pass


class SupportViolation(ValidationError):
    pass


class NotInAlgebra(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class NotInvariant(ValidationError):
    pass


class BadWeights(ValidationError):
    pass


class BadCellDistribution(ValidationError):
    pass


class NumericalError(DpiError, ArithmeticError):
    kind = "numerical"
    exit_code = 3


class ConvergenceFailure(NumericalError):
    pass


class SingularInput(NumericalError):
    pass


class DegenerateRandomElement(NumericalError):
    pass


class StructureInconsistency(NumericalError):
    pass


class TheoremViolation(NumericalError):
    """A checked inequality or identity failed beyond its tolerance."""
    kind = "violation"


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, DpiError):
        return error.exit_code
    return NumericalError.exit_code
