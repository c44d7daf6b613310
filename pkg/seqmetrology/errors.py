"""
Exception hierarchy
Every error carries the CLI exit code it maps to
"""


class MetrologyError(Exception):
    """Base class for all errors raised by seqmetrology"""

    exit_code = 1


# Malformed or out-of-contract input (exit code 2)

class MalformedInput(MetrologyError, ValueError):
    exit_code = 2


class ShapeMismatch(MalformedInput):
    pass


class DimensionMismatch(MalformedInput):
    pass


class NotHermitian(MalformedInput):
    pass


class NotUnitary(MalformedInput):
    pass


class NotNormalized(MalformedInput):
    pass


class InvalidState(MalformedInput):
    pass


class DomainViolation(MalformedInput):
    pass


# Channel invariants (exit code 3)

class InvariantViolation(MetrologyError, ValueError):
    exit_code = 3


class NotCPTP(InvariantViolation):
    pass


# Numerical failures (exit code 4)

class NumericalFailure(MetrologyError, RuntimeError):
    exit_code = 4


class NonConvergence(NumericalFailure):
    pass


class NoConvergence(NumericalFailure):
    pass


class DegenerateUnresolved(NumericalFailure):
    pass


class AlgorithmInvariantViolated(NumericalFailure):
    pass


class RankDeficientSignal(NumericalFailure):
    pass


class DegeneratePurity(NumericalFailure):
    pass


# Raised by the command-line layer only

class ConditionsNotMet(MetrologyError):
    exit_code = 5


class SanityCheckFailed(MetrologyError):
    exit_code = 6
