"""Exception hierarchy.

Two families: ``ValidationError`` for bad inputs or configuration (CLI exit
code 2) and ``NumericalError`` for solver/diagnostic failures (exit code 3).
"""


class ValidationError(ValueError):
    pass


class NumericalError(ArithmeticError):
    pass


# validation family
class BadSnapshotTime(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class SizeExceeded(ValidationError):
    pass


class Infeasible(ValidationError):
    pass


class EmptyCloud(ValidationError):
    pass


class EmptyWindow(ValidationError):
    pass


class MissingRun(ValidationError):
    pass


class ConfigParse(ValidationError):
    pass


class UnknownSubcommand(ValidationError):
    pass


class IllConditioned(ValidationError):
    pass


# numerical family
class NonNeutral(NumericalError):
    pass


class BlowUp(NumericalError):
    pass


class ShockDetected(NumericalError):
    pass


class ComplexLeak(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NoRoot(NumericalError):
    pass
