"""Exception hierarchy.

Everything a caller can trigger with bad input derives from :class:`InputError`
(the CLI maps it to exit code 2). :class:`InvariantViolation` marks a broken
internal guarantee and maps to exit code 3.
"""


class QfolioError(Exception):
    """Base class for all package errors."""


class InputError(QfolioError, ValueError):
    """Invalid user input or arguments."""


class InvariantViolation(QfolioError, RuntimeError):
    """An internal consistency check failed."""


class MalformedCsv(InputError):
    def __init__(self, line, reason):
        self.line = line
        super().__init__(f"line {line}: {reason}")


class NonPositivePrice(InputError):
    def __init__(self, line, ticker, value):
        self.line = line
        super().__init__(f"line {line}: non-positive price {value!r} for {ticker}")


class EmptySeries(InputError):
    pass


class InsufficientData(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class NegativeVariance(InputError):
    pass


class ZeroVolatility(InputError):
    pass


class InsufficientAssets(InputError):
    pass


class DegenerateFit(InputError):
    pass


class BudgetOutOfRange(InputError):
    pass


class NonPositiveRiskAversion(InputError):
    pass


class TooManyVariables(InputError):
    pass


class TooManyQubits(InputError):
    pass


class IndexOutOfRange(InputError):
    pass


class SelfControlledGate(InputError):
    pass


class ZeroVarianceWarning(UserWarning):
    """An asset has zero variance; its correlations were set to 0."""
