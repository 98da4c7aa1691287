"""Exception hierarchy for rfqmm.

Exit-code mapping used by the CLI: ConfigError subclasses -> 2,
NumericError subclasses -> 3, IO failures -> 4.
"""


class RfqmmError(Exception):
    pass


class ConfigError(RfqmmError):
    pass


class RowSumViolation(ConfigError):
    def __init__(self, row, row_sum):
        self.row = row
        self.row_sum = row_sum
        super().__init__(f"generator row {row} sums to {row_sum:.3g}, expected 0")


class NegativeOffDiagonal(ConfigError):
    def __init__(self, row, col, value):
        self.row = row
        self.col = col
        super().__init__(f"generator entry ({row}, {col}) = {value:.3g} must be >= 0")


class UnknownPreset(ConfigError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown preset {name!r}")


class NumericError(RfqmmError):
    pass


class SingularChain(NumericError):
    pass


class NonFiniteLoss(NumericError):
    pass


class StepAfterDone(RfqmmError):
    pass


class ShapeMismatch(RfqmmError):
    pass


class ChecksumMismatch(RfqmmError):
    pass
