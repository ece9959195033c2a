"""Exception hierarchy.

Every error carries an ``exit_code`` used by the CLI: 2 for bad input,
3 for numeric failures, 4 for scale limits.
"""


class WellRoundError(Exception):
    exit_code = 2


class InputError(WellRoundError):
    exit_code = 2


class NumericError(WellRoundError):
    exit_code = 3


class ScaleError(WellRoundError):
    exit_code = 4


class DimensionMismatch(InputError):
    pass


class NonFiniteEntries(InputError):
    pass


class SingularMatrix(NumericError):
    pass


class OutOfConvergenceRegion(NumericError):
    pass


class UnknownGroup(InputError):
    pass


class NoWindow(InputError):
    pass


class RankTooLarge(ScaleError):
    pass


class SingularBlock(NumericError):
    pass


class EpsilonTooLarge(InputError):
    pass


class WindowTooSmall(InputError):
    pass


class DegenerateMinus(NumericError):
    pass


class NonpositiveInput(InputError):
    pass


class EmptyIntersection(InputError):
    pass


class NonpositiveF(InputError):
    pass


class EmptyList(InputError):
    pass


class GroupMismatch(InputError):
    pass


class ChartOverflow(NumericError):
    pass


class ParameterOutOfRange(InputError):
    pass


class NotStarShaped(NumericError):
    pass


class ScaleTooLarge(ScaleError):
    pass


class ExactModeUnavailable(InputError):
    pass
