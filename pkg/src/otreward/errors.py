"""Exception types raised by the labeling pipeline."""


class OtRewardError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(OtRewardError):
    """Feature vectors or matrices have incompatible dimensions."""


class MissingActions(OtRewardError):
    """State-action features requested on a trajectory without actions."""


class TargetTooSmall(OtRewardError):
    """Padding target is shorter than the measure being padded."""


class MarginalMismatch(OtRewardError):
    """Transport marginals do not sum to one (or to each other)."""


class NegativeWeight(OtRewardError):
    """A marginal weight vector contains a negative entry."""


class NonFiniteCost(OtRewardError):
    """Cost matrix contains NaN or infinite entries."""


class NonFiniteInput(OtRewardError):
    """Reward vector handed to squashing contains NaN or infinite entries."""


class NonFiniteValue(OtRewardError):
    """Dataset file contains NaN or infinite numbers."""


class TooLarge(OtRewardError):
    """Instance exceeds the exact LP oracle's size limit."""


class EmptyExpertSet(OtRewardError):
    """No expert demonstrations were provided."""


class EmptyDataset(OtRewardError):
    """Operation requires at least one episode."""


class DegenerateReturnRange(OtRewardError):
    """All episodic returns are equal; range rescaling is undefined."""


class ExpertRewardsMissing(OtRewardError):
    """UDS baseline requires ground-truth rewards on expert episodes."""


class RewardsMissing(OtRewardError):
    """Episodic-return selection requires rewards on every episode."""


class IdMismatch(OtRewardError):
    """Episode ids do not line up across the files being compared."""


class InvalidCounts(OtRewardError):
    """Dataset generation called with invalid episode counts."""


class ParseError(OtRewardError):
    """A dataset file record could not be parsed.

    Carries the 1-based line number of the offending record.
    """

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class DataIoError(OtRewardError):
    """Reading or writing a dataset file failed at the OS level."""
