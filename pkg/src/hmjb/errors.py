"""Exception and warning types raised across the package."""


class HMJBError(Exception):
    """Base class for all errors raised by :mod:`hmjb`."""


class OrderExceeded(HMJBError, ValueError):
    """A computation needs a moment of higher order than is available."""


class InvalidParam(HMJBError, ValueError):
    pass


class GrammarError(InvalidParam):
    """A model/family/test string does not follow the command-line grammar."""


class DegenerateSample(HMJBError, ValueError):
    """The sample has zero variance (or is too small to be tested)."""


class SingularCovariance(HMJBError, ValueError):
    """The 2x2 covariance of the (skewness-type, kurtosis-type) pair is singular."""


class NotSymmetric(HMJBError, ValueError):
    pass


class NoCdf(HMJBError, ValueError):
    pass


class NotSampleable(HMJBError, ValueError):
    pass


class InconsistentMoments(HMJBError, ValueError):
    """A variance came out clearly negative: the moment sequence is not valid."""


class UnknownTable(HMJBError, KeyError):
    pass


class EmptyFile(HMJBError, ValueError):
    pass


class ParseError(HMJBError, ValueError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class PluginVarianceWarning(UserWarning):
    """Emitted whenever the data-based (plug-in) variance estimate is used."""


class SmallSampleWarning(UserWarning):
    pass


class ReplicationError(HMJBError):
    """A single Monte Carlo replication failed; ``index`` identifies it."""

    def __init__(self, index: int, cause: Exception) -> None:
        super().__init__(f"replication {index} failed: {cause}")
        self.index = index
        self.cause = cause
