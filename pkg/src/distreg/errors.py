"""Exception hierarchy shared by every module in :mod:`distreg`."""


class DistRegError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(DistRegError, ValueError):
    """Input points do not have the dimension the kernel or bag expects."""


class NonFiniteInputError(DistRegError, ValueError):
    """An input contained NaN or infinity."""


class DomainError(DistRegError, ValueError):
    """An input lies outside the region on which a kernel bound is certified."""


class NotNormalizedError(DistRegError, ValueError):
    """Probability weights are negative or do not sum to one."""


class CorruptGramError(DistRegError, ValueError):
    """Embedding inner products violate Cauchy-Schwarz beyond tolerance."""


class SolveError(DistRegError, ArithmeticError):
    """The regularized linear system could not be factorized.

    ``condition`` carries an estimate of the condition number of the
    system matrix at the last attempted jitter level.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ScheduleError(DistRegError, ValueError):
    """No regularization schedule is available for the requested rate row."""


class DataError(DistRegError, ValueError):
    """Malformed dataset or model file."""


class EmptyFileError(DataError):
    pass


class RaggedRowError(DataError):
    pass


class InconsistentLabelError(DataError):
    def __init__(self, bag_id, labels):
        super().__init__(f"bag {bag_id!r} has conflicting labels {sorted(labels)}")
        self.bag_id = bag_id
