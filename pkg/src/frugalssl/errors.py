"""Exception types shared across the toolkit."""


class FrugalSSLError(Exception):
    """Base class for all toolkit errors."""


class DataError(FrugalSSLError):
    """Raised for unreadable, malformed, or inconsistent input data."""


class StratificationError(FrugalSSLError):
    """Raised when a stratified partition cannot be constructed."""


class BudgetTooSmallError(FrugalSSLError):
    """Raised when a label budget rounds down to zero instances."""


class BudgetViolationError(FrugalSSLError):
    """Raised when a treatment reads labels outside its allowed budget."""


class TrainingError(FrugalSSLError):
    """Raised when a learner cannot be trained (e.g. single-class input)."""


class DegenerateClafiError(FrugalSSLError):
    """Raised when no feature subset keeps both pseudo-classes alive."""


class TuningFailedError(FrugalSSLError):
    """Raised when every grid configuration is degenerate."""


class GroupingError(FrugalSSLError):
    """Raised when a fairness group is empty."""


class SampleTooSmallError(FrugalSSLError):
    """Raised when an effect size is requested for samples below size 2."""
