"""Exception hierarchy shared by all sdlab modules."""


class SdlabError(Exception):
    """Base class for all sdlab errors."""


class ParameterError(SdlabError, ValueError):
    """Invalid argument: bad domain, wrong dimension, violated precondition."""


class NumericError(SdlabError, ArithmeticError):
    """Computation failed numerically: overflow, non-finite value, non-convergence."""


class DataError(SdlabError, ValueError):
    """Input data file is missing, malformed, or fails validation."""
