import numpy as np


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class OracleConsistencyError(RuntimeError):
    """Raised when two independent forms of a reference value disagree."""


def require_finite(x, name="input"):
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} must be finite")
