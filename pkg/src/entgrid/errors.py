"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Malformed input: bad file, bad structure, violated precondition."""


class NumericError(RuntimeError):
    """Numerical failure: divergence, non-finite gradients or losses."""
