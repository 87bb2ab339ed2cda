class UsageError(ValueError):
    """Invalid arguments or malformed input supplied by the caller."""


class NumericalError(ArithmeticError):
    """A numerical routine failed or produced non-finite values."""
