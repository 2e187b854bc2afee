class BudgetExceeded(RuntimeError):
    """A computation would exceed its declared work or step budget."""


class PrecisionError(ArithmeticError):
    """Requested precision cannot be met with the available data."""
