"""Power residues, character sums and sparse orbits of rigid systems."""

from .errors import BudgetExceeded, PrecisionError

__version__ = "0.1.0"
