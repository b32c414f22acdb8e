"""Numerical laboratory for the circle method on one diagonal form of degree k and one form of degree k-1."""

__version__ = "0.1.0"

from .budget import BudgetExceeded, InvariantViolation
from .forms import SystemSpec, FormSpecError, load_system, make_system, parse_system

__all__ = [
    "__version__",
    "BudgetExceeded",
    "InvariantViolation",
    "SystemSpec",
    "FormSpecError",
    "load_system",
    "make_system",
    "parse_system",
]
