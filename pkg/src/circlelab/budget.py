"""Work budgets shared by every enumerating routine.

The default cap can be overridden with the ``CIRCLELAB_BUDGET`` environment
variable (an integer number of elementary evaluations).
"""

from __future__ import annotations

import os

DEFAULT_BUDGET = 10**8
ENV_VAR = "CIRCLELAB_BUDGET"


class BudgetExceeded(RuntimeError):
    """Raised when a computation would exceed its configured work cap."""

    def __init__(self, what: str, needed: int, cap: int):
        super().__init__(f"{what}: needs {needed} units, budget is {cap}")
        self.what = what
        self.needed = needed
        self.cap = cap


class InvariantViolation(RuntimeError):
    """A numerical cross-check failed (signals a bug, not a bad input)."""


def default_budget() -> int:
    raw = os.environ.get(ENV_VAR)
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{ENV_VAR} must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise ValueError(f"{ENV_VAR} must be positive, got {value}")
    return value


def check(what: str, needed: int, cap: int | None) -> None:
    if cap is None:
        cap = default_budget()
    if needed > cap:
        raise BudgetExceeded(what, needed, cap)
