import contextlib
import os

from .exceptions import BudgetExceeded

DEFAULT_BUDGET = 20_000_000
ENV_VAR = "PEBBLETEP_BUDGET"


_override = None


@contextlib.contextmanager
def budget_override(value):
    """Use ``value`` as the default cap inside the block."""
    global _override
    if value is not None and value <= 0:
        raise ValueError(f"budget must be positive, got {value}")
    saved, _override = _override, value
    try:
        yield
    finally:
        _override = saved


def default_budget():
    """Cap used by enumerations and searches; ``PEBBLETEP_BUDGET`` overrides it."""
    if _override is not None:
        return _override
    raw = os.environ.get(ENV_VAR)
    if raw:
        value = int(raw)
        if value <= 0:
            raise ValueError(f"{ENV_VAR} must be positive, got {raw!r}")
        return value
    return DEFAULT_BUDGET


def check_budget(what, needed, cap=None):
    cap = default_budget() if cap is None else cap
    if needed > cap:
        raise BudgetExceeded(what, needed, cap)
