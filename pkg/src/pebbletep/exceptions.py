class PebbleTepError(Exception):
    """Base class for all errors raised by this package."""


class BudgetExceeded(PebbleTepError):
    """A search or enumeration would exceed its configured cap."""

    def __init__(self, what, needed, cap):
        self.what = what
        self.needed = needed
        self.cap = cap
        super().__init__(f"{what}: {needed} exceeds budget {cap}")


class IllegalMove(PebbleTepError):
    pass


class InvalidSequence(PebbleTepError):
    """Raised by the sequence validator; ``step`` is the offending move index (or None)."""

    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message if step is None else f"step {step}: {message}")


class MalformedProgram(PebbleTepError):
    pass


class ParseError(PebbleTepError):
    pass


class CompileError(PebbleTepError):
    pass


class AnalysisError(PebbleTepError):
    pass
