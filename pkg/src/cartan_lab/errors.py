"""Shared error types."""


class InputError(ValueError):
    """Malformed or inconsistent user input (bad JSON, invalid tables, wrong ring)."""


class GuardExceeded(RuntimeError):
    """A configured size guard was hit before the computation started.

    Carries the measured size and the limit so reports can show both.
    """

    def __init__(self, what: str, measured, limit):
        super().__init__(f"{what}: measured {measured} exceeds guard {limit}")
        self.what = what
        self.measured = measured
        self.limit = limit


class InternalCheckError(AssertionError):
    """An internal cross-check failed; indicates a bug, not bad input."""
