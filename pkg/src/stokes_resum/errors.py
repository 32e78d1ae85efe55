"""Exception hierarchy shared by all modules."""


class StokesResumError(Exception):
    """Base class for mathematical failures (CLI exit status 3)."""


class VariableMismatchError(StokesResumError, ValueError):
    pass


class WindowError(StokesResumError):
    """A truncation window is empty, unbounded, or too small for the request."""


class NotInvertibleError(StokesResumError, ZeroDivisionError):
    pass


class DomainError(StokesResumError, ValueError):
    """A point or series lies outside the domain of a map."""


class NotComposableError(StokesResumError, ValueError):
    pass


class EtaleError(StokesResumError, ValueError):
    pass


class NotCompanionError(StokesResumError, ValueError):
    pass


class ResonanceError(StokesResumError):
    def __init__(self, order, detail=""):
        self.order = order
        msg = f"resonance at order {order}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class LeadingTermMismatchError(StokesResumError):
    pass


class CancellationError(StokesResumError):
    """A coefficient that must vanish in a resummed series does not."""

    def __init__(self, exponent, coefficient, entry=None):
        self.exponent = exponent
        self.coefficient = coefficient
        self.entry = entry
        where = f" in entry {entry}" if entry is not None else ""
        super().__init__(f"nonzero coefficient {coefficient} at exponent {exponent}{where}")


class ToleranceError(StokesResumError):
    """A numeric computation could not reach the requested accuracy (exit 4)."""
