"""Exception types raised across the package."""


class InvalidInput(ValueError):
    """Malformed arguments: empty sets, dimension mismatch, non-finite data."""


class NoNeighbors(ValueError):
    """A score was requested at a point with no labeled neighbor in its ball."""


class DegenerateParameters(ValueError):
    """Generator parameters make rejection sampling impractical."""


class EmptyRegion(ValueError):
    """A diagnostic probe set ended up empty."""


class ParseError(ValueError):
    """A CSV row could not be parsed. ``row`` is 1-based and counts the header."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
