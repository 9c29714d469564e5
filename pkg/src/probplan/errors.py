"""Exception hierarchy shared by every probplan module."""


class ProbPlanError(Exception):
    """Base class for all library errors."""


class ParseError(ProbPlanError, ValueError):
    """Malformed input document.

    ``line`` and ``column`` are 1-based and may be ``None`` when the error
    is not tied to a position (e.g. an unknown reference found after the
    whole document was read).
    """

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class StructureError(ProbPlanError, ValueError):
    """An object was constructed with inconsistent structure."""


class CapExceeded(ProbPlanError):
    """A configurable resource cap was hit; the answer is indeterminate."""

    def __init__(self, what, limit):
        self.what = what
        self.limit = limit
        super().__init__(f"{what} exceeds cap of {limit}")


class UndefinedNewValue(ProbPlanError, KeyError):
    """A ``p:new`` test was evaluated before ``p`` received its new value."""

    def __str__(self):
        return self.args[0] if self.args else "undefined :new lookup"
