"""Exception hierarchy shared by every bcom module."""

from __future__ import annotations


class BcomError(Exception):
    """Base class for all bcom errors."""


# stream core


class MissingField(BcomError, KeyError):
    def __init__(self, stage: str, field: str) -> None:
        self.stage = stage
        self.field = field
        super().__init__(stage, field)

    def __str__(self) -> str:
        return f"stage {self.stage!r} requires field {self.field!r}, which no upstream stage produced"


class NonFiniteValue(BcomError, ValueError):
    def __init__(self, stage: str, timestamp, field: str | None = None) -> None:
        self.stage = stage
        self.timestamp = timestamp
        self.field = field
        super().__init__(stage, timestamp, field)

    def __str__(self) -> str:
        where = f" in field {self.field!r}" if self.field else ""
        return f"stage {self.stage!r} emitted a non-finite value{where} at {self.timestamp}"


class FieldCollision(BcomError, ValueError):
    """A stage tried to overwrite a field produced upstream."""


class NotASource(BcomError, TypeError):
    """A pipeline was composed with something that cannot emit events."""


# generators


class InvalidRange(BcomError, ValueError):
    pass


class InvalidParameter(BcomError, ValueError):
    pass


class DuplicateOutputField(BcomError, ValueError):
    pass


# data ingest


class SymbolNotFound(BcomError, LookupError):
    pass


class ColumnNotFound(BcomError, LookupError):
    def __init__(self, name: str, source: str = "") -> None:
        self.name = name
        self.source = source
        super().__init__(name, source)

    def __str__(self) -> str:
        return f"column {self.name!r} not found in {self.source or 'input'}"


class EmptyRange(BcomError, ValueError):
    pass


class MissingTickerColumn(BcomError, LookupError):
    pass


class NetworkError(BcomError, OSError):
    pass


class MalformedCsv(BcomError, ValueError):
    pass


# indicators


class InvalidWindow(BcomError, ValueError):
    pass


class InvalidAlpha(BcomError, ValueError):
    pass


# trading


class InvalidAlphaOrdering(BcomError, ValueError):
    pass


class NonPositivePrice(BcomError, ValueError):
    def __init__(self, stage: str, timestamp, price: float) -> None:
        self.stage = stage
        self.timestamp = timestamp
        self.price = price
        super().__init__(stage, timestamp, price)

    def __str__(self) -> str:
        return f"stage {self.stage!r} received non-positive price {self.price!r} at {self.timestamp}"


# simulation


class InvalidBounds(BcomError, ValueError):
    pass


class DegenerateInput(BcomError, ValueError):
    pass


class EmptyInput(BcomError, ValueError):
    pass


# provenance


class InvalidStep(BcomError, ValueError):
    pass


class UnreadableInput(BcomError, OSError):
    pass


class MalformedRecord(BcomError, ValueError):
    def __init__(self, message: str, position: int | None = None, line: int | None = None,
                 column: int | None = None) -> None:
        self.position = position
        self.line = line
        self.column = column
        super().__init__(message)

    def __str__(self) -> str:
        msg = self.args[0]
        if self.line is not None:
            return f"{msg} (line {self.line}, column {self.column}, char {self.position})"
        return msg


# pipeline DSL


class PipelineSyntaxError(BcomError, ValueError):
    def __init__(self, line: int, col: int, expected: str, found: str = "") -> None:
        self.line = line
        self.col = col
        self.expected = expected
        self.found = found
        super().__init__(line, col, expected, found)

    def __str__(self) -> str:
        found = f", found {self.found!r}" if self.found else ""
        return f"syntax error at line {self.line}, column {self.col}: expected {self.expected}{found}"


class UnknownProcessor(BcomError, LookupError):
    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(name)

    def __str__(self) -> str:
        return f"unknown processor {self.name!r}"


class BadArgument(BcomError, ValueError):
    def __init__(self, processor: str, arg: str, reason: str = "") -> None:
        self.processor = processor
        self.arg = arg
        self.reason = reason
        super().__init__(processor, arg, reason)

    def __str__(self) -> str:
        tail = f": {self.reason}" if self.reason else ""
        return f"bad argument {self.arg!r} for {self.processor}{tail}"
