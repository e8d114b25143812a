from __future__ import annotations


class QSubspaceError(Exception):
    """Base class; `code` is the machine-readable name printed on the diagnostic stream."""

    @property
    def code(self) -> str:
        return type(self).__name__


class InvalidPrime(QSubspaceError):
    pass


class FieldTooLarge(QSubspaceError):
    pass


class FieldMismatch(QSubspaceError):
    pass


class BadLength(QSubspaceError):
    pass


class AmbientMismatch(QSubspaceError):
    pass


class NotComplementary(QSubspaceError):
    pass


class DimMismatch(QSubspaceError):
    pass


class ShapeMismatch(QSubspaceError):
    pass


class EnumerationTooLarge(QSubspaceError):
    pass


class EmptyCode(QSubspaceError):
    pass


class DuplicateCodeword(QSubspaceError):
    def __init__(self, first: int, second: int) -> None:
        super().__init__(f"codewords {first} and {second} are identical")
        self.pair = (first, second)


class ParseError(QSubspaceError):
    def __init__(self, message: str, line: int | None = None) -> None:
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class NotPolynomialBacked(QSubspaceError):
    pass


class InvalidSpec(QSubspaceError):
    pass


class NoAnchor(QSubspaceError):
    pass


class BadSpecialSpace(QSubspaceError):
    pass


class ConstructionBug(QSubspaceError):
    pass


class NotSDisjoint(QSubspaceError):
    pass


class MissingBase(QSubspaceError):
    pass


class BadSeed(QSubspaceError):
    pass


class UnknownBound(QSubspaceError):
    pass
