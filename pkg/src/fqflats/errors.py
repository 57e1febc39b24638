"""Errors raised by the library; the CLI maps them to exit code 2."""


class FqFlatsError(ValueError):
    """Base class for parameter and input errors"""


class OrderNotPrimePower(FqFlatsError):
    pass


class EvenCharacteristic(FqFlatsError):
    pass


class UnsupportedField(FqFlatsError):
    pass


class DivisionByZero(FqFlatsError, ZeroDivisionError):
    pass


class FieldElementError(FqFlatsError):
    pass


class DimensionMismatch(FqFlatsError):
    pass


class DegenerateSpan(FqFlatsError):
    pass


class InvalidDimension(FqFlatsError):
    pass


class ParameterMismatch(FqFlatsError):
    pass


class IdenticalFlats(FqFlatsError):
    pass


class InvalidParameters(FqFlatsError):
    pass


class TooLarge(FqFlatsError):
    pass


class NotSymmetric(FqFlatsError):
    pass


class BadSubset(FqFlatsError):
    pass


class FlatFormatError(FqFlatsError):
    pass


class InvariantViolation(RuntimeError):
    """A structure built by the library broke one of its own invariants"""
