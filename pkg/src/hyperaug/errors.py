"""Exception types shared across the package."""


class HyperAugError(Exception):
    """Base class for all package errors."""


class ShapeError(HyperAugError):
    """Tensor/matrix dimension mismatch."""


class StateError(HyperAugError):
    """Operation called in an invalid state (e.g. backward before forward)."""


class NumericError(HyperAugError):
    """Non-finite values where finite ones are required."""


class ParseError(HyperAugError):
    """Malformed input file."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class DuplicateError(HyperAugError):
    """Duplicate token or pair where uniqueness is required."""


class LookupError_(HyperAugError):
    """Unknown token or node."""


class CycleError(HyperAugError):
    """Cycle in a graph required to be acyclic."""

    def __init__(self, message, cycle=None):
        super().__init__(message)
        self.cycle = cycle or []


class DataError(HyperAugError):
    """Dataset unusable for the requested operation (degenerate, empty, too small)."""


class DegenerateInputError(HyperAugError):
    """Input is valid in shape but degenerate in value (e.g. zero query vector)."""


class ConfigError(HyperAugError):
    """Invalid or inconsistent configuration."""
