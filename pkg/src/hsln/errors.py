"""Exception types shared across the package."""


class HSLNError(Exception):
    """Base class for all package errors."""


class DimensionError(HSLNError, ValueError):
    """Operand shapes are incompatible."""


class NumericalDomainError(HSLNError, ArithmeticError):
    """A numerical function was evaluated outside its domain (or overflowed)."""


class ContractError(HSLNError, ValueError):
    """A precondition of an operation was violated."""


class ParseError(HSLNError, ValueError):
    """Malformed input file. ``lineno`` is 1-based when known."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class LabelError(HSLNError, ValueError):
    """Unknown label, or label sets that do not agree."""


class EmptyCorpusError(HSLNError, ValueError):
    """A corpus file or object contains no abstracts."""


class FormatError(HSLNError, ValueError):
    """An embedding file header disagrees with the requested configuration."""


class CorruptCheckpointError(HSLNError, ValueError):
    """A checkpoint file failed validation on load."""


class TrainingError(HSLNError, RuntimeError):
    """Training produced non-finite values."""
