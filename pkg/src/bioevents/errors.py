"""Exception types raised across the package.

Parsing errors carry enough context (file, line) to locate the offending
input; model errors report the shapes involved.
"""


class BioeventsError(Exception):
    """Base class for all package-specific errors."""


class MalformedLine(BioeventsError):
    """A standoff annotation line does not follow the line grammar."""

    def __init__(self, message, filename=None, lineno=None):
        self.filename = filename
        self.lineno = lineno
        if filename is not None:
            message = f"{filename}:{lineno}: {message}"
        super().__init__(message)


class SpanMismatch(BioeventsError):
    """The surface string of a mention disagrees with the text slice."""


class DanglingRef(BioeventsError):
    """An annotation references an id that does not exist in the document."""


class UnknownType(BioeventsError):
    """An event type string outside the closed event-type set."""


class OverlappingEntities(BioeventsError):
    """Two entity mentions overlap, so they cannot be masked one-per-token."""


class LabelCollision(BioeventsError):
    """One token demands two different labels in the same layer (strict mode)."""


class UnknownLabel(BioeventsError):
    """A label string outside the configured label space."""


class SequenceTooLong(BioeventsError):
    """Token sequence exceeds the encoder's maximum length."""


class ShapeMismatch(BioeventsError):
    """Tensor shapes are inconsistent with the model configuration."""


class LengthMismatch(BioeventsError):
    """Parallel sequences (labels vs. probability rows) differ in length."""


class DocIdMismatch(BioeventsError):
    """Predicted and gold document collections do not cover the same ids."""


class TrainingDiverged(BioeventsError):
    """Training loss became non-finite."""


class UsageError(BioeventsError):
    """Bad command-line usage (maps to exit code 1)."""
