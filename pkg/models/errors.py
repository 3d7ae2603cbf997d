"""
Exception hierarchy for the cifra pipeline.

Every error names the module it came from so the CLI can report provenance.
"""
from typing import Optional


class CifraError(ValueError):
    """Base class for every data or protocol error raised by the pipeline."""

    module = "pipeline"

    def __init__(self, message: str, row: Optional[str] = None):
        self.row = row
        if row is not None:
            message = f"{message} (at {row})"
        super().__init__(message)


# === chord_parser ===

class MalformedChord(CifraError):
    """A chord or note symbol the grammar cannot read."""
    module = "chord_parser"

    def __init__(self, token: str, reason: str, row: Optional[str] = None):
        self.token = token
        self.reason = reason
        super().__init__(f"Malformed chord '{token}': {reason}", row=row)


# === features ===

class EmptySong(CifraError):
    module = "features"


# === dataset ===

class SchemaError(CifraError):
    module = "dataset"


class OrderError(CifraError):
    module = "dataset"


class DegenerateGenre(CifraError):
    module = "dataset"


class AllMissing(CifraError):
    module = "dataset"


# === forest ===

class EmptyNode(CifraError):
    module = "forest"


class DimensionMismatch(CifraError):
    module = "forest"


class DegenerateInput(UserWarning):
    """Training data with a single row or a single class; the forest is trivially pure."""


# === eval ===

class LengthMismatch(CifraError):
    module = "eval"


class DegenerateKappa(CifraError):
    module = "eval"
