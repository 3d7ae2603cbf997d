"""
Utility helper functions for the cifra pipeline.
"""
import hashlib
import math
import os
from typing import Any, Optional


def derive_seed(root_seed: int, label: str) -> int:
    """
    Derive a module-level seed from the single run seed.

    Args:
        root_seed: The seed given on the command line
        label: Name of the consumer (e.g. "split", "forest")

    Returns:
        A 32-bit seed that depends only on (root_seed, label)
    """
    digest = hashlib.sha256(f"{root_seed}:{label}".encode('utf-8')).digest()
    return int.from_bytes(digest[:4], 'big')


def ensure_dir(path: str) -> str:
    """Create a directory (and parents) if needed and return it."""
    os.makedirs(path, exist_ok=True)
    return path


def ensure_parent_dir(filepath: str) -> str:
    """Create the parent directory of a file path if needed and return the path."""
    parent = os.path.dirname(os.path.abspath(filepath))
    os.makedirs(parent, exist_ok=True)
    return filepath


def is_missing(value: Any) -> bool:
    """True for None, NaN and blank strings."""
    if value is None:
        return True
    if isinstance(value, float) and math.isnan(value):
        return True
    if isinstance(value, str) and not value.strip():
        return True
    return False


def parse_optional_float(value: Any) -> Optional[float]:
    """
    Parse a CSV cell as a float, treating blanks as missing.

    Raises:
        ValueError: If the cell is non-blank and not a number
    """
    if is_missing(value):
        return None
    return float(value)


def parse_optional_int(value: Any) -> Optional[int]:
    """Parse a CSV cell as an integer year, tolerating "1972.0"."""
    number = parse_optional_float(value)
    if number is None:
        return None
    if number != int(number):
        raise ValueError(f"Not an integer: {value!r}")
    return int(number)


def format_ratio(value: float, digits: int = 2) -> str:
    """Display rounding used by the confusion-matrix CSVs (e.g. 0.8912 -> "0.89")."""
    return f"{value:.{digits}f}"


def resolve_jobs(n_jobs: Optional[int], default: int = 1) -> int:
    """Clamp a worker count to at least one thread."""
    if n_jobs is None:
        n_jobs = default
    return max(1, int(n_jobs))
