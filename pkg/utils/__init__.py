"""
Utilities package for the cifra pipeline.
"""
from .helpers import (
    derive_seed,
    ensure_dir,
    ensure_parent_dir,
    is_missing,
    parse_optional_float,
    parse_optional_int,
    format_ratio,
    resolve_jobs,
)
from .logger import setup_logging

__all__ = [
    "derive_seed",
    "ensure_dir",
    "ensure_parent_dir",
    "is_missing",
    "parse_optional_float",
    "parse_optional_int",
    "format_ratio",
    "resolve_jobs",
    "setup_logging",
]
