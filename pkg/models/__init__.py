"""
Models package: typed records, reports and errors.
"""
from .schemas import (
    FEATURE_GROUPS,
    FEATURE_NAMES,
    IMPUTED_COLUMNS,
    LABEL_COLUMN,
    PitchClass,
    ParsedChord,
    SongRecord,
    SplitIndices,
    FeatureVector,
    ForestParams,
    ImportanceEntry,
    EvalReport,
    RunConfig,
)
from .errors import (
    CifraError,
    MalformedChord,
    EmptySong,
    SchemaError,
    OrderError,
    DegenerateGenre,
    AllMissing,
    EmptyNode,
    DimensionMismatch,
    DegenerateInput,
    LengthMismatch,
    DegenerateKappa,
)

__all__ = [
    "FEATURE_GROUPS",
    "FEATURE_NAMES",
    "IMPUTED_COLUMNS",
    "LABEL_COLUMN",
    "PitchClass",
    "ParsedChord",
    "SongRecord",
    "SplitIndices",
    "FeatureVector",
    "ForestParams",
    "ImportanceEntry",
    "EvalReport",
    "RunConfig",
    "CifraError",
    "MalformedChord",
    "EmptySong",
    "SchemaError",
    "OrderError",
    "DegenerateGenre",
    "AllMissing",
    "EmptyNode",
    "DimensionMismatch",
    "DegenerateInput",
    "LengthMismatch",
    "DegenerateKappa",
]
