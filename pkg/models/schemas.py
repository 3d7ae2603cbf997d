"""
Pydantic schemas for the records, features and reports of the pipeline.
"""
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Optional, List, Dict, Tuple


# === Feature layout ===

GROUP_TRIADS = ('pct_sus', 'pct_7th', 'pct_min7', 'pct_minor', 'pct_dim', 'pct_aug')
GROUP_TETRADS = ('pct_4th', 'pct_6th', 'pct_9th', 'pct_maj7', 'pct_dim5', 'pct_aug5')
GROUP_TRANSITIONS = ('pct_trans_1', 'pct_trans_2', 'pct_trans_3')
GROUP_MISCELLANY = (
    'popularity',
    'total_chords',
    'year',
    'key_is_mode_chord',
    'pct_varying_bass',
    'mean_fifths_dist_to_C',
    'mean_semitone_dist_to_C',
    'mode_chord_count',
)

FEATURE_GROUPS: Dict[str, Tuple[str, ...]] = {
    'triads': GROUP_TRIADS,
    'tetrads': GROUP_TETRADS,
    'transitions': GROUP_TRANSITIONS,
    'miscellany': GROUP_MISCELLANY,
}

FEATURE_NAMES: Tuple[str, ...] = GROUP_TRIADS + GROUP_TETRADS + GROUP_TRANSITIONS + GROUP_MISCELLANY

# Columns that may arrive missing and are imputed from the train split
IMPUTED_COLUMNS = ('popularity', 'year')

LABEL_COLUMN = 'genre'


# === Chord Schemas ===

class PitchClass(BaseModel):
    """A semitone class (C=0 ... B=11) with its original spelling."""
    model_config = ConfigDict(frozen=True)

    index: int = Field(..., ge=0, le=11)
    spelled: str


class ParsedChord(BaseModel):
    """Structured decomposition of one cifra chord symbol."""
    model_config = ConfigDict(frozen=True)

    root: PitchClass
    minor_third: bool = False
    diminished: bool = False
    augmented: bool = False
    suspended: bool = False
    has_fourth: bool = False
    has_sixth: bool = False
    has_seventh: bool = False
    has_major_seventh: bool = False
    has_ninth: bool = False
    dim_fifth: bool = False
    aug_fifth: bool = False
    bass: Optional[PitchClass] = None
    raw: str = Field(..., min_length=1)
    # Text left over after the maximal parse (lenient mode only)
    unparsed: str = ""

    @model_validator(mode='after')
    def check_exclusive_flags(self):
        if self.diminished and self.augmented:
            raise ValueError("diminished and augmented are mutually exclusive")
        if self.has_seventh and self.has_major_seventh:
            raise ValueError("seventh and major seventh are mutually exclusive")
        return self

    @property
    def is_major(self) -> bool:
        return not (self.minor_third or self.diminished or self.augmented)

    @property
    def has_varying_bass(self) -> bool:
        return self.bass is not None and self.bass.index != self.root.index


# === Dataset Schemas ===

class SongRecord(BaseModel):
    """One song of the corpus, chords in sequence order."""
    song_id: str = Field(..., min_length=1)
    artist: str
    genre: str
    key: str
    chords: List[str]
    seq_nos: List[int] = Field(default_factory=list, description="Source seq_no of each chord, when loaded from a file")
    popularity: Optional[float] = None
    year: Optional[int] = None


class SplitIndices(BaseModel):
    """A genre-stratified train/test partition of song ids."""
    train_ids: List[str]
    test_ids: List[str]
    seed: int
    fraction: float = Field(..., gt=0.0, lt=1.0)

    @model_validator(mode='after')
    def check_disjoint(self):
        overlap = set(self.train_ids) & set(self.test_ids)
        if overlap:
            raise ValueError(f"train and test overlap on {len(overlap)} songs")
        return self


# === Feature Schemas ===

class FeatureVector(BaseModel):
    """The 23 per-song features plus the genre label."""

    # Triads and simple tetrads
    pct_sus: float = Field(..., ge=0.0, le=1.0)
    pct_7th: float = Field(..., ge=0.0, le=1.0)
    pct_min7: float = Field(..., ge=0.0, le=1.0)
    pct_minor: float = Field(..., ge=0.0, le=1.0)
    pct_dim: float = Field(..., ge=0.0, le=1.0)
    pct_aug: float = Field(..., ge=0.0, le=1.0)

    # Dissonant tetrads
    pct_4th: float = Field(..., ge=0.0, le=1.0)
    pct_6th: float = Field(..., ge=0.0, le=1.0)
    pct_9th: float = Field(..., ge=0.0, le=1.0)
    pct_maj7: float = Field(..., ge=0.0, le=1.0)
    pct_dim5: float = Field(..., ge=0.0, le=1.0)
    pct_aug5: float = Field(..., ge=0.0, le=1.0)

    # Main chord transitions
    pct_trans_1: float = Field(..., ge=0.0, le=1.0)
    pct_trans_2: float = Field(..., ge=0.0, le=1.0)
    pct_trans_3: float = Field(..., ge=0.0, le=1.0)

    # Miscellany
    popularity: Optional[float] = None
    total_chords: int = Field(..., ge=1)
    year: Optional[float] = None
    key_is_mode_chord: int = Field(..., ge=0, le=1)
    pct_varying_bass: float = Field(..., ge=0.0, le=1.0)
    mean_fifths_dist_to_C: float = Field(..., ge=0.0, le=6.0)
    mean_semitone_dist_to_C: float = Field(..., ge=0.0, le=6.0)
    mode_chord_count: int = Field(..., ge=1)

    genre: str

    @model_validator(mode='after')
    def check_counts(self):
        if self.mode_chord_count > self.total_chords:
            raise ValueError("mode_chord_count exceeds total_chords")
        return self

    def as_row(self, names: Tuple[str, ...] = FEATURE_NAMES) -> List[Optional[float]]:
        """Feature values in the given column order."""
        return [getattr(self, name) for name in names]


# === Forest Schemas ===

class ForestParams(BaseModel):
    """Hyperparameters of one random forest fit."""
    n_trees: int = Field(default=500, ge=1)
    mtry: Optional[int] = Field(default=None, ge=1)
    min_leaf_size: int = Field(default=1, ge=1)
    seed: int = Field(default=42, ge=0)
    bootstrap: bool = True
    n_jobs: int = Field(default=1, ge=1)


# === Evaluation Schemas ===

class ImportanceEntry(BaseModel):
    """Mean decrease in Gini impurity attributed to one feature."""
    feature: str
    importance: float


class EvalReport(BaseModel):
    """Goodness of fit of one nested model on the test split."""
    model_id: int = Field(..., ge=1, le=4)
    feature_names: List[str]
    n_test: int
    correct: int
    accuracy: float
    error_rate: float
    ci_low: float
    ci_high: float
    nir: float
    pvalue_vs_nir: float
    kappa_marginal: float
    kappa_nir: float
    genres: List[str]
    confusion_counts: List[List[int]]
    confusion: List[List[float]]
    zero_support: List[str] = []
    importance: List[ImportanceEntry]
    oob_accuracy: Optional[float] = None

    @model_validator(mode='after')
    def check_interval(self):
        if not self.ci_low <= self.accuracy <= self.ci_high:
            raise ValueError("accuracy outside its confidence interval")
        return self


# === CLI Schemas ===

class RunConfig(BaseModel):
    """Validated command-line configuration."""
    subcommand: str
    inputs: List[str] = []
    metadata_path: Optional[str] = None
    out: str
    seed: int = Field(default=42, ge=1)
    n_trees: int = Field(default=500, ge=1)
    mtry: Optional[int] = Field(default=None, ge=1)
    min_leaf_size: int = Field(default=1, ge=1)
    fraction: float = Field(default=0.7, gt=0.0, lt=1.0)
    strict: bool = False
    genres: List[str]
    n_jobs: int = Field(default=1, ge=1)

    @field_validator('genres')
    @classmethod
    def check_genres(cls, value: List[str]) -> List[str]:
        if not value:
            raise ValueError("genre label set is empty")
        if len(set(value)) != len(value):
            raise ValueError("genre label set has duplicates")
        return value
