"""
Feature extraction: one song's chord sequence and metadata reduced to the
23 features of the four thematic groups.
"""
import logging
from collections import Counter
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from models.errors import EmptySong, MalformedChord, SchemaError
from models.schemas import (
    FEATURE_NAMES,
    LABEL_COLUMN,
    FeatureVector,
    ParsedChord,
    SongRecord,
)
from services.chord_parser import ChordParser, indicator_row, parse_chord
from services.music_theory import C_ROOT, fifths_distance, semitone_distance

logger = logging.getLogger(__name__)

# indicator_row position of each group 1-2 percentage
_INDICATOR_FEATURES = (
    'pct_sus',
    'pct_7th',
    'pct_min7',
    'pct_minor',
    'pct_dim',
    'pct_aug',
    'pct_4th',
    'pct_6th',
    'pct_9th',
    'pct_maj7',
    'pct_dim5',
    'pct_aug5',
)


def transition_percentages(chords: Sequence[ParsedChord]) -> Tuple[float, float, float]:
    """
    Shares of the three most common chord transitions.

    Transitions are the n-1 ordered bigrams of consecutive raw tokens,
    self-transitions included. Ties rank lexicographically on token text.

    Args:
        chords: Parsed chords in sequence order

    Returns:
        (p1, p2, p3), zero-padded when fewer than three distinct bigrams exist
    """
    n = len(chords)
    if n < 2:
        return (0.0, 0.0, 0.0)

    counts = Counter((a.raw, b.raw) for a, b in zip(chords, chords[1:]))
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    top = [count / (n - 1) for _, count in ranked[:3]]
    top += [0.0] * (3 - len(top))
    return top[0], top[1], top[2]


def mode_chord(chords: Sequence[ParsedChord]) -> Tuple[ParsedChord, int]:
    """
    Most frequent raw token of the song; ties go to the earliest occurrence.

    Returns:
        Tuple of (first chord carrying that token, its count)
    """
    counts = Counter(chord.raw for chord in chords)
    best_chord, best_count = None, 0
    for chord in chords:
        if counts[chord.raw] > best_count:
            best_chord, best_count = chord, counts[chord.raw]
    return best_chord, best_count


def key_match_indicator(song_key: str, chords: Sequence[ParsedChord], strict: bool = False) -> int:
    """
    1 if the song's declared key matches its most common chord.

    A match means same root pitch class and same minor/major polarity.

    Args:
        song_key: Declared key as a chord or note symbol ("C", "Am")
        chords: Parsed chords in sequence order
        strict: Propagate key parse errors instead of returning 0

    Raises:
        MalformedChord: Strict mode, when the key cannot be parsed
    """
    try:
        key = parse_chord(song_key, strict=strict)
    except MalformedChord:
        if strict:
            raise
        logger.warning(f"⚠️ Unreadable key '{song_key}', key_is_mode_chord set to 0")
        return 0

    if not chords:
        return 0

    top, _ = mode_chord(chords)
    same_root = top.root.index == key.root.index
    same_polarity = top.minor_third == key.minor_third
    return int(same_root and same_polarity)


class FeatureExtractor:
    """Service that turns SongRecords into FeatureVectors."""

    def __init__(self, parser: Optional[ChordParser] = None):
        """
        Initialize the extractor.

        Args:
            parser: Chord parser carrying the strict/lenient policy (lenient by default)
        """
        self.parser = parser or ChordParser(strict=False)
        self.excluded_songs: List[str] = []

    def parse_song(self, song: SongRecord) -> List[ParsedChord]:
        """Parse a song's tokens, dropping malformed ones in lenient mode."""
        chords = []
        for position, token in enumerate(song.chords, 1):
            chord = self.parser.parse(token, row=f"song {song.song_id}, chord {position}")
            if chord is not None:
                chords.append(chord)
        return chords

    def featurize(self, song: SongRecord) -> FeatureVector:
        """
        Compute the feature vector of one song.

        Args:
            song: The song record

        Returns:
            FeatureVector with groups 1-4 and the genre label

        Raises:
            EmptySong: If no chord of the song could be parsed
            MalformedChord: Strict mode only
        """
        chords = self.parse_song(song)
        if not chords:
            raise EmptySong(f"Song '{song.song_id}' has no parseable chords", row=f"song {song.song_id}")

        n = len(chords)
        indicators = np.array([indicator_row(chord) for chord in chords], dtype=np.int64)
        shares = indicators.sum(axis=0) / n

        p1, p2, p3 = transition_percentages(chords)
        _, mode_count = mode_chord(chords)

        fifths = sum(fifths_distance(chord.root, C_ROOT) for chord in chords)
        semitones = sum(semitone_distance(chord.root, C_ROOT) for chord in chords)
        varying_bass = sum(1 for chord in chords if chord.has_varying_bass)

        values = {name: float(share) for name, share in zip(_INDICATOR_FEATURES, shares)}
        values.update(
            pct_trans_1=p1,
            pct_trans_2=p2,
            pct_trans_3=p3,
            popularity=song.popularity,
            total_chords=n,
            year=float(song.year) if song.year is not None else None,
            key_is_mode_chord=key_match_indicator(song.key, chords, strict=self.parser.strict),
            pct_varying_bass=varying_bass / n,
            mean_fifths_dist_to_C=fifths / n,
            mean_semitone_dist_to_C=semitones / n,
            mode_chord_count=mode_count,
        )
        return FeatureVector(genre=song.genre, **values)

    def build_table(self, songs: Iterable[SongRecord]) -> pd.DataFrame:
        """
        Featurize a corpus into the flat feature table.

        Songs without parseable chords are excluded and counted.

        Returns:
            DataFrame indexed by song_id with the 23 features and the genre
        """
        rows, index = [], []
        self.excluded_songs = []

        for song in songs:
            try:
                vector = self.featurize(song)
            except EmptySong:
                self.excluded_songs.append(song.song_id)
                continue
            rows.append(vector.as_row() + [vector.genre])
            index.append(song.song_id)

        if self.excluded_songs:
            logger.warning(f"⚠️ {len(self.excluded_songs)} songs excluded (no parseable chords)")
        self.parser.log_summary()
        logger.info(f"✅ Feature table built: {len(rows)} songs x {len(FEATURE_NAMES)} features")

        table = pd.DataFrame(rows, columns=list(FEATURE_NAMES) + [LABEL_COLUMN], index=pd.Index(index, name='song_id'))
        return _coerce_feature_types(table)


def featurize_song(song: SongRecord, parser: Optional[ChordParser] = None) -> FeatureVector:
    """Functional entry point to FeatureExtractor.featurize."""
    return FeatureExtractor(parser).featurize(song)


def build_feature_table(songs: Iterable[SongRecord], extractor: Optional[FeatureExtractor] = None) -> pd.DataFrame:
    """Functional entry point to FeatureExtractor.build_table."""
    return (extractor or FeatureExtractor()).build_table(songs)


def _coerce_feature_types(table: pd.DataFrame) -> pd.DataFrame:
    for name in FEATURE_NAMES:
        table[name] = pd.to_numeric(table[name], errors='raise').astype(float)
    table[LABEL_COLUMN] = table[LABEL_COLUMN].astype(str)
    return table


def save_feature_table(table: pd.DataFrame, path: str) -> None:
    """Write the feature table; missing values become empty fields."""
    table.to_csv(path, index=True, index_label='song_id', na_rep='', encoding='utf-8')


def load_feature_table(path: str) -> pd.DataFrame:
    """
    Read a feature table written by save_feature_table.

    Raises:
        SchemaError: If the header is not song_id + 23 features + genre
    """
    table = pd.read_csv(
        path,
        dtype={'song_id': str, LABEL_COLUMN: str},
        keep_default_na=False,
        na_values=[''],
        float_precision='round_trip',
        encoding='utf-8',
    )
    expected = ['song_id'] + list(FEATURE_NAMES) + [LABEL_COLUMN]
    if list(table.columns) != expected:
        missing = sorted(set(expected) - set(table.columns))
        raise SchemaError(f"Feature table {path} has an unexpected header (missing: {missing or 'none'})")
    return _coerce_feature_types(table.set_index('song_id'))
