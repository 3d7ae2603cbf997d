"""
Corpus ingestion, metadata join, genre-stratified split and train-only
median imputation.
"""
import logging
import math
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from models.errors import AllMissing, DegenerateGenre, OrderError, SchemaError
from models.schemas import IMPUTED_COLUMNS, LABEL_COLUMN, SongRecord, SplitIndices
from utils.helpers import derive_seed, parse_optional_float, parse_optional_int

logger = logging.getLogger(__name__)

CHORD_COLUMNS = ('song_id', 'artist', 'genre', 'key', 'chord', 'seq_no')
METADATA_COLUMNS = ('song_id', 'popularity', 'year')
MANIFEST_COLUMNS = ('song_id', 'genre', 'partition', 'seed', 'fraction')


def _read_text_csv(path: str, columns: Iterable[str] = ()) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    except pd.errors.EmptyDataError:
        # zero-byte file: an empty corpus
        return pd.DataFrame(columns=list(columns), dtype=str)


def _require_columns(frame: pd.DataFrame, required: Iterable[str], path: str) -> None:
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}", row="header")


def load_chords_csv(path: str, genres: Optional[Iterable[str]] = None) -> List[SongRecord]:
    """
    Load the long-format chords file (one row per chord occurrence).

    Args:
        path: CSV with columns song_id, artist, genre, key, chord, seq_no
        genres: Allowed genre labels; None accepts any label

    Returns:
        SongRecords in order of first appearance, chords ordered by seq_no

    Raises:
        SchemaError: Bad header, non-integer seq_no or genre outside the label set
        OrderError: Duplicate (song_id, seq_no)
    """
    logger.info(f"📂 Loading chords from {path}")
    frame = _read_text_csv(path, CHORD_COLUMNS)
    _require_columns(frame, CHORD_COLUMNS, path)

    if frame.empty:
        logger.info("✅ Chords file is empty")
        return []

    seq_numbers = []
    for line, value in enumerate(frame['seq_no'], 2):
        try:
            seq_numbers.append(int(value))
        except ValueError:
            raise SchemaError(f"{path}: seq_no '{value}' is not an integer", row=f"line {line}")
    frame = frame.assign(seq_no=seq_numbers, chord=frame['chord'].str.strip())

    duplicated = frame.duplicated(['song_id', 'seq_no'], keep='first')
    if duplicated.any():
        line = int(np.flatnonzero(duplicated.to_numpy())[0]) + 2
        first = frame[duplicated].iloc[0]
        raise OrderError(
            f"{path}: duplicate seq_no {first['seq_no']} for song '{first['song_id']}'",
            row=f"line {line}",
        )

    allowed = set(genres) if genres is not None else None
    if allowed is not None:
        unknown = sorted(set(frame['genre']) - allowed)
        if unknown:
            raise SchemaError(f"{path}: genre(s) outside the label set: {', '.join(unknown)}")

    songs = []
    for song_id, rows in frame.groupby('song_id', sort=False):
        rows = rows.sort_values('seq_no', kind='stable')
        first = rows.iloc[0]
        try:
            songs.append(SongRecord(
                song_id=str(song_id),
                artist=first['artist'],
                genre=first['genre'],
                key=first['key'],
                chords=rows['chord'].tolist(),
                seq_nos=rows['seq_no'].tolist(),
            ))
        except ValidationError as e:
            line = int(rows.index.min()) + 2
            fields = ', '.join(str(error['loc'][0]) for error in e.errors())
            raise SchemaError(f"{path}: invalid song record (bad {fields})", row=f"line {line}")

    logger.info(f"✅ Loaded {len(songs)} songs ({len(frame)} chord rows)")
    return songs


def join_metadata(songs: List[SongRecord], metadata_csv: str) -> List[SongRecord]:
    """
    Left-join popularity and release year onto the songs.

    Args:
        songs: Songs from load_chords_csv
        metadata_csv: CSV with columns song_id, popularity, year

    Returns:
        New SongRecords; unmatched songs keep missing popularity/year

    Raises:
        SchemaError: Bad header, duplicate song_id or unreadable values
    """
    frame = _read_text_csv(metadata_csv)
    _require_columns(frame, METADATA_COLUMNS, metadata_csv)

    duplicated = frame['song_id'].duplicated()
    if duplicated.any():
        line = int(np.flatnonzero(duplicated.to_numpy())[0]) + 2
        raise SchemaError(f"{metadata_csv}: duplicate song_id '{frame['song_id'][duplicated].iloc[0]}'", row=f"line {line}")

    lookup: Dict[str, Tuple[Optional[float], Optional[int]]] = {}
    for line, (song_id, popularity, year) in enumerate(
        zip(frame['song_id'], frame['popularity'], frame['year']), 2
    ):
        try:
            lookup[song_id] = (parse_optional_float(popularity), parse_optional_int(year))
        except ValueError as e:
            raise SchemaError(f"{metadata_csv}: {e}", row=f"line {line}")

    joined = []
    matched = 0
    for song in songs:
        if song.song_id in lookup:
            popularity, year = lookup[song.song_id]
            joined.append(song.model_copy(update={'popularity': popularity, 'year': year}))
            matched += 1
        else:
            joined.append(song)

    coverage = matched / len(songs) if songs else 0.0
    logger.info(f"🔗 Metadata joined for {matched}/{len(songs)} songs ({coverage:.1%})")
    return joined


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def stratified_split(feature_table: pd.DataFrame, fraction: float = 0.7, seed: int = 42) -> SplitIndices:
    """
    Genre-balanced train/test partition.

    Within each genre, round-half-up(fraction * n_g) songs (clamped so both
    sides are non-empty) go to train through a shuffle seeded by (seed, genre).
    The result does not depend on the row order of the table.

    Args:
        feature_table: Table indexed by song_id with a genre column
        fraction: Train share, in (0, 1)
        seed: Split seed

    Returns:
        SplitIndices with sorted id lists

    Raises:
        ValueError: fraction outside (0, 1)
        DegenerateGenre: A genre with fewer than two songs
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")

    labels = feature_table[LABEL_COLUMN]
    train_ids: List[str] = []
    test_ids: List[str] = []

    for genre in sorted(labels.unique()):
        ids = sorted(str(song_id) for song_id in labels.index[labels == genre])
        n = len(ids)
        if n < 2:
            raise DegenerateGenre(f"Genre '{genre}' has {n} song(s); at least 2 are needed to split")

        k = min(max(_round_half_up(fraction * n), 1), n - 1)
        rng = np.random.default_rng(derive_seed(seed, f"split:{genre}"))
        order = rng.permutation(n)
        train_ids.extend(ids[i] for i in order[:k])
        test_ids.extend(ids[i] for i in order[k:])

    return SplitIndices(
        train_ids=sorted(train_ids),
        test_ids=sorted(test_ids),
        seed=seed,
        fraction=fraction,
    )


def split_tables(feature_table: pd.DataFrame, split: SplitIndices) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Select the train and test rows, each in sorted song_id order."""
    return feature_table.loc[split.train_ids], feature_table.loc[split.test_ids]


def split_summary(feature_table: pd.DataFrame, split: SplitIndices) -> pd.DataFrame:
    """
    Per-genre partition sizes and corpus representativity.

    Returns:
        DataFrame with genre, train, test, total, train_share, test_share, representativity
    """
    labels = feature_table[LABEL_COLUMN]
    train = labels.loc[split.train_ids].value_counts()
    test = labels.loc[split.test_ids].value_counts()
    genres = sorted(labels.unique())

    summary = pd.DataFrame({
        'genre': genres,
        'train': [int(train.get(g, 0)) for g in genres],
        'test': [int(test.get(g, 0)) for g in genres],
    })
    summary['total'] = summary['train'] + summary['test']
    summary['train_share'] = summary['train'] / summary['total']
    summary['test_share'] = summary['test'] / summary['total']
    summary['representativity'] = summary['total'] / summary['total'].sum()
    return summary


def compute_medians(train_table: pd.DataFrame) -> Dict[str, float]:
    """
    Train-split medians of the columns that may be missing.

    Raises:
        AllMissing: A column present in the table has no value in train
    """
    medians = {}
    for column in IMPUTED_COLUMNS:
        if column not in train_table.columns:
            continue
        observed = train_table[column].dropna()
        if observed.empty:
            raise AllMissing(f"Column '{column}' is entirely missing in the train split")
        medians[column] = float(observed.median())
    return medians


def apply_medians(table: pd.DataFrame, medians: Dict[str, float]) -> pd.DataFrame:
    """Fill missing values with stored medians; returns a copy."""
    filled = table.copy()
    for column, median in medians.items():
        if column in filled.columns:
            filled[column] = filled[column].fillna(median)
    return filled


def impute_missing(train_table: pd.DataFrame, test_table: pd.DataFrame) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Fill missing popularity/year in both splits with the TRAIN medians.

    The medians are available afterwards through compute_medians(train_table).

    Raises:
        SchemaError: The two tables do not share columns
        AllMissing: A column entirely missing in train
    """
    if list(train_table.columns) != list(test_table.columns):
        raise SchemaError("train and test tables do not share a schema")

    medians = compute_medians(train_table)
    missing = {column: int(train_table[column].isna().sum() + test_table[column].isna().sum()) for column in medians}
    if any(missing.values()):
        logger.info(f"🩹 Imputing missing values with train medians: {medians} (missing cells: {missing})")
    return apply_medians(train_table, medians), apply_medians(test_table, medians)


def save_split_manifest(split: SplitIndices, feature_table: pd.DataFrame, path: str) -> None:
    """Write song_id -> partition with genre, seed and fraction columns."""
    labels = feature_table[LABEL_COLUMN]
    rows = [(song_id, labels.loc[song_id], 'train') for song_id in split.train_ids]
    rows += [(song_id, labels.loc[song_id], 'test') for song_id in split.test_ids]
    rows.sort(key=lambda row: row[0])

    manifest = pd.DataFrame(rows, columns=['song_id', 'genre', 'partition'])
    manifest['seed'] = split.seed
    manifest['fraction'] = split.fraction
    manifest.to_csv(path, index=False, encoding='utf-8')


def load_split_manifest(path: str) -> SplitIndices:
    """
    Read a manifest written by save_split_manifest.

    Raises:
        SchemaError: Bad header, unknown partition label or mixed seeds
    """
    frame = _read_text_csv(path, MANIFEST_COLUMNS)
    _require_columns(frame, MANIFEST_COLUMNS, path)

    partitions = set(frame['partition'])
    if not partitions <= {'train', 'test'}:
        raise SchemaError(f"{path}: unknown partition label(s) {sorted(partitions - {'train', 'test'})}")
    if frame['seed'].nunique() > 1 or frame['fraction'].nunique() > 1:
        raise SchemaError(f"{path}: manifest mixes several seeds or fractions")
    if frame.empty:
        raise SchemaError(f"{path}: manifest is empty")

    return SplitIndices(
        train_ids=sorted(frame.loc[frame['partition'] == 'train', 'song_id']),
        test_ids=sorted(frame.loc[frame['partition'] == 'test', 'song_id']),
        seed=int(frame['seed'].iloc[0]),
        fraction=float(frame['fraction'].iloc[0]),
    )
