"""
Shared fixtures: a synthetic cifra corpus with genre-specific chord habits.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pytest

from models.schemas import SongRecord

# Chord vocabulary per genre: (altered chords, plain chords, share of altered)
GENRE_HABITS: Dict[str, Tuple[Sequence[str], Sequence[str], float]] = {
    'Rock': (['Am', 'Em', 'Bm'], ['C', 'G', 'D', 'A', 'E'], 0.10),
    'Samba': (['C7', 'G7', 'D7', 'A7', 'E7'], ['C', 'F', 'G'], 0.75),
    'MPB': (['Am7', 'Dm7', 'Em7', 'Bm7'], ['C', 'F', 'G'], 0.75),
    'Sertanejo': (['Gsus', 'Dsus4', 'Asus2', 'Esus'], ['C', 'G', 'D'], 0.60),
}

CHORD_HEADER = ['song_id', 'artist', 'genre', 'key', 'chord', 'seq_no']
METADATA_HEADER = ['song_id', 'popularity', 'year']


def make_songs(seed: int = 7, songs_per_genre: int = 100, missing_share: float = 0.05) -> List[SongRecord]:
    """Songs of 16-40 chords drawn from each genre's habits, with popularity and year."""
    rng = np.random.default_rng(seed)
    songs = []
    for genre, (altered, plain, rate) in GENRE_HABITS.items():
        for i in range(songs_per_genre):
            n = int(rng.integers(16, 41))
            chords = [
                str(rng.choice(altered)) if rng.random() < rate else str(rng.choice(plain))
                for _ in range(n)
            ]
            popularity = None if rng.random() < missing_share else float(rng.integers(0, 101))
            year = None if rng.random() < missing_share else int(rng.integers(1960, 2021))
            songs.append(SongRecord(
                song_id=f"{genre[:3].lower()}-{i:03d}",
                artist=f"{genre} artist {i % 7}",
                genre=genre,
                key=chords[0],
                chords=chords,
                popularity=popularity,
                year=year,
            ))
    return songs


def write_chords_csv(path: Path, songs: Sequence[SongRecord]) -> Path:
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        writer.writerow(CHORD_HEADER)
        for song in songs:
            for seq_no, chord in enumerate(song.chords, 1):
                writer.writerow([song.song_id, song.artist, song.genre, song.key, chord, seq_no])
    return path


def write_metadata_csv(path: Path, songs: Sequence[SongRecord]) -> Path:
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        writer.writerow(METADATA_HEADER)
        for song in songs:
            writer.writerow([
                song.song_id,
                '' if song.popularity is None else song.popularity,
                '' if song.year is None else song.year,
            ])
    return path


@pytest.fixture(scope='session')
def synthetic_songs() -> List[SongRecord]:
    return make_songs()


@pytest.fixture
def corpus_files(tmp_path: Path, synthetic_songs: List[SongRecord]) -> Tuple[Path, Path]:
    chords = write_chords_csv(tmp_path / 'chords.csv', synthetic_songs)
    metadata = write_metadata_csv(tmp_path / 'metadata.csv', synthetic_songs)
    return chords, metadata
