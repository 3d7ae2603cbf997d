from __future__ import annotations

import math

import numpy as np
import pandas as pd
import pytest

from models.errors import EmptySong, MalformedChord, SchemaError
from models.schemas import FEATURE_NAMES, SongRecord
from services.chord_parser import ChordParser, parse_chord
from services.features import (
    FeatureExtractor,
    build_feature_table,
    featurize_song,
    key_match_indicator,
    load_feature_table,
    mode_chord,
    save_feature_table,
    transition_percentages,
)

VOCABULARY = ['C', 'G', 'Am', 'F', 'Em7', 'D7', 'Bº', 'Gsus', 'E6', 'C/E', 'F7+', 'A9', 'C5-', 'Baug', 'D4']


def _song(chords, key='C', song_id='s1', genre='MPB', **extra) -> SongRecord:
    return SongRecord(song_id=song_id, artist='a', genre=genre, key=key, chords=list(chords), **extra)


def _parsed(tokens):
    return [parse_chord(token) for token in tokens]


def test_two_chord_table_example():
    vector = featurize_song(_song(['C', 'Gm7']))
    assert vector.pct_7th == 0.5
    assert vector.pct_minor == 0.5
    assert vector.pct_min7 == 0.5
    assert vector.pct_sus == 0.0


def test_constant_song():
    vector = featurize_song(_song(['C', 'C', 'C']))
    for name in FEATURE_NAMES[:12]:
        assert getattr(vector, name) == 0.0
    assert vector.total_chords == 3
    assert vector.mode_chord_count == 3
    assert vector.mean_fifths_dist_to_C == 0.0
    assert vector.pct_trans_1 == 1.0


def test_alternating_song_transitions():
    vector = featurize_song(_song(['C', 'G', 'C', 'G', 'C']))
    assert (vector.pct_trans_1, vector.pct_trans_2, vector.pct_trans_3) == (0.5, 0.5, 0.0)


@pytest.mark.parametrize('tokens, expected', [
    (['C'], (0.0, 0.0, 0.0)),
    (['C', 'G', 'C', 'G', 'C'], (0.5, 0.5, 0.0)),
    (['Am', 'Dm', 'G', 'C'], (1 / 3, 1 / 3, 1 / 3)),
    (['C', 'C'], (1.0, 0.0, 0.0)),
])
def test_transition_percentages(tokens, expected):
    assert transition_percentages(_parsed(tokens)) == pytest.approx(expected)


@pytest.mark.parametrize('key, tokens, expected', [
    ('C', ['C', 'F', 'G', 'C'], 1),
    ('Am', ['C', 'F', 'C'], 0),
    ('Em', ['Em7', 'Am', 'Em7'], 1),
    ('C', ['Cm', 'Cm', 'G'], 0),
    ('G', ['G', 'D', 'D', 'G'], 1),
])
def test_key_match_indicator(key, tokens, expected):
    assert key_match_indicator(key, _parsed(tokens)) == expected


def test_mode_chord_ties_go_to_first_occurrence():
    chord, count = mode_chord(_parsed(['D', 'G', 'G', 'D', 'A']))
    assert chord.raw == 'D'
    assert count == 2


def test_unreadable_key_lenient_and_strict():
    assert key_match_indicator('H', _parsed(['C'])) == 0
    with pytest.raises(MalformedChord):
        key_match_indicator('H', _parsed(['C']), strict=True)


def test_group_four_definitions():
    song = _song(['C/E', 'G', 'C/E', 'F#'], key='C', popularity=55.0, year=1972)
    vector = featurize_song(song)

    assert vector.popularity == 55.0
    assert vector.year == 1972.0
    assert vector.total_chords == 4
    assert vector.key_is_mode_chord == 1
    assert vector.pct_varying_bass == 0.5
    # fifths steps from C: C 0, G 1, C 0, F# 6
    assert vector.mean_fifths_dist_to_C == pytest.approx(7 / 4)
    # semitones from C: 0, 5 (G is 7 up, 5 down), 0, 6
    assert vector.mean_semitone_dist_to_C == pytest.approx(11 / 4)
    assert vector.mode_chord_count == 2


def test_missing_metadata_stays_missing():
    vector = featurize_song(_song(['C', 'G']))
    assert vector.popularity is None
    assert vector.year is None


def test_malformed_tokens_are_skipped_in_lenient_mode():
    parser = ChordParser(strict=False)
    vector = featurize_song(_song(['C', 'H7', 'Gm7']), parser)
    assert vector.total_chords == 2
    assert parser.malformed_count == 1


def test_empty_song():
    with pytest.raises(EmptySong):
        featurize_song(_song(['H', 'X7']))


def _random_song(rng: np.random.Generator, song_id: str) -> SongRecord:
    n = int(rng.integers(1, 30))
    chords = [VOCABULARY[i] for i in rng.integers(0, len(VOCABULARY), n)]
    return _song(chords, key=str(rng.choice(['C', 'Am', 'G', 'Em'])), song_id=song_id)


def test_feature_invariants_on_random_songs():
    rng = np.random.default_rng(2024)
    extractor = FeatureExtractor()

    for i in range(10_000):
        song = _random_song(rng, f"r{i}")
        v = extractor.featurize(song)

        assert v.pct_min7 <= min(v.pct_minor, v.pct_7th)
        assert v.pct_trans_1 >= v.pct_trans_2 >= v.pct_trans_3
        assert v.pct_trans_1 + v.pct_trans_2 + v.pct_trans_3 <= 1.0 + 1e-12
        assert 0.0 <= v.mean_fifths_dist_to_C <= 6.0
        assert 0.0 <= v.mean_semitone_dist_to_C <= 6.0
        assert 1 <= v.mode_chord_count <= v.total_chords == len(song.chords)


def test_shuffling_keeps_order_free_features():
    rng = np.random.default_rng(11)
    order_free = [name for name in FEATURE_NAMES if not name.startswith('pct_trans')
                  and name not in ('key_is_mode_chord', 'mode_chord_count')]

    for i in range(500):
        song = _random_song(rng, f"p{i}")
        shuffled = song.model_copy(update={'chords': [str(c) for c in rng.permutation(song.chords)]})
        a, b = featurize_song(song), featurize_song(shuffled)
        for name in order_free:
            assert getattr(a, name) == pytest.approx(getattr(b, name), abs=1e-12)


def test_self_concatenation_bounds_transition_change():
    rng = np.random.default_rng(5)
    for i in range(500):
        song = _random_song(rng, f"c{i}")
        doubled = song.model_copy(update={'chords': song.chords + song.chords})
        a, b = featurize_song(song), featurize_song(doubled)
        n = len(song.chords)

        for name in FEATURE_NAMES[:12]:
            assert getattr(a, name) == pytest.approx(getattr(b, name), abs=1e-12)
        if n >= 2:
            for name in ('pct_trans_1', 'pct_trans_2', 'pct_trans_3'):
                assert abs(getattr(a, name) - getattr(b, name)) <= 1 / (2 * n - 1) + 1e-12


def test_build_table_excludes_empty_songs():
    extractor = FeatureExtractor()
    table = extractor.build_table([
        _song(['C', 'G'], song_id='a'),
        _song(['H'], song_id='b'),
        _song(['Am'], song_id='c', genre='Rock'),
    ])

    assert list(table.index) == ['a', 'c']
    assert extractor.excluded_songs == ['b']
    assert list(table.columns) == list(FEATURE_NAMES) + ['genre']


def test_build_feature_table_with_strict_extractor():
    songs = [_song(['C', 'G'], song_id='a'), _song(['Am', 'E7'], song_id='b', genre='Rock')]
    table = build_feature_table(songs)
    assert table.loc['b', 'genre'] == 'Rock'

    with pytest.raises(MalformedChord):
        build_feature_table([_song(['C', 'H7'])], FeatureExtractor(ChordParser(strict=True)))


def test_feature_table_round_trip(tmp_path):
    extractor = FeatureExtractor()
    table = extractor.build_table([
        _song(['C', 'G', 'Am'], song_id='a', popularity=12.5, year=1999),
        _song(['Em7', 'D7'], song_id='b', genre='Rock'),
    ])
    path = tmp_path / 'features.csv'
    save_feature_table(table, str(path))

    header = path.read_text(encoding='utf-8').splitlines()[0].split(',')
    assert header == ['song_id'] + list(FEATURE_NAMES) + ['genre']

    loaded = load_feature_table(str(path))
    pd.testing.assert_frame_equal(loaded, table)
    assert math.isnan(loaded.loc['b', 'popularity'])


def test_feature_table_bad_header(tmp_path):
    path = tmp_path / 'bad.csv'
    path.write_text('song_id,pct_sus,genre\na,0.1,MPB\n', encoding='utf-8')
    with pytest.raises(SchemaError):
        load_feature_table(str(path))
