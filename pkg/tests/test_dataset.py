from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from models.errors import AllMissing, DegenerateGenre, OrderError, SchemaError
from models.schemas import LABEL_COLUMN
from services.dataset import (
    apply_medians,
    compute_medians,
    impute_missing,
    join_metadata,
    load_chords_csv,
    load_split_manifest,
    save_split_manifest,
    split_summary,
    stratified_split,
)

HEADER = 'song_id,artist,genre,key,chord,seq_no\n'


def _write(path, text):
    path.write_text(text, encoding='utf-8')
    return str(path)


def _genre_table(counts) -> pd.DataFrame:
    ids, genres = [], []
    for genre, n in counts.items():
        for i in range(n):
            ids.append(f"{genre}-{i:05d}")
            genres.append(genre)
    return pd.DataFrame({'x': np.arange(len(ids), dtype=float), LABEL_COLUMN: genres},
                        index=pd.Index(ids, name='song_id'))


def test_minimal_grouping(tmp_path):
    path = _write(tmp_path / 'c.csv', HEADER + 's1,a,MPB,C,G,2\ns1,a,MPB,C,C,1\n')
    songs = load_chords_csv(path)
    assert len(songs) == 1
    assert songs[0].chords == ['C', 'G']
    assert songs[0].genre == 'MPB'


def test_quoted_fields(tmp_path):
    path = _write(tmp_path / 'c.csv', HEADER + 's1,"Tom, Vinicius",Bossa Nova,Am,Am7,1\n')
    songs = load_chords_csv(path)
    assert songs[0].artist == 'Tom, Vinicius'


def test_empty_file_with_header(tmp_path):
    assert load_chords_csv(_write(tmp_path / 'c.csv', HEADER)) == []


def test_missing_genre_column(tmp_path):
    path = _write(tmp_path / 'c.csv', 'song_id,artist,key,chord,seq_no\ns1,a,C,C,1\n')
    with pytest.raises(SchemaError) as info:
        load_chords_csv(path)
    assert 'genre' in str(info.value)


def test_duplicate_seq_no(tmp_path):
    path = _write(tmp_path / 'c.csv', HEADER + 's1,a,MPB,C,C,1\ns1,a,MPB,C,G,1\n')
    with pytest.raises(OrderError):
        load_chords_csv(path)


def test_non_integer_seq_no(tmp_path):
    path = _write(tmp_path / 'c.csv', HEADER + 's1,a,MPB,C,C,first\n')
    with pytest.raises(SchemaError):
        load_chords_csv(path)


def test_genre_outside_label_set(tmp_path):
    path = _write(tmp_path / 'c.csv', HEADER + 's1,a,Axé,C,C,1\n')
    with pytest.raises(SchemaError):
        load_chords_csv(path, genres=['MPB', 'Rock'])


def test_join_metadata(tmp_path):
    chords = _write(tmp_path / 'c.csv', HEADER + 's1,a,MPB,C,C,1\ns2,b,Rock,E,E,1\n')
    metadata = _write(tmp_path / 'm.csv', 'song_id,popularity,year\ns1,55,1972\n')
    s1, s2 = join_metadata(load_chords_csv(chords), metadata)

    assert (s1.popularity, s1.year) == (55.0, 1972)
    assert (s2.popularity, s2.year) == (None, None)


def test_join_metadata_duplicate_key(tmp_path):
    chords = _write(tmp_path / 'c.csv', HEADER + 's1,a,MPB,C,C,1\n')
    metadata = _write(tmp_path / 'm.csv', 'song_id,popularity,year\ns1,55,1972\ns1,40,1980\n')
    with pytest.raises(SchemaError):
        join_metadata(load_chords_csv(chords), metadata)


def test_split_ten_songs():
    split = stratified_split(_genre_table({'MPB': 10}), fraction=0.7, seed=3)
    assert len(split.train_ids) == 7
    assert len(split.test_ids) == 3


def test_split_corpus_scale_genre():
    split = stratified_split(_genre_table({'Sertanejo': 2841}), fraction=0.7, seed=1)
    assert abs(len(split.train_ids) - 1992) <= 5
    assert len(split.train_ids) + len(split.test_ids) == 2841


def test_split_is_deterministic_and_order_free():
    table = _genre_table({'MPB': 31, 'Rock': 17, 'Samba': 8})
    first = stratified_split(table, 0.7, 42)
    again = stratified_split(table.sample(frac=1.0, random_state=0), 0.7, 42)
    assert first == again

    other = stratified_split(table, 0.7, 43)
    assert other.train_ids != first.train_ids


def test_split_stratification_and_coverage():
    counts = {'MPB': 31, 'Rock': 17, 'Samba': 8, 'Pop': 2, 'Reggae': 3}
    table = _genre_table(counts)
    split = stratified_split(table, 0.7, 9)

    assert set(split.train_ids) | set(split.test_ids) == set(table.index)
    assert not set(split.train_ids) & set(split.test_ids)
    labels = table[LABEL_COLUMN]
    for genre, n in counts.items():
        train_share = (labels.loc[split.train_ids] == genre).sum() / n
        assert abs(train_share - 0.7) < 1 / n
        assert 0 < (labels.loc[split.test_ids] == genre).sum() < n


def test_split_degenerate_genre():
    with pytest.raises(DegenerateGenre):
        stratified_split(_genre_table({'MPB': 5, 'Rock': 1}), 0.7, 1)


def test_split_summary():
    table = _genre_table({'MPB': 10, 'Rock': 30})
    summary = split_summary(table, stratified_split(table, 0.7, 1))

    mpb = summary.set_index('genre').loc['MPB']
    assert (mpb['train'], mpb['test'], mpb['total']) == (7, 3, 10)
    assert mpb['representativity'] == pytest.approx(0.25)


def test_manifest_round_trip(tmp_path):
    table = _genre_table({'MPB': 10, 'Rock': 6})
    split = stratified_split(table, 0.7, 5)
    path = tmp_path / 'manifest.csv'
    save_split_manifest(split, table, str(path))

    assert load_split_manifest(str(path)) == split


def _imputation_tables():
    train = pd.DataFrame({'popularity': [10.0, 20.0, np.nan], 'year': [1970.0, 1980.0, 1990.0], 'genre': ['a'] * 3})
    test = pd.DataFrame({'popularity': [np.nan, 99.0], 'year': [np.nan, 2000.0], 'genre': ['a'] * 2})
    return train, test


def test_impute_with_train_median():
    train, test = _imputation_tables()
    train_filled, test_filled = impute_missing(train, test)

    assert train_filled['popularity'].tolist() == [10.0, 20.0, 15.0]
    assert test_filled['popularity'].tolist() == [15.0, 99.0]
    assert test_filled['year'].tolist() == [1980.0, 2000.0]
    assert train['popularity'].isna().sum() == 1


def test_imputation_ignores_test_values():
    train, test = _imputation_tables()
    corrupted = test.assign(popularity=[np.nan, -1e9], year=[np.nan, 1e9])
    assert compute_medians(train) == {'popularity': 15.0, 'year': 1980.0}
    assert impute_missing(train, corrupted)[1]['popularity'].iloc[0] == 15.0


def test_no_missing_values_is_identity():
    train = pd.DataFrame({'popularity': [1.0, 2.0], 'year': [2000.0, 2001.0]})
    test = pd.DataFrame({'popularity': [3.0], 'year': [2002.0]})
    train_filled, test_filled = impute_missing(train, test)
    pd.testing.assert_frame_equal(train_filled, train)
    pd.testing.assert_frame_equal(test_filled, test)


def test_all_missing_year():
    train = pd.DataFrame({'popularity': [1.0, 2.0], 'year': [np.nan, np.nan]})
    with pytest.raises(AllMissing):
        impute_missing(train, train.copy())


def test_schema_mismatch():
    with pytest.raises(SchemaError):
        impute_missing(pd.DataFrame({'popularity': [1.0]}), pd.DataFrame({'year': [1.0]}))


def test_apply_medians_returns_copy():
    table = pd.DataFrame({'popularity': [np.nan]})
    filled = apply_medians(table, {'popularity': 7.0})
    assert filled['popularity'].iloc[0] == 7.0
    assert np.isnan(table['popularity'].iloc[0])


def test_blank_song_id_names_the_line(tmp_path):
    path = _write(tmp_path / 'c.csv', HEADER + 's1,a,MPB,C,C,1\n,b,Rock,E,E,1\n')
    with pytest.raises(SchemaError) as info:
        load_chords_csv(path)
    assert info.value.row == 'line 3'
    assert 'song_id' in str(info.value)


def test_source_seq_no_is_kept(tmp_path):
    path = _write(tmp_path / 'c.csv', HEADER + 's1,a,MPB,C,G,20\ns1,a,MPB,C,C,10\ns1,a,MPB,C,F,30\n')
    song = load_chords_csv(path)[0]
    assert song.chords == ['C', 'G', 'F']
    assert song.seq_nos == [10, 20, 30]
