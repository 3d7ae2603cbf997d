"""
Goodness-of-fit measures and the nested four-model experiment.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from models.errors import DegenerateKappa, LengthMismatch
from models.schemas import (
    FEATURE_NAMES,
    GROUP_MISCELLANY,
    GROUP_TETRADS,
    GROUP_TRANSITIONS,
    GROUP_TRIADS,
    LABEL_COLUMN,
    EvalReport,
    ForestParams,
    SongRecord,
    SplitIndices,
)
from services.dataset import compute_medians, apply_medians, split_tables
from services.forest import Forest, train_forest_with_params

logger = logging.getLogger(__name__)

# Model k uses the first k thematic groups
NESTED_MODELS: Dict[int, Tuple[str, ...]] = {
    1: GROUP_TRIADS,
    2: GROUP_TRIADS + GROUP_TETRADS,
    3: GROUP_TRIADS + GROUP_TETRADS + GROUP_TRANSITIONS,
    4: GROUP_TRIADS + GROUP_TETRADS + GROUP_TRANSITIONS + GROUP_MISCELLANY,
}

KAPPA_MODES = ('marginal', 'nir')


def _check_lengths(predictions: Sequence[str], truths: Sequence[str]) -> None:
    if len(predictions) != len(truths):
        raise LengthMismatch(f"{len(predictions)} predictions for {len(truths)} truths")
    if len(truths) == 0:
        raise LengthMismatch("Cannot score empty prediction vectors")


def accuracy(predictions: Sequence[str], truths: Sequence[str]) -> float:
    """
    Share of positions where the prediction equals the truth.

    Raises:
        LengthMismatch: Unequal or empty vectors
    """
    _check_lengths(predictions, truths)
    correct = sum(1 for p, t in zip(predictions, truths) if p == t)
    return correct / len(truths)


def error_rate(predictions: Sequence[str], truths: Sequence[str]) -> float:
    """Complement of accuracy."""
    return 1.0 - accuracy(predictions, truths)


def nir(truths: Sequence[str]) -> float:
    """No-information rate: proportion of the most frequent genre."""
    if len(truths) == 0:
        raise ValueError("No-information rate of an empty label vector")
    return float(pd.Series(list(truths)).value_counts(normalize=True).max())


def kappa_from_rates(observed: float, expected: float) -> float:
    """
    (p0 - pe) / (1 - pe).

    Raises:
        DegenerateKappa: If pe = 1
    """
    if np.isclose(expected, 1.0, rtol=0.0, atol=1e-15):
        raise DegenerateKappa("Expected agreement is 1; kappa is undefined")
    return (observed - expected) / (1.0 - expected)


def kappa(predictions: Sequence[str], truths: Sequence[str], mode: str = 'marginal') -> float:
    """
    Kappa statistic of the predictions.

    Args:
        predictions: Predicted genres
        truths: True genres
        mode: 'marginal' takes chance agreement from the confusion marginals
            (Cohen); 'nir' takes it as the no-information rate

    Raises:
        LengthMismatch: Unequal or empty vectors
        DegenerateKappa: Chance agreement equal to 1
    """
    if mode not in KAPPA_MODES:
        raise ValueError(f"Unknown kappa mode '{mode}' (expected one of {KAPPA_MODES})")

    observed = accuracy(predictions, truths)
    if mode == 'nir':
        expected = nir(truths)
    else:
        counts = confusion_matrix(predictions, truths).counts
        n = counts.sum()
        expected = float(np.sum(counts.sum(axis=1) * counts.sum(axis=0)) / (n * n))
    return kappa_from_rates(observed, expected)


def pvalue_vs_nir(correct_count: int, n: int, no_information_rate: float) -> float:
    """
    One-sided exact binomial test of accuracy against the no-information rate.

    Returns:
        P[X >= correct_count] for X ~ Binomial(n, nir)
    """
    if not 0 <= correct_count <= n:
        raise ValueError(f"correct_count={correct_count} outside 0..{n}")
    if not 0.0 < no_information_rate < 1.0:
        raise ValueError(f"nir must lie in (0, 1), got {no_information_rate}")
    return float(stats.binom.sf(correct_count - 1, n, no_information_rate))


def accuracy_interval(correct_count: int, n: int, level: float = 0.95) -> Tuple[float, float]:
    """
    Exact (Clopper-Pearson) binomial confidence interval of an accuracy.

    Returns:
        (lower, upper)
    """
    if n <= 0 or not 0 <= correct_count <= n:
        raise ValueError(f"correct_count={correct_count} outside 0..{n}")
    alpha = 1.0 - level
    k = correct_count
    lower = 0.0 if k == 0 else float(stats.beta.ppf(alpha / 2, k, n - k + 1))
    upper = 1.0 if k == n else float(stats.beta.ppf(1 - alpha / 2, k + 1, n - k))
    return lower, upper


@dataclass
class ConfusionMatrix:
    """Counts with rows = true genre, columns = predicted genre."""
    genres: List[str]
    counts: np.ndarray
    normalized: np.ndarray
    zero_support: List[str]

    def recall(self) -> Dict[str, float]:
        return {genre: float(self.normalized[i, i]) for i, genre in enumerate(self.genres)}


def confusion_matrix(
    predictions: Sequence[str],
    truths: Sequence[str],
    genres: Optional[Sequence[str]] = None,
) -> ConfusionMatrix:
    """
    Confusion counts and their row-normalized matrix.

    Rows without support stay all-zero and are listed in zero_support.

    Args:
        predictions: Predicted genres
        truths: True genres
        genres: Row/column order (default: sorted union of both vectors)

    Raises:
        LengthMismatch: Unequal or empty vectors
    """
    _check_lengths(predictions, truths)
    labels = sorted(set(predictions) | set(truths)) if genres is None else list(genres)
    position = {genre: i for i, genre in enumerate(labels)}

    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for predicted, truth in zip(predictions, truths):
        counts[position[truth], position[predicted]] += 1

    support = counts.sum(axis=1)
    normalized = np.zeros(counts.shape, dtype=float)
    has_support = support > 0
    normalized[has_support] = counts[has_support] / support[has_support, None]
    zero_support = [labels[i] for i in np.flatnonzero(~has_support)]

    return ConfusionMatrix(genres=labels, counts=counts, normalized=normalized, zero_support=zero_support)


def _matrix(table: pd.DataFrame, names: Sequence[str]) -> np.ndarray:
    return table.loc[:, list(names)].to_numpy(dtype=float)


def evaluate_forest(
    forest: Forest,
    test_table: pd.DataFrame,
    model_id: int,
    train_table: Optional[pd.DataFrame] = None,
) -> EvalReport:
    """
    Score a trained forest on the (imputed) test table.

    Args:
        forest: Trained forest
        test_table: Feature table with the forest's columns and the genre
        model_id: Nested model number (1-4)
        train_table: Train rows the forest was fit on, for the OOB estimate

    Returns:
        EvalReport
    """
    test = apply_medians(test_table, forest.imputation_medians)
    truths = test[LABEL_COLUMN].tolist()
    predictions = forest.predict_many(_matrix(test, forest.feature_names))

    n = len(truths)
    correct = sum(1 for p, t in zip(predictions, truths) if p == t)
    acc = accuracy(predictions, truths)
    ci_low, ci_high = accuracy_interval(correct, n)
    rate = nir(truths)
    genres = sorted(set(forest.classes) | set(truths))
    confusion = confusion_matrix(predictions, truths, genres)

    oob = None
    if train_table is not None:
        train = apply_medians(train_table, forest.imputation_medians)
        oob = forest.oob_accuracy(_matrix(train, forest.feature_names), train[LABEL_COLUMN].tolist())

    report = EvalReport(
        model_id=model_id,
        feature_names=forest.feature_names,
        n_test=n,
        correct=correct,
        accuracy=acc,
        error_rate=1.0 - acc,
        ci_low=ci_low,
        ci_high=ci_high,
        nir=rate,
        pvalue_vs_nir=pvalue_vs_nir(correct, n, rate) if rate < 1.0 else 1.0,
        kappa_marginal=_safe_kappa(predictions, truths, 'marginal'),
        kappa_nir=_safe_kappa(predictions, truths, 'nir'),
        genres=confusion.genres,
        confusion_counts=confusion.counts.tolist(),
        confusion=confusion.normalized.tolist(),
        zero_support=confusion.zero_support,
        importance=forest.importance(),
        oob_accuracy=oob,
    )

    if confusion.zero_support:
        logger.warning(f"⚠️ Model {model_id}: no test songs for {', '.join(confusion.zero_support)}")
    logger.info(
        f"📊 Model {model_id} ({len(forest.feature_names)} features): accuracy {acc:.3f} "
        f"[{ci_low:.3f}, {ci_high:.3f}], NIR {rate:.3f}, kappa {report.kappa_marginal:.3f}"
    )
    return report


def _safe_kappa(predictions: Sequence[str], truths: Sequence[str], mode: str) -> float:
    try:
        return kappa(predictions, truths, mode)
    except DegenerateKappa:
        logger.warning(f"⚠️ Kappa ({mode}) undefined on this test set, reported as 0")
        return 0.0


def nested_feature_names(model_id: int) -> Tuple[str, ...]:
    if model_id not in NESTED_MODELS:
        raise ValueError(f"model_id must be one of {sorted(NESTED_MODELS)}, got {model_id}")
    return NESTED_MODELS[model_id]


def model_id_for(feature_names: Sequence[str]) -> int:
    """Nested model number whose feature list equals feature_names."""
    for model_id, names in NESTED_MODELS.items():
        if tuple(feature_names) == names:
            return model_id
    raise ValueError(f"Feature list of {len(feature_names)} columns matches no nested model")


def fit_nested_model(
    train_table: pd.DataFrame,
    model_id: int,
    params: ForestParams,
) -> Forest:
    """
    Train nested model k on an imputed train table.

    Args:
        train_table: Train rows (missing values allowed in imputed columns)
        model_id: 1-4
        params: Forest hyperparameters; params.seed is used as is, an mtry
            above the model's feature count is capped to it

    Returns:
        Forest carrying the train medians of its imputed columns
    """
    names = nested_feature_names(model_id)
    if params.mtry is not None and params.mtry > len(names):
        params = params.model_copy(update={'mtry': len(names)})
    medians = compute_medians(train_table.loc[:, list(names)])
    train = apply_medians(train_table, medians)
    return train_forest_with_params(
        _matrix(train, names),
        train[LABEL_COLUMN].tolist(),
        names,
        params,
        imputation_medians=medians,
    )


def run_nested_experiment(
    feature_table: pd.DataFrame,
    split: SplitIndices,
    forest_params: ForestParams,
    on_model: Optional[Callable[[int, Forest, EvalReport], None]] = None,
) -> List[EvalReport]:
    """
    Fit and score the four nested models on one split with one seed.

    Args:
        feature_table: Table with all 23 features and the genre
        split: Train/test partition shared by every model
        forest_params: Hyperparameters shared by every model
        on_model: Called with (model_id, forest, report) as each model finishes

    Returns:
        EvalReports for models 1-4
    """
    missing = [name for name in FEATURE_NAMES if name not in feature_table.columns]
    if missing:
        raise ValueError(f"Feature table lacks {', '.join(missing)}")

    train_table, test_table = split_tables(feature_table, split)
    reports = []
    for model_id in sorted(NESTED_MODELS):
        logger.info(f"🔬 Nested model {model_id}: {len(NESTED_MODELS[model_id])} features")
        forest = fit_nested_model(train_table, model_id, forest_params)
        report = evaluate_forest(forest, test_table, model_id, train_table)
        if on_model is not None:
            on_model(model_id, forest, report)
        reports.append(report)
    return reports


def yearly_diversity_report(songs: Sequence[SongRecord]) -> pd.DataFrame:
    """
    Mean number of distinct chord tokens per (genre, year).

    Songs without a year are excluded and counted in the log.

    Returns:
        DataFrame with genre, year, mean_distinct_chords, n_songs
    """
    rows = []
    skipped = 0
    for song in songs:
        if song.year is None:
            skipped += 1
            continue
        distinct = len({token.strip() for token in song.chords if token.strip()})
        rows.append((song.genre, int(song.year), distinct))

    if skipped:
        logger.info(f"📅 {skipped} songs without a release year excluded from the diversity report")

    frame = pd.DataFrame(rows, columns=['genre', 'year', 'distinct'])
    if frame.empty:
        return pd.DataFrame(columns=['genre', 'year', 'mean_distinct_chords', 'n_songs'])

    report = (
        frame.groupby(['genre', 'year'], sort=True)['distinct']
        .agg(mean_distinct_chords='mean', n_songs='size')
        .reset_index()
    )
    report['mean_distinct_chords'] = report['mean_distinct_chords'].astype(float)
    return report


def genre_feature_profile(feature_table: pd.DataFrame) -> pd.DataFrame:
    """Per-genre mean of every feature, plus the number of songs."""
    grouped = feature_table.groupby(LABEL_COLUMN, sort=True)
    profile = grouped[list(FEATURE_NAMES)].mean()
    profile.insert(0, 'n_songs', grouped.size())
    return profile


def experiment_summary(reports: Sequence[EvalReport]) -> pd.DataFrame:
    """One goodness-of-fit row per nested model."""
    return pd.DataFrame([
        {
            'model_id': report.model_id,
            'n_features': len(report.feature_names),
            'accuracy': report.accuracy,
            'ci_low': report.ci_low,
            'ci_high': report.ci_high,
            'nir': report.nir,
            'pvalue_vs_nir': report.pvalue_vs_nir,
            'kappa_marginal': report.kappa_marginal,
            'kappa_nir': report.kappa_nir,
            'oob_accuracy': report.oob_accuracy,
        }
        for report in reports
    ])
