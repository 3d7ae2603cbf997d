# Services package: parsing, features, dataset, forest, evaluation, export
from .chord_parser import ChordParser, parse_chord
from .features import FeatureExtractor, build_feature_table, featurize_song
from .forest import Forest, train_forest, load_forest, save_forest
from .evaluation import run_nested_experiment, evaluate_forest
from .exporter import ReportExporter

__all__ = [
    "ChordParser",
    "parse_chord",
    "FeatureExtractor",
    "featurize_song",
    "build_feature_table",
    "Forest",
    "train_forest",
    "load_forest",
    "save_forest",
    "run_nested_experiment",
    "evaluate_forest",
    "ReportExporter",
]
