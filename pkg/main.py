"""
Command-line entry point: ingest -> featurize -> split -> train -> evaluate -> report.

Exit codes: 0 on success, 1 on I/O failure, 2 on data or configuration errors.
"""
import argparse
import logging
import os
import sys
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

from config import Config
from models.errors import CifraError, SchemaError
from models.schemas import EvalReport, ForestParams, RunConfig
from services.chord_parser import ChordParser
from services.dataset import (
    join_metadata,
    load_chords_csv,
    load_split_manifest,
    save_split_manifest,
    split_summary,
    split_tables,
    stratified_split,
)
from services.evaluation import (
    NESTED_MODELS,
    evaluate_forest,
    fit_nested_model,
    genre_feature_profile,
    model_id_for,
    run_nested_experiment,
    yearly_diversity_report,
)
from services.exporter import ReportExporter, export_dir
from services.features import FeatureExtractor, load_feature_table, save_feature_table
from services.forest import Forest, load_forest, save_forest
from utils.helpers import derive_seed, ensure_parent_dir, resolve_jobs
from utils.logger import setup_logging

logger = logging.getLogger("cifra")

# Seed label of the forest stream; the split derives its own per-genre labels
FOREST_SEED_LABEL = "forest"


# === ARGUMENTS ===

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", required=True, help="Output file (or directory for experiment)")
    common.add_argument("--seed", type=int, default=Config.DEFAULT_SEED, help="Root seed of every random draw")
    common.add_argument("--trees", type=int, default=Config.DEFAULT_TREES, help="Number of trees B")
    common.add_argument("--mtry", type=int, default=None, help="Features drawn per node (default floor(sqrt(p)))")
    common.add_argument("--min-leaf", type=int, default=Config.DEFAULT_MIN_LEAF, help="Minimum rows per leaf")
    common.add_argument("--fraction", type=float, default=Config.DEFAULT_FRACTION, help="Train share per genre")
    common.add_argument("--strict", action="store_true", help="Abort on malformed chord tokens")
    common.add_argument("--genres", nargs="+", default=list(Config.DEFAULT_GENRES), help="Allowed genre labels")
    common.add_argument("--jobs", type=int, default=None, help="Worker threads for tree growing (default: N_JOBS)")
    common.add_argument("--log-level", default=Config.LOG_LEVEL, choices=["debug", "info", "warning", "error"])

    parser = argparse.ArgumentParser(prog="cifra", description="Genre classification from cifra chord sequences")
    commands = parser.add_subparsers(dest="subcommand", required=True)

    cmd = commands.add_parser("parse", parents=[common], help="Per-chord flag table")
    cmd.add_argument("chords", help="Chords CSV")

    cmd = commands.add_parser("featurize", parents=[common], help="Song feature table")
    cmd.add_argument("chords", help="Chords CSV")
    cmd.add_argument("--metadata", default=None, help="Popularity/year CSV")

    cmd = commands.add_parser("split", parents=[common], help="Genre-stratified split manifest")
    cmd.add_argument("features", help="Feature table CSV")

    cmd = commands.add_parser("train", parents=[common], help="Train one nested model")
    cmd.add_argument("features", help="Feature table CSV")
    cmd.add_argument("--split", required=True, help="Split manifest CSV")
    cmd.add_argument("--model-id", type=int, default=4, choices=sorted(NESTED_MODELS))

    cmd = commands.add_parser("evaluate", parents=[common], help="Score a saved model on the test split")
    cmd.add_argument("features", help="Feature table CSV")
    cmd.add_argument("--split", required=True, help="Split manifest CSV")
    cmd.add_argument("--model", required=True, help="Model JSON written by train")

    cmd = commands.add_parser("experiment", parents=[common], help="Full nested four-model experiment")
    cmd.add_argument("chords", help="Chords CSV")
    cmd.add_argument("--metadata", required=True, help="Popularity/year CSV")

    cmd = commands.add_parser("report-diversity", parents=[common], help="Distinct chords per genre and year")
    cmd.add_argument("chords", help="Chords CSV")
    cmd.add_argument("--metadata", required=True, help="Popularity/year CSV")

    return parser


def to_run_config(args: argparse.Namespace) -> RunConfig:
    inputs = [getattr(args, name) for name in ("chords", "features", "split", "model") if getattr(args, name, None)]
    return RunConfig(
        subcommand=args.subcommand,
        inputs=inputs,
        metadata_path=getattr(args, "metadata", None),
        out=args.out,
        seed=args.seed,
        n_trees=args.trees,
        mtry=args.mtry,
        min_leaf_size=args.min_leaf,
        fraction=args.fraction,
        strict=args.strict,
        genres=args.genres,
        n_jobs=resolve_jobs(args.jobs, Config.n_jobs()),
    )


def forest_params(config: RunConfig) -> ForestParams:
    return ForestParams(
        n_trees=config.n_trees,
        mtry=config.mtry,
        min_leaf_size=config.min_leaf_size,
        seed=derive_seed(config.seed, FOREST_SEED_LABEL),
        n_jobs=config.n_jobs,
    )


# === COMMANDS ===

def cmd_parse(args: argparse.Namespace, config: RunConfig) -> None:
    songs = load_chords_csv(args.chords, config.genres)
    parser = ChordParser(strict=config.strict)
    parsed = [
        [parser.parse(token, row=f"song {song.song_id}, chord {i}") for i, token in enumerate(song.chords, 1)]
        for song in songs
    ]
    parser.log_summary()

    exporter = ReportExporter(os.path.dirname(ensure_parent_dir(config.out)))
    exporter.write_parsed_chords(os.path.basename(config.out), songs, parsed)
    print(f"malformed tokens: {parser.malformed_count}")


def _featurize(args: argparse.Namespace, config: RunConfig):
    songs = load_chords_csv(args.chords, config.genres)
    if config.metadata_path:
        songs = join_metadata(songs, config.metadata_path)
    extractor = FeatureExtractor(ChordParser(strict=config.strict))
    return songs, extractor.build_table(songs)


def cmd_featurize(args: argparse.Namespace, config: RunConfig) -> None:
    _, table = _featurize(args, config)
    save_feature_table(table, ensure_parent_dir(config.out))


def cmd_split(args: argparse.Namespace, config: RunConfig) -> None:
    table = load_feature_table(args.features)
    split = stratified_split(table, config.fraction, config.seed)
    save_split_manifest(split, table, ensure_parent_dir(config.out))
    logger.info(f"✅ Split: {len(split.train_ids)} train / {len(split.test_ids)} test")


def _load_split_tables(features_path: str, manifest_path: str):
    table = load_feature_table(features_path)
    split = load_split_manifest(manifest_path)
    unknown = sorted(set(split.train_ids + split.test_ids) - set(table.index))
    if unknown:
        raise SchemaError(f"{manifest_path}: {len(unknown)} song ids absent from {features_path} (e.g. {unknown[0]})")
    return split_tables(table, split)


def cmd_train(args: argparse.Namespace, config: RunConfig) -> None:
    train_table, _ = _load_split_tables(args.features, args.split)
    forest = fit_nested_model(train_table, args.model_id, forest_params(config))
    save_forest(forest, ensure_parent_dir(config.out))
    logger.info(f"💾 Model {args.model_id} saved to {config.out}")


def cmd_evaluate(args: argparse.Namespace, config: RunConfig) -> None:
    train_table, test_table = _load_split_tables(args.features, args.split)
    forest = load_forest(args.model)
    report = evaluate_forest(forest, test_table, model_id_for(forest.feature_names), train_table)
    exporter = ReportExporter(os.path.dirname(ensure_parent_dir(config.out)))
    exporter.write_report(os.path.basename(config.out), report)


def cmd_experiment(args: argparse.Namespace, config: RunConfig) -> None:
    exporter = export_dir(config.out)
    exporter.write_json("run_config.json", config.model_dump())

    songs, table = _featurize(args, config)
    save_feature_table(table, exporter.path("features.csv"))

    split = stratified_split(table, config.fraction, config.seed)
    save_split_manifest(split, table, exporter.path("split_manifest.csv"))
    exporter.write_frame("split_summary.csv", split_summary(table, split))
    exporter.write_frame("genre_profile.csv", genre_feature_profile(table), index=True)

    def export_model(model_id: int, forest: Forest, report: EvalReport) -> None:
        save_forest(forest, exporter.path(f"model_{model_id}.json"))
        exporter.write_report(f"report_model_{model_id}.json", report)
        exporter.write_confusion(f"confusion_model_{model_id}.csv", report)
        exporter.write_importance(f"importance_model_{model_id}.csv", report)

    reports = run_nested_experiment(table, split, forest_params(config), on_model=export_model)

    exporter.write_summary("experiment_summary.csv", reports)
    exporter.write_frame("yearly_diversity.csv", yearly_diversity_report(songs))
    logger.info(f"✅ Experiment complete, artifacts in {config.out}")


def cmd_report_diversity(args: argparse.Namespace, config: RunConfig) -> None:
    songs = join_metadata(load_chords_csv(args.chords, config.genres), config.metadata_path)
    exporter = ReportExporter(os.path.dirname(ensure_parent_dir(config.out)))
    exporter.write_frame(os.path.basename(config.out), yearly_diversity_report(songs))


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunConfig], None]] = {
    "parse": cmd_parse,
    "featurize": cmd_featurize,
    "split": cmd_split,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
    "report-diversity": cmd_report_diversity,
}


# === ENTRY POINT ===

def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)

    try:
        Config.validate()
        config = to_run_config(args)
    except (ValidationError, ValueError) as e:
        logger.error(f"❌ Invalid configuration: {e}")
        return 2

    try:
        COMMANDS[config.subcommand](args, config)
    except CifraError as e:
        logger.error(f"❌ [{e.module}] {e}")
        return 2
    except ValueError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return 2
    except OSError as e:
        logger.error(f"❌ I/O failure: {e}")
        return 1

    return 0


if __name__ == "__main__":
    sys.exit(main())
