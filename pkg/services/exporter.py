"""
Exporter Service - Write experiment artifacts as UTF-8 JSON and CSV.

JSON reports keep full precision; CSV views of the confusion matrix round
to two decimals for display, like the published tables.
"""
import json
import logging
import os
from typing import Any, Dict, Optional, Sequence

import pandas as pd

from models.schemas import EvalReport, ParsedChord, SongRecord
from services.chord_parser import INDICATOR_NAMES, indicator_row
from services.evaluation import experiment_summary
from utils.helpers import ensure_dir, ensure_parent_dir, format_ratio

logger = logging.getLogger(__name__)

PARSED_CHORD_COLUMNS = ['song_id', 'seq_no', 'chord', 'root', 'bass'] + list(INDICATOR_NAMES) + ['ignored_suffix']


class ReportExporter:
    """Service for writing every artifact of a run under one output directory."""

    def __init__(self, output_dir: str = "."):
        """
        Initialize the exporter.

        Args:
            output_dir: Directory the relative artifact names resolve against
        """
        self.output_dir = output_dir

    def path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def _register(self, path: str) -> str:
        logger.info(f"💾 Wrote {path}")
        return path

    def write_json(self, name: str, payload: Dict[str, Any]) -> str:
        """Write a dict as sorted, indented JSON."""
        path = ensure_parent_dir(self.path(name))
        with open(path, 'w', encoding='utf-8') as handle:
            json.dump(payload, handle, indent=2, sort_keys=True, ensure_ascii=False)
            handle.write('\n')
        return self._register(path)

    def write_frame(self, name: str, frame: pd.DataFrame, index: bool = False) -> str:
        path = ensure_parent_dir(self.path(name))
        frame.to_csv(path, index=index, encoding='utf-8', lineterminator='\n')
        return self._register(path)

    def write_report(self, name: str, report: EvalReport) -> str:
        """Full-precision JSON of one EvalReport."""
        path = ensure_parent_dir(self.path(name))
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(report.model_dump_json(indent=2))
            handle.write('\n')
        return self._register(path)

    def write_confusion(self, name: str, report: EvalReport) -> str:
        """Row-normalized confusion matrix, two decimals, rows = true genre."""
        rows = [
            [genre] + [format_ratio(value) for value in values]
            for genre, values in zip(report.genres, report.confusion)
        ]
        frame = pd.DataFrame(rows, columns=['true'] + list(report.genres))
        return self.write_frame(name, frame)

    def write_importance(self, name: str, report: EvalReport) -> str:
        frame = pd.DataFrame(
            [(rank, entry.feature, entry.importance) for rank, entry in enumerate(report.importance, 1)],
            columns=['rank', 'feature', 'importance'],
        )
        return self.write_frame(name, frame)

    def write_summary(self, name: str, reports: Sequence[EvalReport]) -> str:
        return self.write_frame(name, experiment_summary(reports))

    def write_parsed_chords(
        self,
        name: str,
        songs: Sequence[SongRecord],
        parsed: Sequence[Sequence[Optional[ParsedChord]]],
    ) -> str:
        """
        Per-chord flag table: one row per parseable token.

        Args:
            name: Output file name
            songs: Songs in corpus order
            parsed: Parsed chords per song, None for tokens dropped as malformed;
                rows carry the source seq_no of their token
        """
        rows = []
        for song, chords in zip(songs, parsed):
            seq_nos = song.seq_nos or list(range(1, len(chords) + 1))
            for seq_no, chord in zip(seq_nos, chords):
                if chord is None:
                    continue
                rows.append(
                    [song.song_id, seq_no, chord.raw, chord.root.spelled, chord.bass.spelled if chord.bass else '']
                    + [int(flag) for flag in indicator_row(chord)]
                    + [chord.unparsed]
                )
        return self.write_frame(name, pd.DataFrame(rows, columns=PARSED_CHORD_COLUMNS))


def export_dir(path: str) -> ReportExporter:
    """Exporter rooted at a directory that is created if needed."""
    return ReportExporter(ensure_dir(path))
