"""Pipeline output files. Each starts with a ``#format=<name>/<version>`` line."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Mapping, Optional

from .core import DataError, HostId, LabelSet, Prediction, RankedItem, RankedList
from .ensemble import EnsembleOutput
from .evaluation import NdcgReport
from .ingest import format_label_row, parse_labels
from .quality import format_ranking

PREDICTIONS = "predictions/1"
GENRES = "genres/1"
CATEGORY_RANKINGS = "category-rankings/1"
RANKING = "ranking/1"
REPORT = "ndcg-report/1"


def _write(path: os.PathLike, fmt: str, rows) -> None:
    text = "\n".join([f"#format={fmt}", *rows]) + "\n"
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def _read(path: os.PathLike, fmt: str) -> list[str]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != f"#format={fmt}":
        raise DataError(f"{path}: expected a '#format={fmt}' header")
    return [ln for ln in lines[1:] if ln and not ln.startswith("#")]


def write_predictions(path: os.PathLike, output: EnsembleOutput) -> None:
    _write(path, PREDICTIONS, [p.to_tsv() for p in output.predictions()])


def read_predictions(path: os.PathLike) -> list[Prediction]:
    return [Prediction.from_tsv(ln) for ln in _read(path, PREDICTIONS)]


def write_assignments(path: os.PathLike, output: EnsembleOutput) -> None:
    _write(path, GENRES, [format_label_row(h, output.assigned[h]) for h in sorted(output.assigned)])


def read_assignments(path: os.PathLike) -> dict[HostId, LabelSet]:
    _read(path, GENRES)
    # rows share the labels layout; the parser skips '#' lines
    return parse_labels(path)


def write_category_rankings(path: os.PathLike, output: EnsembleOutput) -> None:
    rows = []
    for c, ranked in output.rankings.items():
        rows += [f"{c.value}\t{i}\t{it.host}\t{it.score!r}" for i, it in enumerate(ranked, start=1)]
    _write(path, CATEGORY_RANKINGS, rows)


def write_quality_ranking(path: os.PathLike, ranked: RankedList, confidences: Optional[Mapping] = None) -> None:
    _write(path, RANKING, format_ranking(ranked, confidences))


def read_quality_ranking(path: os.PathLike) -> RankedList:
    items = []
    for ln in _read(path, RANKING):
        cells = ln.split("\t")
        if len(cells) != 4:
            raise DataError(f"{path}: ranking rows need rank, host_id, utility_score, confidence")
        items.append(RankedItem(cells[1], float(cells[2]), max(float(cells[2]), 0.0)))
    return RankedList(tuple(items))


def write_report(path: os.PathLike, rep: NdcgReport) -> None:
    _write(path, REPORT, rep.rows())


def rankings_from_predictions(preds) -> dict:
    """Per-category rankings rebuilt from ensemble predictions."""
    scores: dict = {}
    for p in preds:
        scores.setdefault(p.category, {})[p.host] = p.positive_score
    return {c: RankedList.from_scores(s) for c, s in scores.items()}


def genre_confidences(preds, assigned: Mapping[HostId, LabelSet]) -> dict[HostId, float]:
    by_key = {(p.host, p.category): p for p in preds}
    out = {}
    for host, labels in assigned.items():
        p = by_key.get((host, labels.genre))
        if p is None:
            raise DataError(f"no prediction for host {host!r} in its assigned genre")
        out[host] = p.positive_score
    return out


__all__ = [
    "read_assignments",
    "read_predictions",
    "read_quality_ranking",
    "rankings_from_predictions",
    "genre_confidences",
    "write_assignments",
    "write_category_rankings",
    "write_predictions",
    "write_quality_ranking",
    "write_report",
]
