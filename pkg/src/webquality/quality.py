"""Utility score from genre and facet levels, and quality rankings."""

from __future__ import annotations

from typing import Mapping, Optional, Sequence

from .core import DataError, Genre, HostId, LabelSet, RankedItem, RankedList
from .ensemble import EnsembleModel, predict_all
from .ingest import Dataset

GENRE_BASE = {
    Genre.NEWS_EDITORIAL: 5,
    Genre.EDUCATIONAL_RESEARCH: 5,
    Genre.DISCUSSION: 4,
    Genre.COMMERCIAL: 3,
    Genre.PERSONAL_LEISURE: 3,
    # spam gets no base value: lowest quality by default
    Genre.WEB_SPAM: 0,
}


def utility_score(genre: Genre, neutrality: int, bias: int, trust: int) -> int:
    """Genre base value plus +2 for neutrality 3, -2 for bias 1, +2 for trust 3."""
    for name, level in (("neutrality", neutrality), ("bias", bias), ("trust", trust)):
        if level not in (1, 2, 3):
            raise DataError(f"{name} level {level!r} not in {{1,2,3}}")
    if not isinstance(genre, Genre):
        raise DataError(f"not a genre: {genre!r}")
    value = GENRE_BASE[genre]
    if neutrality == 3:
        value += 2
    if bias == 1:
        value -= 2
    if trust == 3:
        value += 2
    return value


def label_utility(labels: LabelSet) -> int:
    if not labels.complete:
        raise DataError("utility score needs a genre and all three facet levels")
    return utility_score(labels.genre, labels.neutrality, labels.bias, labels.trust)


def utility_gain(score: int) -> float:
    """NDCG gains must be non-negative, so negative utility counts as zero."""
    return float(max(score, 0))


def rank_by_quality(
    hosts: Sequence[tuple[HostId, LabelSet]],
    confidences: Mapping[HostId, float],
) -> RankedList:
    """Order by utility score, then genre confidence, then host id."""
    scored = []
    for host, labels in hosts:
        scored.append((label_utility(labels), confidences.get(host, 0.0), host))
    scored.sort(key=lambda t: (-t[0], -t[1], t[2]))
    return RankedList(tuple(RankedItem(h, float(s), utility_gain(s)) for s, _, h in scored))


def multilingual_rank(m: EnsembleModel, hosts: Dataset, jobs: int = 1) -> tuple[RankedList, dict]:
    """Quality ranking from an English-trained, tree-only model.

    Returns the ranking and the per-host genre confidences that ordered ties.
    """
    if not m.multilingual:
        raise DataError("multilingual ranking needs a model trained in multilingual mode")
    out = predict_all(m, hosts, jobs=jobs)
    ranked = rank_by_quality([(h, out.assigned[h]) for h in hosts.host_ids], out.genre_confidence)
    return ranked, dict(out.genre_confidence)


def format_ranking(ranked: RankedList, confidences: Optional[Mapping[HostId, float]] = None) -> list[str]:
    confidences = confidences or {}
    rows = []
    for i, item in enumerate(ranked, start=1):
        rows.append(f"{i}\t{item.host}\t{int(item.score)}\t{confidences.get(item.host, 0.0)!r}")
    return rows
