"""DCG / NDCG and per-task evaluation reports."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

from .core import Category, DataError, HostId, LabelSet, RankedList
from .quality import label_utility, utility_gain


class UndefinedMetricError(DataError):
    """NDCG is undefined when every gain is zero."""


class Task(enum.IntEnum):
    TASK1 = 1
    TASK2 = 2
    TASK3 = 3


def dcg(gains: Sequence[float]) -> float:
    """Cumulated gain with a log2(rank) discount from rank 2 on (rank 1 undiscounted)."""
    total = 0.0
    for rank, g in enumerate(gains, start=1):
        if not math.isfinite(g) or g < 0:
            raise DataError(f"gain at rank {rank} must be finite and non-negative, got {g!r}")
        total += g if rank == 1 else g / math.log2(rank)
    return total


def ndcg(ranked: Union[RankedList, Sequence[float]]) -> float:
    gains = ranked.gains if isinstance(ranked, RankedList) else list(ranked)
    ideal = dcg(sorted(gains, reverse=True))
    if ideal == 0.0:
        raise UndefinedMetricError("NDCG undefined: all gains are zero")
    return dcg(gains) / ideal


@dataclass(frozen=True)
class NdcgReport:
    task: Task
    scores: Mapping[str, float]
    average: Optional[float] = None

    def rows(self) -> list[str]:
        out = [f"{name}\t{value!r}" for name, value in self.scores.items()]
        if self.average is not None:
            out.append(f"average\t{self.average!r}")
        return out


def _truth(truth: Mapping[HostId, LabelSet], host: HostId) -> LabelSet:
    if host not in truth:
        raise DataError(f"no ground truth for host {host!r}")
    return truth[host]


def membership_gains(ranked: RankedList, category: Category, truth: Mapping[HostId, LabelSet]) -> RankedList:
    gains = {}
    for host in ranked.hosts:
        member = _truth(truth, host).membership(category)
        if member is None:
            raise DataError(f"no ground truth for host {host!r} in category {category.value}")
        gains[host] = 1.0 if member else 0.0
    return ranked.with_gains(gains)


def utility_gains(ranked: RankedList, truth: Mapping[HostId, LabelSet]) -> RankedList:
    gains = {}
    for host in ranked.hosts:
        labels = _truth(truth, host)
        if not labels.complete:
            raise DataError(f"incomplete ground truth for host {host!r}")
        gains[host] = utility_gain(label_utility(labels))
    return ranked.with_gains(gains)


def report(
    task: Task,
    rankings: Mapping[Union[Category, str], RankedList],
    truth: Mapping[HostId, LabelSet],
) -> NdcgReport:
    """NDCG per ranking with gains from the ground truth.

    Task 1 uses binary category membership and also reports the mean over
    categories; Tasks 2 and 3 use the (non-negative) true utility score.
    """
    task = Task(task)
    scores: dict[str, float] = {}
    for key, ranked in rankings.items():
        if task is Task.TASK1:
            name = key.value
            scores[name] = ndcg(membership_gains(ranked, key, truth))
        else:
            name = key if isinstance(key, str) else key.value
            scores[name] = ndcg(utility_gains(ranked, truth))
    average = None
    if task is Task.TASK1 and scores:
        average = sum(scores.values()) / len(scores)
    return NdcgReport(task, scores, average)
