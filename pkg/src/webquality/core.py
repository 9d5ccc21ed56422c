"""Shared domain vocabulary: hosts, feature blocks, labels, predictions, rankings."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

HostId = str

# Term ids live in [0, MAX_TERMS); the challenge dictionary held the top 50,000 terms.
MAX_TERMS = 50_000


class DataError(ValueError):
    """Input data violates a documented format or precondition."""


class ParseError(DataError):
    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class FeatureKind(enum.Enum):
    LINK = "link"
    CONTENT = "content"
    NLP = "nlp"

    @property
    def reference_dim(self) -> int:
        """Feature count of this family in the challenge data release."""
        return {FeatureKind.LINK: 176, FeatureKind.CONTENT: 95, FeatureKind.NLP: 180}[self]


class Genre(enum.Enum):
    WEB_SPAM = "WebSpam"
    NEWS_EDITORIAL = "News/Editorial"
    COMMERCIAL = "Commercial"
    EDUCATIONAL_RESEARCH = "Educational/Research"
    DISCUSSION = "Discussion"
    PERSONAL_LEISURE = "Personal/Leisure"


class Facet(enum.Enum):
    NEUTRALITY = "Neutrality"
    BIAS = "Bias"
    TRUSTINESS = "Trustiness"

    @property
    def positive_level(self) -> int:
        """Level that counts as the positive class in the binary training view."""
        return 1 if self is Facet.BIAS else 3


Category = Union[Genre, Facet]

_CATEGORY_ORDER: tuple[Category, ...] = (
    Genre.WEB_SPAM,
    Genre.NEWS_EDITORIAL,
    Genre.COMMERCIAL,
    Genre.EDUCATIONAL_RESEARCH,
    Genre.DISCUSSION,
    Genre.PERSONAL_LEISURE,
    Facet.TRUSTINESS,
    Facet.BIAS,
    Facet.NEUTRALITY,
)


def category_universe() -> list[Category]:
    """The six genres followed by the three facets, in reporting order."""
    return list(_CATEGORY_ORDER)


def parse_category(name: str) -> Category:
    for c in _CATEGORY_ORDER:
        if c.value == name:
            return c
    raise DataError(f"unknown category {name!r}")


def category_index(c: Category) -> int:
    return _CATEGORY_ORDER.index(c)


class Source(enum.Enum):
    TREE = "tree"
    CFC = "cfc"
    SVM = "svm"
    ENSEMBLE = "ensemble"


@dataclass(frozen=True)
class FeatureBlock:
    kind: FeatureKind
    names: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.names) != len(self.values):
            raise DataError(
                f"{self.kind.value} block has {len(self.names)} names but {len(self.values)} values"
            )
        if not all(math.isfinite(v) for v in self.values):
            raise DataError(f"{self.kind.value} block contains non-finite values")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SparseTermVector:
    """Host-level term counts, optionally carrying tf-idf weights."""

    ids: tuple[int, ...] = ()
    tfs: tuple[int, ...] = ()
    weights: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if len(self.ids) != len(self.tfs):
            raise DataError("term ids and tfs differ in length")
        if self.weights is not None and len(self.weights) != len(self.ids):
            raise DataError("term weights differ in length from ids")
        for a, b in zip(self.ids, self.ids[1:]):
            if a >= b:
                raise DataError("term ids must be strictly ascending")
        if self.ids and (self.ids[0] < 0 or self.ids[-1] >= MAX_TERMS):
            raise DataError(f"term id outside [0, {MAX_TERMS})")
        if any(tf < 0 for tf in self.tfs):
            raise DataError("negative term frequency")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "SparseTermVector":
        pairs = sorted(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    @property
    def entries(self) -> list[tuple[int, int]]:
        return list(zip(self.ids, self.tfs))

    @property
    def is_weighted(self) -> bool:
        return self.weights is not None

    def weight_map(self) -> dict[int, float]:
        if self.weights is None:
            raise DataError("term vector carries no tf-idf weights")
        return dict(zip(self.ids, self.weights))

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class Dictionary:
    """term_id -> (term, df), plus the page count used for idf."""

    entries: Mapping[int, tuple[str, int]]
    corpus_size: int

    def __post_init__(self):
        if self.corpus_size <= 0:
            raise DataError("corpus size must be positive")
        if len(self.entries) > MAX_TERMS:
            raise DataError(f"dictionary holds more than {MAX_TERMS} terms")
        for tid, (_, df) in self.entries.items():
            if not 0 <= tid < MAX_TERMS:
                raise DataError(f"term id {tid} outside [0, {MAX_TERMS})")
            if df > self.corpus_size:
                raise DataError(f"term {tid}: df {df} exceeds corpus size {self.corpus_size}")

    def __contains__(self, term_id: int) -> bool:
        return term_id in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def df(self, term_id: int) -> int:
        return self.entries[term_id][1]


_LEVELS = (1, 2, 3)


@dataclass(frozen=True)
class LabelSet:
    """Ground truth (or prediction) for one host. ``None`` marks a missing field."""

    genre: Optional[Genre] = None
    neutrality: Optional[int] = None
    bias: Optional[int] = None
    trust: Optional[int] = None

    def __post_init__(self):
        for name in ("neutrality", "bias", "trust"):
            level = getattr(self, name)
            if level is not None and level not in _LEVELS:
                raise DataError(f"{name} level {level!r} not in {{1,2,3}}")

    def level(self, facet: Facet) -> Optional[int]:
        return {
            Facet.NEUTRALITY: self.neutrality,
            Facet.BIAS: self.bias,
            Facet.TRUSTINESS: self.trust,
        }[facet]

    def membership(self, category: Category) -> Optional[bool]:
        """Binary one-vs-rest view of this label set; ``None`` when the label is missing."""
        if isinstance(category, Genre):
            return None if self.genre is None else self.genre is category
        level = self.level(category)
        return None if level is None else level == category.positive_level

    @property
    def complete(self) -> bool:
        return None not in (self.genre, self.neutrality, self.bias, self.trust)


def facet_level(facet: Facet, positive: bool) -> int:
    """Map a binary facet decision back onto the 1-3 scale (level 2 is never emitted)."""
    if facet is Facet.BIAS:
        return 1 if positive else 3
    return 3 if positive else 1


@dataclass(frozen=True)
class Prediction:
    """One binary decision. Single classifiers may leave host/category unset."""

    host: Optional[HostId]
    category: Optional[Category]
    positive: bool
    confidence: float
    source: Source

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence!r} outside [0, 1]")

    @property
    def positive_score(self) -> float:
        """Confidence expressed on the positive-class scale, for ranking."""
        return self.confidence if self.positive else 1.0 - self.confidence

    def to_tsv(self) -> str:
        decision = "+1" if self.positive else "-1"
        return f"{self.host}\t{self.category.value}\t{decision}\t{self.confidence!r}"

    @classmethod
    def from_tsv(cls, line: str, source: Source = Source.ENSEMBLE) -> "Prediction":
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 4:
            raise DataError(f"prediction line needs 4 fields, got {len(parts)}")
        host, cat, decision, conf = parts
        if decision not in ("+1", "-1"):
            raise DataError(f"bad decision {decision!r}")
        return cls(host, parse_category(cat), decision == "+1", float(conf), source)


@dataclass(frozen=True)
class RankedItem:
    host: HostId
    score: float
    gain: float = 0.0


@dataclass(frozen=True)
class RankedList:
    items: tuple[RankedItem, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for a, b in zip(self.items, self.items[1:]):
            if b.score > a.score:
                raise ValueError("ranked list scores must be non-increasing")
        if any(it.gain < 0 for it in self.items):
            raise ValueError("gains must be non-negative")

    @classmethod
    def from_scores(
        cls,
        scores: Mapping[HostId, float],
        gains: Optional[Mapping[HostId, float]] = None,
    ) -> "RankedList":
        """Sort hosts by score descending; equal scores fall back to ascending host id."""
        order = sorted(scores, key=lambda h: (-scores[h], h))
        gains = gains or {}
        return cls(tuple(RankedItem(h, scores[h], float(gains.get(h, 0.0))) for h in order))

    def with_gains(self, gains: Mapping[HostId, float]) -> "RankedList":
        return RankedList(tuple(RankedItem(it.host, it.score, float(gains[it.host])) for it in self.items))

    @property
    def hosts(self) -> list[HostId]:
        return [it.host for it in self.items]

    @property
    def gains(self) -> list[float]:
        return [it.gain for it in self.items]

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


def validate_host_id(host: str) -> HostId:
    if not host or any(ch in host for ch in "\t\n\r"):
        raise DataError(f"invalid host id {host!r}")
    return host
