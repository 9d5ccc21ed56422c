"""Class-Feature-Centroid classifier over tf-idf term vectors.

Centroid weight of term t in category c is

    b ** (DF(t, c) / |c|) * ln(|C| / CF(t))

where DF(t, c) counts category-c documents containing t, |c| is the number of
category-c documents, |C| the number of categories and CF(t) the number of
categories with at least one document containing t. Documents are matched to
centroids by cosine similarity.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Optional, Sequence

from .core import Category, DataError, HostId, Prediction, Source, SparseTermVector


@dataclass(frozen=True)
class CfcModel:
    categories: tuple[str, ...]
    centroids: Mapping[str, Mapping[int, float]]
    b: float = math.e
    _norms: Mapping[str, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.b <= 1.0:
            raise ValueError("b must exceed 1")
        norms = {}
        for c in self.categories:
            weights = self.centroids.get(c, {})
            if any(w < 0 for w in weights.values()):
                raise ValueError("centroid weights must be non-negative")
            norms[c] = math.sqrt(sum(w * w for w in weights.values()))
        object.__setattr__(self, "_norms", norms)

    def norm(self, category: str) -> float:
        return self._norms[category]

    def dumps(self) -> str:
        lines = ["cfc/1", f"b\t{self.b!r}", "categories\t" + "\t".join(self.categories)]
        for c in self.categories:
            weights = self.centroids.get(c, {})
            body = " ".join(f"{t}:{weights[t]!r}" for t in sorted(weights))
            lines.append(f"{c}\t{body}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "CfcModel":
        lines = text.splitlines()
        if len(lines) < 3 or lines[0] != "cfc/1":
            raise DataError("not a cfc/1 document")
        b = float(lines[1].split("\t")[1])
        categories = tuple(lines[2].split("\t")[1:])
        centroids: dict[str, dict[int, float]] = {}
        for line in lines[3:]:
            cat, _, body = line.partition("\t")
            if cat not in categories:
                raise DataError(f"centroid for undeclared category {cat!r}")
            weights = {}
            for tok in body.split():
                t, _, w = tok.partition(":")
                weights[int(t)] = float(w)
            centroids[cat] = weights
        return cls(categories, centroids, b)


def _present_terms(doc: SparseTermVector) -> set[int]:
    return {t for t, tf in zip(doc.ids, doc.tfs) if tf > 0}


def build_centroids(docs: Sequence[tuple[SparseTermVector, Hashable]], b: float = math.e) -> CfcModel:
    if b <= 1.0:
        raise ValueError("b must exceed 1")
    if not docs:
        raise DataError("cannot build centroids from an empty corpus")
    categories = tuple(sorted({str(c) for _, c in docs}))
    if len(categories) < 2:
        raise DataError("CFC needs at least two categories")
    size: dict[str, int] = defaultdict(int)
    df: dict[str, dict[int, int]] = {c: defaultdict(int) for c in categories}
    for doc, cat in docs:
        cat = str(cat)
        size[cat] += 1
        for t in _present_terms(doc):
            df[cat][t] += 1
    cf: dict[int, int] = defaultdict(int)
    for cat in categories:
        for t in df[cat]:
            cf[t] += 1
    n_cat = len(categories)
    centroids: dict[str, dict[int, float]] = {}
    for cat in categories:
        weights = {}
        for t in sorted(cf):
            if cf[t] == n_cat:
                continue
            inter = math.log(n_cat / cf[t])
            weights[t] = b ** (df[cat].get(t, 0) / size[cat]) * inter
        centroids[cat] = weights
    return CfcModel(categories, centroids, b)


def classify_cfc(model: CfcModel, doc: SparseTermVector) -> list[tuple[str, float]]:
    """Cosine similarity of the document's tf-idf weights to every centroid."""
    if not doc.is_weighted:
        raise DataError("CFC classification needs tf-idf weighted documents")
    weights = doc.weight_map()
    doc_norm = math.sqrt(sum(w * w for w in weights.values()))
    scores = []
    for cat in model.categories:
        cnorm = model.norm(cat)
        if doc_norm == 0.0 or cnorm == 0.0:
            scores.append((cat, 0.0))
            continue
        centroid = model.centroids[cat]
        dot = sum(w * centroid.get(t, 0.0) for t, w in weights.items())
        scores.append((cat, dot / (doc_norm * cnorm)))
    return scores


POSITIVE = "positive"
NEGATIVE = "negative"


def cfc_binary(
    model: CfcModel,
    doc: SparseTermVector,
    host: Optional[HostId] = None,
    category: Optional[Category] = None,
) -> Prediction:
    """Binary decision for a model built on POSITIVE/NEGATIVE documents.

    Exact score ties predict negative; with both scores zero the confidence is 0.5.
    """
    scores = dict(classify_cfc(model, doc))
    pos, neg = scores.get(POSITIVE, 0.0), scores.get(NEGATIVE, 0.0)
    total = pos + neg
    confidence = pos / total if total > 0 else 0.5
    positive = pos > neg
    return Prediction(host, category, positive, confidence if positive else 1.0 - confidence, Source.CFC)
