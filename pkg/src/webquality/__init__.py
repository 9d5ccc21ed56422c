"""Genre, facet and utility ranking of web hosts with an ensemble of classifiers."""

from .core import (
    DataError,
    Facet,
    FeatureKind,
    Genre,
    LabelSet,
    ParseError,
    Prediction,
    RankedItem,
    RankedList,
    category_universe,
)
from .evaluation import Task, UndefinedMetricError, dcg, ndcg
from .quality import utility_score

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "Facet",
    "FeatureKind",
    "Genre",
    "LabelSet",
    "ParseError",
    "Prediction",
    "RankedItem",
    "RankedList",
    "Task",
    "UndefinedMetricError",
    "category_universe",
    "dcg",
    "ndcg",
    "utility_score",
]
