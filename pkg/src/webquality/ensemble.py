"""Per-category three-classifier ensemble with majority voting.

Each category gets a one-vs-rest binary problem. A decision tree sees the
normalized link+content features (minority class SMOTE-oversampled), the CFC
sees tf-idf term vectors, and the linear SVM sees normalized page-level NLP
vectors. Votes are combined by majority; the winning side's highest confidence
becomes the ensemble confidence.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .cfc import NEGATIVE, POSITIVE, CfcModel, build_centroids, cfc_binary
from .core import (
    Category,
    DataError,
    Facet,
    FeatureBlock,
    Genre,
    HostId,
    LabelSet,
    Prediction,
    RankedList,
    Source,
    category_universe,
    facet_level,
    parse_category,
)
from .dtree import DecisionTree, TreeConfig, predict_tree, train_tree
from .ingest import Dataset, HostRecord
from .linsvm import SvmConfig, SvmModel, host_score_from_pages, train_svm
from .preprocess import NormalizationModel, SmoteConfig, apply_normalizer, fit_normalizer, smote_oversample

log = logging.getLogger(__name__)

NEWS_FACTOR = 0.4
# News confidence is lowered when more than this many pairwise models say non-News
NEWS_VETO_COUNT = 2

GENRES = [c for c in category_universe() if isinstance(c, Genre)]
FACETS = [c for c in category_universe() if isinstance(c, Facet)]


@dataclass(frozen=True)
class EnsembleConfig:
    tree: TreeConfig = TreeConfig()
    smote: SmoteConfig = SmoteConfig()
    svm: SvmConfig = SvmConfig()
    cfc_b: float = float(np.e)
    multilingual: bool = False
    news_postprocess: bool = False
    jobs: int = 1


@dataclass(frozen=True)
class CategoryModel:
    """The (up to) three sub-models for one binary problem."""

    tree: Optional[DecisionTree] = None
    dense_norm: Optional[NormalizationModel] = None
    cfc: Optional[CfcModel] = None
    svm: Optional[SvmModel] = None
    nlp_norm: Optional[NormalizationModel] = None

    @property
    def n_models(self) -> int:
        return sum(m is not None for m in (self.tree, self.cfc, self.svm))


@dataclass(frozen=True)
class EnsembleModel:
    categories: Mapping[Category, CategoryModel]
    multilingual: bool = False
    # News-vs-genre models, present only when trained for News post-processing
    pairwise: Optional[Mapping[Genre, CategoryModel]] = None

    def __post_init__(self):
        for c, m in self.categories.items():
            if m.n_models == 0:
                raise ValueError(f"no classifier for category {c.value}")
            if self.multilingual and (m.cfc is not None or m.svm is not None):
                raise ValueError("multilingual models hold trees only")

    @property
    def n_submodels(self) -> int:
        return sum(m.n_models for m in self.categories.values())


@dataclass(frozen=True)
class VoteResult:
    host: HostId
    category: Category
    votes: Mapping[Source, bool]
    winner: bool
    confidence: float
    predictions: tuple[Prediction, ...] = field(default=(), compare=False, repr=False)

    @property
    def positive_score(self) -> float:
        return self.confidence if self.winner else 1.0 - self.confidence


# -- training ---------------------------------------------------------------


def _binary_targets(train: Dataset, category: Category) -> list[tuple[HostRecord, bool]]:
    out = []
    for h in train.hosts:
        labels = train.labels.get(h.id)
        member = None if labels is None else labels.membership(category)
        if member is not None:
            out.append((h, member))
    return out


def _train_tree_part(rows: np.ndarray, y: np.ndarray, cfg: EnsembleConfig):
    norm = fit_normalizer(rows)
    X = apply_normalizer(norm, rows)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos != n_neg:
        minority_label = 1 if n_pos < n_neg else 0
        minority = X[y == minority_label]
        if len(minority) >= 2:
            synth = smote_oversample(minority, cfg.smote)
            X = np.vstack([X, synth])
            y = np.concatenate([y, np.full(len(synth), minority_label)])
        else:
            log.warning("minority class has %d sample(s); SMOTE skipped", len(minority))
    return train_tree(X, y, cfg.tree), norm


def _page_rows(train: Dataset, items: Sequence[tuple[HostRecord, bool]]):
    rows, ys = [], []
    for h, member in items:
        for block in train.pages_for(h.id):
            rows.append(block.values)
            ys.append(1.0 if member else -1.0)
    return rows, np.asarray(ys)


def train_binary(
    train: Dataset,
    items: Sequence[tuple[HostRecord, bool]],
    cfg: EnsembleConfig,
    name: str,
) -> CategoryModel:
    """Train the sub-models for one binary problem given (host, is_positive) pairs."""
    y = np.array([1 if m else 0 for _, m in items], dtype=np.int64)
    if y.sum() == 0 or y.sum() == len(y):
        raise DataError(f"category {name} needs both positive and negative training hosts")
    rows = np.array([h.dense() for h, _ in items], dtype=float)
    tree, dense_norm = _train_tree_part(rows, y, cfg)
    if cfg.multilingual:
        return CategoryModel(tree=tree, dense_norm=dense_norm)

    cfc = None
    if train.dictionary is not None:
        docs = [(h.terms, POSITIVE if m else NEGATIVE) for h, m in items]
        cfc = build_centroids(docs, cfg.cfc_b)

    svm = nlp_norm = None
    page_rows, page_y = _page_rows(train, items)
    if len(page_rows) and (page_y > 0).any() and (page_y < 0).any():
        nlp_norm = fit_normalizer(page_rows)
        svm = train_svm(apply_normalizer(nlp_norm, np.asarray(page_rows)), page_y, cfg.svm)
    elif train.pages:
        log.warning("category %s: pages cover only one class; SVM skipped", name)
    return CategoryModel(tree, dense_norm, cfc, svm, nlp_norm)


def _run(jobs: int, fn: Callable, args: Sequence) -> list:
    if jobs > 1 and len(args) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, args))
    return [fn(a) for a in args]


def train_ensemble(
    train: Dataset,
    cfg: EnsembleConfig = EnsembleConfig(),
    categories: Optional[Sequence[Category]] = None,
) -> EnsembleModel:
    categories = list(categories or category_universe())

    def fit(category: Category) -> CategoryModel:
        items = _binary_targets(train, category)
        return train_binary(train, items, cfg, category.value)

    models = dict(zip(categories, _run(cfg.jobs, fit, categories)))

    pairwise = None
    if cfg.news_postprocess:
        others = [g for g in GENRES if g is not Genre.NEWS_EDITORIAL]

        def fit_pair(other: Genre) -> CategoryModel:
            items = []
            for h in train.hosts:
                lab = train.labels.get(h.id)
                if lab is not None and lab.genre in (Genre.NEWS_EDITORIAL, other):
                    items.append((h, lab.genre is Genre.NEWS_EDITORIAL))
            return train_binary(train, items, cfg, f"{Genre.NEWS_EDITORIAL.value}-vs-{other.value}")

        pairwise = dict(zip(others, _run(cfg.jobs, fit_pair, others)))
    return EnsembleModel(models, cfg.multilingual, pairwise)


# -- voting -----------------------------------------------------------------


def sub_predictions(
    m: CategoryModel,
    host: HostRecord,
    pages: Sequence[FeatureBlock] = (),
    category: Optional[Category] = None,
    use_terms: bool = True,
) -> list[Prediction]:
    preds = []
    if m.tree is not None:
        v = apply_normalizer(m.dense_norm, np.asarray(host.dense(), dtype=float))
        preds.append(predict_tree(m.tree, v, host.id, category))
    if m.cfc is not None and use_terms and host.terms.is_weighted:
        preds.append(cfc_binary(m.cfc, host.terms, host.id, category))
    if m.svm is not None and pages:
        X = apply_normalizer(m.nlp_norm, np.asarray([b.values for b in pages], dtype=float))
        preds.append(host_score_from_pages(m.svm.margins(X).tolist(), host.id, category))
    return preds


def combine_votes(preds: Sequence[Prediction]) -> tuple[bool, float]:
    """Majority decision and the highest confidence on the winning side.

    A split vote (two voters disagreeing) goes to the more confident voter and
    to the negative side when their confidences are equal.
    """
    if not preds:
        raise DataError("no classifier available to vote")
    pos = [p.confidence for p in preds if p.positive]
    neg = [p.confidence for p in preds if not p.positive]
    if len(pos) != len(neg):
        winner = len(pos) > len(neg)
    else:
        winner = max(pos) > max(neg)
    return winner, max(pos if winner else neg)


def vote(
    m: EnsembleModel,
    host: HostRecord,
    category: Category,
    pages: Sequence[FeatureBlock] = (),
    use_terms: bool = True,
) -> VoteResult:
    preds = sub_predictions(m.categories[category], host, pages, category, use_terms and not m.multilingual)
    winner, confidence = combine_votes(preds)
    votes = {p.source: p.positive for p in preds}
    return VoteResult(host.id, category, votes, winner, confidence, tuple(preds))


def assign_genre(results: Mapping[Genre, VoteResult]) -> tuple[Genre, float]:
    """Most confident positive genre; failing that, the genre with the weakest negative."""
    missing = [g for g in GENRES if g not in results]
    if missing:
        raise DataError(f"missing genre vote(s): {[g.value for g in missing]}")
    positives = [(results[g].confidence, -i, g) for i, g in enumerate(GENRES) if results[g].winner]
    if positives:
        conf, _, genre = max(positives)
        return genre, conf
    evidence = [(1.0 - results[g].confidence, -i, g) for i, g in enumerate(GENRES)]
    conf, _, genre = max(evidence)
    return genre, conf


def downweight_news(news_confidence: float, non_news_votes: int) -> float:
    if non_news_votes > NEWS_VETO_COUNT:
        return news_confidence * NEWS_FACTOR
    return news_confidence


def news_postprocess(
    m: EnsembleModel,
    host: HostRecord,
    news_confidence: float,
    pages: Sequence[FeatureBlock] = (),
    use_terms: bool = True,
) -> float:
    """Lower a News confidence when most News-vs-genre models disagree."""
    others = [g for g in GENRES if g is not Genre.NEWS_EDITORIAL]
    if m.pairwise is None or any(g not in m.pairwise for g in others):
        raise DataError("News post-processing needs the five News-vs-genre models")
    non_news = 0
    for g in others:
        preds = sub_predictions(m.pairwise[g], host, pages, Genre.NEWS_EDITORIAL, use_terms and not m.multilingual)
        is_news, _ = combine_votes(preds)
        non_news += not is_news
    return downweight_news(news_confidence, non_news)


@dataclass(frozen=True)
class EnsembleOutput:
    results: Mapping[Category, Mapping[HostId, VoteResult]]
    rankings: Mapping[Category, RankedList]
    assigned: Mapping[HostId, LabelSet]
    genre_confidence: Mapping[HostId, float]

    def predictions(self) -> list[Prediction]:
        out = []
        for c in self.results:
            for h in sorted(self.results[c]):
                r = self.results[c][h]
                out.append(Prediction(h, c, r.winner, r.confidence, Source.ENSEMBLE))
        return out


def predict_all(
    m: EnsembleModel,
    test: Dataset,
    news_postprocess_enabled: bool = False,
    jobs: int = 1,
) -> EnsembleOutput:
    use_terms = test.dictionary is not None
    categories = list(m.categories)

    def run(category: Category) -> dict[HostId, VoteResult]:
        return {h.id: vote(m, h, category, test.pages_for(h.id), use_terms) for h in test.hosts}

    results = dict(zip(categories, _run(jobs, run, categories)))

    assigned: dict[HostId, LabelSet] = {}
    genre_conf: dict[HostId, float] = {}
    if all(g in results for g in GENRES):
        for h in test.hosts:
            genre, _ = assign_genre({g: results[g][h.id] for g in GENRES})
            levels = {f: facet_level(f, results[f][h.id].winner) for f in FACETS if f in results}
            assigned[h.id] = LabelSet(
                genre, levels.get(Facet.NEUTRALITY), levels.get(Facet.BIAS), levels.get(Facet.TRUSTINESS)
            )

    if news_postprocess_enabled and Genre.NEWS_EDITORIAL in results:
        news = dict(results[Genre.NEWS_EDITORIAL])
        for h in test.hosts:
            r = news[h.id]
            if r.winner:
                lowered = news_postprocess(m, h, r.confidence, test.pages_for(h.id), use_terms)
                news[h.id] = dataclasses.replace(r, confidence=lowered)
        results[Genre.NEWS_EDITORIAL] = news

    # genre confidence follows the final (possibly lowered) score of the assigned genre
    for h, labels in assigned.items():
        genre_conf[h] = results[labels.genre][h].positive_score

    rankings = {
        c: RankedList.from_scores({h: r.positive_score for h, r in results[c].items()}) for c in categories
    }
    return EnsembleOutput(results, rankings, assigned, genre_conf)


# -- persistence ------------------------------------------------------------


def _slug(name: str) -> str:
    return name.lower().replace("/", "_").replace(" ", "_")


def _save_part(directory: Path, stem: str, m: CategoryModel) -> dict:
    entry = {}
    parts = {
        "tree": (m.tree, ".dtree"),
        "dense_norm": (m.dense_norm, ".dense.minmax"),
        "cfc": (m.cfc, ".cfc"),
        "svm": (m.svm, ".linsvm"),
        "nlp_norm": (m.nlp_norm, ".nlp.minmax"),
    }
    for key, (obj, suffix) in parts.items():
        if obj is not None:
            fname = stem + suffix
            (directory / fname).write_text(obj.dumps(), encoding="utf-8")
            entry[key] = fname
    return entry


def _load_part(directory: Path, entry: Mapping[str, str]) -> CategoryModel:
    loaders = {
        "tree": DecisionTree.loads,
        "dense_norm": NormalizationModel.loads,
        "cfc": CfcModel.loads,
        "svm": SvmModel.loads,
        "nlp_norm": NormalizationModel.loads,
    }
    kwargs = {k: loaders[k]((directory / f).read_text(encoding="utf-8")) for k, f in entry.items()}
    return CategoryModel(**kwargs)


def save_ensemble(m: EnsembleModel, directory: os.PathLike) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    manifest = {"format": "ensemble/1", "multilingual": m.multilingual, "categories": {}, "pairwise": None}
    for c, cm in m.categories.items():
        manifest["categories"][c.value] = _save_part(d, _slug(c.value), cm)
    if m.pairwise is not None:
        manifest["pairwise"] = {
            g.value: _save_part(d, "news-vs-" + _slug(g.value), cm) for g, cm in m.pairwise.items()
        }
    (d / "ensemble.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_ensemble(directory: os.PathLike) -> EnsembleModel:
    d = Path(directory)
    path = d / "ensemble.json"
    if not path.exists():
        raise FileNotFoundError(f"model manifest not found: {path}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    if manifest.get("format") != "ensemble/1":
        raise DataError(f"{path}: not an ensemble/1 manifest")
    cats = {parse_category(k): _load_part(d, v) for k, v in manifest["categories"].items()}
    ordered = {c: cats[c] for c in category_universe() if c in cats}
    pairwise = None
    if manifest.get("pairwise"):
        pairwise = {parse_category(k): _load_part(d, v) for k, v in manifest["pairwise"].items()}
    return EnsembleModel(ordered, manifest["multilingual"], pairwise)
