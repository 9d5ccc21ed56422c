"""Synthetic datasets with planted signal, and end-to-end task runs.

The generator mirrors the one-vs-rest class rates of the challenge training
data. Every category owns a disjoint slice of features in each dense family
(Gaussian mean shift for its positive hosts) and two private vocabularies
(topic words emitted by its positive resp. negative hosts), so each of the
three classifiers has something to find.
"""

from __future__ import annotations

import hashlib
import os
import shutil
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from .core import DataError, Dictionary, Facet, Genre, LabelSet, SparseTermVector, category_universe
from .ensemble import EnsembleConfig, EnsembleOutput, predict_all, train_ensemble
from .evaluation import NdcgReport, Task, report
from .ingest import (
    CONTENT_FILE,
    DICTIONARY_FILE,
    LABELS_FILE,
    LINK_FILE,
    NLP_FILE,
    TERMS_FILE,
    load_dataset,
    write_dictionary,
    write_host_features,
    write_labels,
    write_page_nlp,
    write_term_vectors,
)
from .outputs import (
    write_assignments,
    write_category_rankings,
    write_predictions,
    write_quality_ranking,
    write_report,
)
from .quality import rank_by_quality

# positive-class share per category in the English training hosts
CLASS_RATES: dict[str, float] = {
    Genre.WEB_SPAM.value: 0.04,
    Genre.NEWS_EDITORIAL.value: 0.047,
    Genre.EDUCATIONAL_RESEARCH.value: 0.43,
    Genre.PERSONAL_LEISURE.value: 0.237,
    Genre.COMMERCIAL.value: 0.454,
    Genre.DISCUSSION.value: 0.053,
    Facet.BIAS.value: 0.017,
    Facet.NEUTRALITY.value: 0.966,
    Facet.TRUSTINESS.value: 0.981,
}


@dataclass(frozen=True)
class SynthSpec:
    n_train: int = 500
    n_test: int = 200
    pages_per_host: tuple[int, int] = (1, 5)
    link_dim: int = 176
    content_dim: int = 95
    nlp_dim: int = 180
    vocab_size: int = 2000
    rates: Mapping[str, float] = field(default_factory=lambda: dict(CLASS_RATES))
    signal: float = 3.0
    seed: int = 1
    planted_per_category: int = 2
    topic_words: int = 15
    background_tokens: int = 80
    topic_tokens: float = 4.0

    def __post_init__(self):
        for name, r in self.rates.items():
            if not 0.0 < r < 1.0:
                raise DataError(f"rate for {name} must lie in (0, 1), got {r}")
        missing = [c.value for c in category_universe() if c.value not in self.rates]
        if missing:
            raise DataError(f"rates missing for {missing}")
        need = len(category_universe()) * self.planted_per_category
        for name, dim in (("link", self.link_dim), ("content", self.content_dim), ("nlp", self.nlp_dim)):
            if dim < need:
                raise DataError(f"{name} dimension {dim} too small to plant {need} signal features")
        if self.vocab_size < 2 * len(category_universe()) * self.topic_words + 1:
            raise DataError("vocabulary too small to plant topic words")
        lo, hi = self.pages_per_host
        if lo < 0 or hi < lo:
            raise DataError("pages_per_host must be a non-negative (low, high) range")
        if self.signal < 0:
            raise DataError("signal strength must be non-negative")
        if min(self.n_train, self.n_test) < 2:
            raise DataError("need at least two hosts per split")

    def genre_rates(self) -> dict[Genre, float]:
        """Genre rates renormalized into a distribution (genres are exclusive)."""
        raw = {g: self.rates[g.value] for g in Genre}
        total = sum(raw.values())
        return {g: r / total for g, r in raw.items()}


def _quota(n: int, shares: Mapping, minimum: int = 1) -> dict:
    """Largest-remainder apportionment of n items over shares, each >= minimum."""
    keys = list(shares)
    exact = {k: shares[k] * n for k in keys}
    counts = {k: max(minimum, int(np.floor(exact[k]))) for k in keys}
    order = sorted(keys, key=lambda k: (-(exact[k] - np.floor(exact[k])), keys.index(k)))
    i = 0
    while sum(counts.values()) < n:
        counts[order[i % len(order)]] += 1
        i += 1
    while sum(counts.values()) > n:
        k = max(keys, key=lambda k: (counts[k] - exact[k], -keys.index(k)))
        counts[k] -= 1
    return counts


def _draw_labels(n: int, spec: SynthSpec, rng: np.random.Generator) -> list[LabelSet]:
    counts = _quota(n, spec.genre_rates())
    genres = np.array([g for g in Genre for _ in range(counts[g])], dtype=object)
    genres = genres[rng.permutation(n)]
    levels = {}
    for facet in Facet:
        n_pos = int(min(max(round(spec.rates[facet.value] * n), 1), n - 1))
        positive = np.zeros(n, dtype=bool)
        positive[rng.permutation(n)[:n_pos]] = True
        other = (2, 3) if facet is Facet.BIAS else (1, 2)
        neg_levels = rng.choice(other, size=n)
        levels[facet] = np.where(positive, facet.positive_level, neg_levels)
    return [
        LabelSet(
            genres[i],
            int(levels[Facet.NEUTRALITY][i]),
            int(levels[Facet.BIAS][i]),
            int(levels[Facet.TRUSTINESS][i]),
        )
        for i in range(n)
    ]


def _membership(labels: list[LabelSet]) -> np.ndarray:
    cats = category_universe()
    return np.array([[lab.membership(c) for c in cats] for lab in labels], dtype=bool)


def _dense(member: np.ndarray, dim: int, spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    X = rng.normal(size=(member.shape[0], dim))
    k = spec.planted_per_category
    for ci in range(member.shape[1]):
        X[member[:, ci], ci * k : (ci + 1) * k] += spec.signal
    return X


def generate(spec: SynthSpec, out_dir: os.PathLike) -> tuple[Path, Path]:
    """Write train/ and test/ dataset directories plus a manifest under out_dir."""
    out = Path(out_dir)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    cats = category_universe()
    n_cat = len(cats)
    k = spec.planted_per_category
    tw = spec.topic_words
    # vocabulary: [pos topics | neg topics | background]
    pos_topic = {ci: np.arange(ci * tw, (ci + 1) * tw) for ci in range(n_cat)}
    neg_topic = {ci: np.arange((n_cat + ci) * tw, (n_cat + ci + 1) * tw) for ci in range(n_cat)}
    background = np.arange(2 * n_cat * tw, spec.vocab_size)
    bg_weights = 1.0 / np.arange(1, len(background) + 1)
    bg_weights /= bg_weights.sum()

    splits = {}
    page_term_counts: dict[int, int] = {}
    n_term_pages = 0
    for split, n in (("train", spec.n_train), ("test", spec.n_test)):
        labels = _draw_labels(n, spec, rng)
        member = _membership(labels)
        link = _dense(member, spec.link_dim, spec, rng)
        content = _dense(member, spec.content_dim, spec, rng)
        hosts = [f"{split}-host-{i:05d}.eu" for i in range(n)]
        lo, hi = spec.pages_per_host
        pages = {}
        terms = {}
        for i, host in enumerate(hosts):
            n_pages = int(rng.integers(lo, hi + 1))
            shift = np.zeros(spec.nlp_dim)
            for ci in np.flatnonzero(member[i]):
                shift[ci * k : (ci + 1) * k] += spec.signal
            rows = rng.normal(size=(n_pages, spec.nlp_dim)) + shift
            pages[host] = [(f"http://{host}/page{p}", rows[p]) for p in range(n_pages)]

            tf: dict[int, int] = {}
            for p in range(max(n_pages, 1)):
                page_tf: dict[int, int] = {}
                for t in rng.choice(background, size=spec.background_tokens // max(n_pages, 1) + 1, p=bg_weights):
                    page_tf[int(t)] = page_tf.get(int(t), 0) + 1
                for ci in range(n_cat):
                    pool = pos_topic[ci] if member[i, ci] else neg_topic[ci]
                    count = int(rng.poisson(spec.signal * spec.topic_tokens / max(n_pages, 1)))
                    for t in rng.choice(pool, size=count):
                        page_tf[int(t)] = page_tf.get(int(t), 0) + 1
                for t, c in page_tf.items():
                    tf[t] = tf.get(t, 0) + c
                    page_term_counts[t] = page_term_counts.get(t, 0) + 1
                n_term_pages += 1
            terms[host] = SparseTermVector.from_pairs(tf.items())
        splits[split] = (hosts, labels, link, content, pages, terms)

    dictionary = Dictionary({t: (f"w{t:05d}", df) for t, df in sorted(page_term_counts.items())}, n_term_pages)
    link_names = [f"link_{j:03d}" for j in range(spec.link_dim)]
    content_names = [f"content_{j:03d}" for j in range(spec.content_dim)]
    nlp_names = [f"nlp_{j:03d}" for j in range(spec.nlp_dim)]

    dirs = []
    for split, (hosts, labels, link, content, pages, terms) in splits.items():
        d = out / split
        if d.exists():
            shutil.rmtree(d)
        d.mkdir(parents=True)
        write_host_features(d / LINK_FILE, link_names, dict(zip(hosts, link.tolist())))
        write_host_features(d / CONTENT_FILE, content_names, dict(zip(hosts, content.tolist())))
        write_page_nlp(d / NLP_FILE, nlp_names, {h: [(u, r.tolist()) for u, r in pages[h]] for h in hosts})
        write_dictionary(d / DICTIONARY_FILE, dictionary)
        write_term_vectors(d / TERMS_FILE, terms)
        write_labels(d / LABELS_FILE, dict(zip(hosts, labels)))
        dirs.append(d)
    files = [f for d in dirs for f in _dataset_files(d)]
    write_manifest(out / "manifest.txt", {"generator": "synth/1", **_flat(asdict(spec))}, files)
    return dirs[0], dirs[1]


def _flat(d: Mapping) -> dict[str, str]:
    out = {}
    for key, value in d.items():
        if isinstance(value, Mapping):
            for k2, v2 in value.items():
                out[f"{key}.{k2}"] = repr(v2)
        else:
            out[key] = repr(value)
    return out


def file_digest(path: os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path: os.PathLike, settings: Mapping[str, str], files) -> None:
    """Record settings and the sha256 of each listed file (paths relative to the manifest)."""
    path = Path(path)
    lines = ["#format=manifest/1"]
    lines += [f"{k}\t{settings[k]}" for k in sorted(settings)]
    for f in files:
        rel = Path(os.path.relpath(f, path.parent)).as_posix()
        lines.append(f"sha256\t{rel}\t{file_digest(f)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _dataset_files(d: os.PathLike) -> list[Path]:
    return sorted(p for p in Path(d).iterdir() if p.is_file())


# -- task runs --------------------------------------------------------------


@dataclass
class TaskResult:
    task: Task
    output: EnsembleOutput
    report: NdcgReport
    quality_ranking: Optional[object] = None
    files: dict = field(default_factory=dict)


def run_task(
    task: Task,
    train_dir: os.PathLike,
    test_dir: os.PathLike,
    out_dir: Optional[os.PathLike] = None,
    cfg: EnsembleConfig = EnsembleConfig(),
) -> TaskResult:
    """Ingest, train, vote, assign, score, rank and evaluate one task.

    Task 3 always runs in multilingual (tree-only, link+content) mode.
    """
    task = Task(task)
    if task is Task.TASK3:
        cfg = EnsembleConfig(cfg.tree, cfg.smote, cfg.svm, cfg.cfc_b, True, cfg.news_postprocess, cfg.jobs)
    full = not cfg.multilingual
    train = load_dataset(train_dir, with_terms=full, with_pages=full)
    test = load_dataset(test_dir, with_terms=full, with_pages=full)
    if not train.labels:
        raise FileNotFoundError(f"training labels not found: {Path(train_dir) / LABELS_FILE}")
    if not test.labels:
        raise FileNotFoundError(f"test labels not found: {Path(test_dir) / LABELS_FILE}")

    model = train_ensemble(train, cfg)
    output = predict_all(model, test, cfg.news_postprocess, cfg.jobs)

    quality = None
    if task is Task.TASK1:
        rep = report(task, output.rankings, test.labels)
    else:
        quality = rank_by_quality([(h, output.assigned[h]) for h in test.host_ids], output.genre_confidence)
        name = "multilingual" if task is Task.TASK3 else "english"
        rep = report(task, {name: quality}, test.labels)

    result = TaskResult(task, output, rep, quality)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = {
            "predictions": out / "predictions.tsv",
            "genres": out / "genres.tsv",
            "category_rankings": out / "category_rankings.tsv",
            "report": out / "report.tsv",
        }
        write_predictions(files["predictions"], output)
        write_assignments(files["genres"], output)
        write_category_rankings(files["category_rankings"], output)
        if quality is not None:
            files["ranking"] = out / "ranking.tsv"
            write_quality_ranking(files["ranking"], quality, output.genre_confidence)
        write_report(files["report"], rep)
        settings = {"task": str(int(task)), **_flat(asdict(cfg))}
        inputs = _dataset_files(train_dir) + _dataset_files(test_dir)
        write_manifest(out / "run_manifest.txt", settings, inputs + list(files.values()))
        result.files = files
    return result

