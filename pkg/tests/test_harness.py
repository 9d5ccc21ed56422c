
import numpy as np
import pytest

from conftest import small_spec
from webquality.core import DataError, Facet, Genre, category_universe
from webquality.ensemble import EnsembleConfig
from webquality.evaluation import Task
from webquality.harness import CLASS_RATES, SynthSpec, file_digest, generate, run_task
from webquality.ingest import LABELS_FILE, NLP_FILE, TERMS_FILE, DICTIONARY_FILE, load_dataset


def digests(d):
    return {p.name: file_digest(p) for p in sorted(d.iterdir()) if p.is_file()}


def test_generation_is_byte_identical(tmp_path):
    a = generate(small_spec(), tmp_path / "a")
    b = generate(small_spec(), tmp_path / "b")
    for da, db in zip(a, b):
        assert digests(da) == digests(db)
    c = generate(small_spec(seed=4), tmp_path / "c")
    assert digests(a[0]) != digests(c[0])


def test_label_rates_follow_table(tmp_path):
    n = 1000
    train, _ = generate(small_spec(n_train=n, n_test=10), tmp_path)
    labels = load_dataset(train, with_terms=False, with_pages=False).labels
    genre_total = sum(CLASS_RATES[g.value] for g in Genre)
    for c in category_universe():
        rate = CLASS_RATES[c.value]
        if isinstance(c, Genre):
            rate /= genre_total
        observed = sum(lab.membership(c) for lab in labels.values()) / n
        sd = np.sqrt(rate * (1 - rate) / n)
        assert abs(observed - rate) <= 3 * sd, c


def test_planted_shift_and_null_model(tmp_path):
    for signal, planted in ((3.0, True), (0.0, False)):
        train, _ = generate(small_spec(n_train=400, signal=signal), tmp_path / str(signal))
        ds = load_dataset(train, with_terms=False, with_pages=False)
        X = np.array([ds.host(h).link.values for h in ds.host_ids])
        commercial = np.array([ds.labels[h].genre is Genre.COMMERCIAL for h in ds.host_ids])
        ci = category_universe().index(Genre.COMMERCIAL)
        cols = X[:, ci * 2 : ci * 2 + 2]
        diff = cols[commercial].mean(axis=0) - cols[~commercial].mean(axis=0)
        se = np.sqrt(1 / commercial.sum() + 1 / (~commercial).sum())
        if planted:
            assert np.all(np.abs(diff - signal) <= 3 * se)
        else:
            assert np.all(np.abs(diff) <= 3 * se)


def test_spec_validation():
    with pytest.raises(DataError):
        SynthSpec(link_dim=4)
    with pytest.raises(DataError):
        SynthSpec(signal=-1.0)
    with pytest.raises(DataError):
        SynthSpec(rates={"Commercial": 0.5})
    with pytest.raises(DataError):
        SynthSpec(n_train=1)


def test_run_task_deterministic_and_writes_outputs(small_corpus, tmp_path):
    train, test = small_corpus
    a = run_task(Task.TASK2, train, test, tmp_path / "a")
    b = run_task(Task.TASK2, train, test, tmp_path / "b")
    assert set(a.files) == {"predictions", "genres", "category_rankings", "report", "ranking"}
    for key in a.files:
        assert a.files[key].read_bytes() == b.files[key].read_bytes()
    assert 0.0 < a.report.scores["english"] <= 1.0
    assert (tmp_path / "a" / "run_manifest.txt").exists()


def test_task3_ignores_terms_and_pages(small_corpus, tmp_path):
    train, test = small_corpus
    reference = run_task(Task.TASK3, train, test)
    stripped = []
    for src in (train, test):
        dst = tmp_path / src.name
        dst.mkdir()
        for p in src.iterdir():
            if p.name not in (TERMS_FILE, NLP_FILE, DICTIONARY_FILE):
                (dst / p.name).write_bytes(p.read_bytes())
        stripped.append(dst)
    result = run_task(Task.TASK3, *stripped)
    assert result.report.scores == reference.report.scores
    assert result.quality_ranking.hosts == reference.quality_ranking.hosts


def test_task1_news_flag(small_corpus):
    train, test = small_corpus
    off = run_task(Task.TASK1, train, test)
    on = run_task(Task.TASK1, train, test, cfg=EnsembleConfig(news_postprocess=True))
    assert set(off.report.scores) == {c.value for c in category_universe()}
    for c in category_universe():
        if c is not Genre.NEWS_EDITORIAL:
            assert on.output.rankings[c] == off.output.rankings[c]
    news_off = off.output.results[Genre.NEWS_EDITORIAL]
    news_on = on.output.results[Genre.NEWS_EDITORIAL]
    for h, r in news_on.items():
        assert r.confidence in (news_off[h].confidence, pytest.approx(news_off[h].confidence * 0.4))


def test_missing_labels(small_corpus, tmp_path):
    train, test = small_corpus
    dst = tmp_path / "nolabels"
    dst.mkdir()
    for p in test.iterdir():
        if p.name != LABELS_FILE:
            (dst / p.name).write_bytes(p.read_bytes())
    with pytest.raises(FileNotFoundError, match=LABELS_FILE):
        run_task(Task.TASK2, train, dst)


def test_facet_levels_are_consistent(small_corpus):
    train, _ = small_corpus
    labels = load_dataset(train, with_terms=False, with_pages=False).labels
    for lab in labels.values():
        assert lab.membership(Facet.BIAS) == (lab.bias == 1)
        assert lab.membership(Facet.TRUSTINESS) == (lab.trust == 3)
