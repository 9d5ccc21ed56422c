import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from webquality.core import (
    DataError,
    Dictionary,
    Facet,
    FeatureBlock,
    FeatureKind,
    Genre,
    LabelSet,
    Prediction,
    RankedList,
    Source,
    SparseTermVector,
    category_universe,
    facet_level,
    parse_category,
)


def test_category_universe_order():
    cats = category_universe()
    assert len(cats) == 9
    assert cats[0] is Genre.WEB_SPAM
    assert cats[-1] is Facet.NEUTRALITY
    assert [c.value for c in cats] == [
        "WebSpam",
        "News/Editorial",
        "Commercial",
        "Educational/Research",
        "Discussion",
        "Personal/Leisure",
        "Trustiness",
        "Bias",
        "Neutrality",
    ]


def test_parse_category_round_trip():
    for c in category_universe():
        assert parse_category(c.value) is c
    with pytest.raises(DataError):
        parse_category("Spam")


def test_feature_kind_dims():
    assert [k.reference_dim for k in FeatureKind] == [176, 95, 180]


def test_feature_block_rejects_non_finite_and_mismatch():
    with pytest.raises(DataError):
        FeatureBlock(FeatureKind.LINK, ("a",), (math.nan,))
    with pytest.raises(DataError):
        FeatureBlock(FeatureKind.LINK, ("a", "b"), (1.0,))


def test_sparse_vector_invariants():
    v = SparseTermVector.from_pairs([(7, 1), (3, 2)])
    assert v.entries == [(3, 2), (7, 1)]
    with pytest.raises(DataError):
        SparseTermVector((3, 3), (1, 1))
    with pytest.raises(DataError):
        SparseTermVector((50_000,), (1,))
    with pytest.raises(DataError):
        SparseTermVector((1,), (-1,))
    with pytest.raises(DataError):
        v.weight_map()


def test_dictionary_invariants():
    d = Dictionary({0: ("a", 2)}, 4)
    assert d.df(0) == 2 and 0 in d and len(d) == 1
    with pytest.raises(DataError):
        Dictionary({0: ("a", 5)}, 4)
    with pytest.raises(DataError):
        Dictionary({}, 0)


def test_label_membership_binary_view():
    labels = LabelSet(Genre.COMMERCIAL, 3, 1, 2)
    assert labels.membership(Genre.COMMERCIAL) is True
    assert labels.membership(Genre.WEB_SPAM) is False
    assert labels.membership(Facet.NEUTRALITY) is True
    assert labels.membership(Facet.BIAS) is True
    assert labels.membership(Facet.TRUSTINESS) is False
    assert LabelSet(Genre.COMMERCIAL).membership(Facet.BIAS) is None
    assert LabelSet().membership(Genre.COMMERCIAL) is None
    with pytest.raises(DataError):
        LabelSet(Genre.COMMERCIAL, 4, 1, 1)


def test_facet_level_mapping():
    assert facet_level(Facet.BIAS, True) == 1
    assert facet_level(Facet.BIAS, False) == 3
    for f in (Facet.NEUTRALITY, Facet.TRUSTINESS):
        assert facet_level(f, True) == 3
        assert facet_level(f, False) == 1


@given(
    host=st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=20),
    cat=st.sampled_from(category_universe()),
    positive=st.booleans(),
    conf=st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
)
def test_prediction_round_trip_bit_exact(host, cat, positive, conf):
    p = Prediction(host, cat, positive, conf, Source.ENSEMBLE)
    q = Prediction.from_tsv(p.to_tsv())
    assert q == p
    assert math.copysign(1.0, q.confidence) == math.copysign(1.0, p.confidence)


def test_prediction_confidence_range():
    with pytest.raises(ValueError):
        Prediction("h", Genre.WEB_SPAM, True, 1.5, Source.TREE)


@given(st.dictionaries(st.text(min_size=1, max_size=5), st.sampled_from([0.0, 0.25, 0.5, 1.0]), max_size=30))
def test_ranked_list_deterministic_and_tie_ordered(scores):
    a = RankedList.from_scores(scores)
    b = RankedList.from_scores(dict(reversed(list(scores.items()))))
    assert a == b
    for x, y in zip(a.items, a.items[1:]):
        assert x.score > y.score or (x.score == y.score and x.host < y.host)


def test_ranked_list_rejects_increasing_scores_and_negative_gains():
    from webquality.core import RankedItem

    with pytest.raises(ValueError):
        RankedList((RankedItem("a", 0.1), RankedItem("b", 0.2)))
    with pytest.raises(ValueError):
        RankedList((RankedItem("a", 0.1, -1.0),))
