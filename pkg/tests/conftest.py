import numpy as np
import pytest

from webquality.harness import SynthSpec, generate


def small_spec(**kw) -> SynthSpec:
    base = dict(n_train=120, n_test=60, link_dim=24, content_dim=20, nlp_dim=24, vocab_size=400, seed=3)
    base.update(kw)
    return SynthSpec(**base)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """A tiny planted-signal corpus shared by the pipeline tests."""
    root = tmp_path_factory.mktemp("small")
    train, test = generate(small_spec(), root)
    return train, test


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
