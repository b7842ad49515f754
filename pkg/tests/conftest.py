import os

import numpy as np
import pytest

from lexmatch import autodiff as ad
from lexmatch import matching as mt
from lexmatch.knowledge import load_dictionary
from lexmatch.model import TextMatchModel
from lexmatch.vocab import build_vocab

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIXTURE_DIR = os.path.join(REPO_ROOT, "fixtures")


@pytest.fixture(scope="session")
def fixture_dir():
    return FIXTURE_DIR


@pytest.fixture(scope="session")
def dictionary():
    return load_dictionary(os.path.join(FIXTURE_DIR, "dictionary.jsonl"))


@pytest.fixture
def f64():
    """Run the test at 64-bit precision (gradient-check fidelity)."""
    with ad.using_dtype("float64"):
        yield


TINY_WORDS = ["cat", "dog", "bird", "tree", "sky", "red", "blue", "runs",
              "sits", "fast"]


def tiny_model(seed=7, num_blocks=2, use_knowledge=True, head="paper",
               hidden=4, embed=4, n_classes=3):
    rng = np.random.default_rng(seed)
    vocab = build_vocab([TINY_WORDS], min_freq=1)
    cfg = mt.MatchConfig(hidden_size=hidden, num_heads=2, conv_width=3,
                         num_blocks=num_blocks, dropout=0.0)
    return TextMatchModel(cfg, vocab, n_classes=n_classes, embed_dim=embed,
                          use_knowledge=use_knowledge, head=head, rng=rng)


def tiny_batch(model, seed=3, n=2):
    rng = np.random.default_rng(seed)

    def sample(k):
        return [TINY_WORDS[int(rng.integers(len(TINY_WORDS)))] for _ in range(k)]

    return [
        model.prepare(sample(3), sample(4), i % model.n_classes, sample(5), sample(4))
        for i in range(n)
    ]
