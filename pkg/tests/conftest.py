import numpy as np
import pytest

from alm import model as M
from alm.tokenizer import train_bpe

# small fixed Arabic corpus used by tokenizer/model/training tests
ARABIC_WORDS = [
    "كتاب", "مدرسة", "قلم", "بيت", "شمس", "قمر", "بحر", "جبل",
    "ولد", "بنت", "مدينة", "قرية", "سماء", "ارض", "ماء", "نار",
]


def synthetic_corpus(n_docs: int, seed: int, words=None, lo: int = 4, hi: int = 9) -> list[str]:
    rng = np.random.default_rng(seed)
    pool = words or ARABIC_WORDS
    docs = []
    for _ in range(n_docs):
        n = int(rng.integers(lo, hi))
        docs.append(" ".join(rng.choice(pool, size=n)))
    return docs


@pytest.fixture(scope="session")
def arabic_corpus():
    return synthetic_corpus(40, seed=11)


@pytest.fixture(scope="session")
def toy_tokenizer(arabic_corpus):
    return train_bpe(arabic_corpus, 120)


@pytest.fixture(scope="session")
def tiny_setup(toy_tokenizer):
    """(tokenizer, config, params) triple small enough for every test."""
    config = M.ModelConfig(
        vocab_size=len(toy_tokenizer.vocab), ctx_len=32, n_layers=2, n_heads=2, d_model=16
    )
    params = M.init(config, seed=5)
    return toy_tokenizer, config, params
