import math

import numpy as np
import pytest

from alm.errors import InputError
from alm.metrics import MetricReport, accuracy, bleu, f1_bleu_rouge, rouge_n

# ---------------------------------------------------------------------------
# BLEU


def test_bleu_identical_strings():
    for s in ("a", "a b c", "اب اا با", "x y z w v u"):
        assert bleu(s, s) == 1.0


def test_bleu_disjoint_strings_near_zero():
    v = bleu("a b c", "x y z")
    assert 0.0 < v < 1e-4


def test_bleu_short_hypothesis_golden():
    # all present precisions are 1, so the value is the brevity penalty alone
    v = bleu("a b c", "a b c d")
    assert v == math.exp(1.0 - 4 / 3)
    assert abs(v - 0.7165) < 1e-4


def test_bleu_empty_hypothesis_warns_and_returns_zero():
    with pytest.warns(UserWarning):
        assert bleu("", "a b") == 0.0


def test_bleu_orders_longer_than_hypothesis_skipped():
    assert bleu("a", "a") == 1.0


def test_bleu_clipped_counts():
    # "a" matches only once against a single-"a" reference
    v = bleu("a a a", "a")
    assert 0.0 < v < 0.01


def test_bleu_range_on_fuzz():
    rng = np.random.default_rng(3)
    words = list("abcdefg")
    for _ in range(50):
        hyp = " ".join(rng.choice(words, size=rng.integers(1, 8)))
        ref = " ".join(rng.choice(words, size=rng.integers(1, 8)))
        assert 0.0 <= bleu(hyp, ref) <= 1.0


def test_bleu_rejects_bad_order():
    with pytest.raises(InputError):
        bleu("a", "a", max_n=0)


# ---------------------------------------------------------------------------
# ROUGE


def test_rouge_1_golden():
    assert rouge_n("a b c", "a b d") == 2 / 3


def test_rouge_edges():
    assert rouge_n("a b", "x y") == 0.0
    assert rouge_n("a b c", "a b c") == 1.0
    assert rouge_n("", "a") == 0.0
    assert rouge_n("a", "") == 0.0


def test_rouge_2():
    assert rouge_n("a b c", "a b c", n=2) == 1.0
    assert rouge_n("a b c", "b c a", n=2) == 0.5  # one shared bigram of two each
    with pytest.raises(InputError):
        rouge_n("a", "a", n=0)


# ---------------------------------------------------------------------------
# composite F1


def test_f1_golden():
    assert f1_bleu_rouge(0.2, 0.3) == 0.24


def test_f1_fixed_point_and_symmetry():
    for x in (0.0, 0.1, 0.37, 0.5, 1.0):
        assert f1_bleu_rouge(x, x) == pytest.approx(x, rel=1e-15, abs=0)
    rng = np.random.default_rng(5)
    for _ in range(20):
        b, r = rng.random(2)
        assert f1_bleu_rouge(b, r) == f1_bleu_rouge(r, b)


def test_f1_zero_annihilation():
    assert f1_bleu_rouge(0.5, 0.0) == 0.0
    assert f1_bleu_rouge(0.0, 0.0) == 0.0


def test_f1_bounded_by_max():
    rng = np.random.default_rng(6)
    for _ in range(50):
        b, r = rng.random(2)
        v = f1_bleu_rouge(b, r)
        assert 0.0 <= v <= max(b, r) + 1e-15


def test_f1_input_validation():
    with pytest.raises(InputError):
        f1_bleu_rouge(1.2, 0.5)
    with pytest.raises(InputError):
        f1_bleu_rouge(0.5, -0.1)


# ---------------------------------------------------------------------------
# accuracy


def test_accuracy_values():
    assert accuracy([1, 0, 1], [1, 0, 1]) == 1.0
    assert accuracy([1, 1], [0, 0]) == 0.0
    assert accuracy([0] * 19 + [1], [0] * 20) == 0.95


def test_accuracy_validation():
    with pytest.raises(InputError):
        accuracy([1], [1, 0])
    with pytest.raises(InputError):
        accuracy([], [])


# ---------------------------------------------------------------------------
# report type


def test_metric_report_contract():
    rep = MetricReport(name="acc", value=0.5, sample_count=10, config={"k": 5})
    assert rep.to_json() == {"metric": "acc", "value": 0.5, "sample_count": 10, "config": {"k": 5}}
    with pytest.raises(InputError):
        MetricReport(name="acc", value=1.5, sample_count=1)
    with pytest.raises(InputError):
        MetricReport(name="acc", value=0.5, sample_count=0)
