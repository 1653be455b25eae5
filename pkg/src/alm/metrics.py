"""Text-generation and classification metrics.

Sentence-level BLEU with epsilon smoothing, ROUGE-N F-measure, their
harmonic-mean composite, and plain accuracy.  All functions are pure and
return values in [0, 1]; inputs are whitespace-tokenized strings, normalized
upstream by the caller.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field

from .errors import InputError

BLEU_EPSILON = 1e-9


@dataclass(frozen=True)
class MetricReport:
    """One named metric value with its sample count and config echo."""

    name: str
    value: float
    sample_count: int
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise InputError(f"metric value {self.value} outside [0, 1]")
        if self.sample_count < 1:
            raise InputError(f"sample_count must be >= 1, got {self.sample_count}")

    def to_json(self) -> dict:
        return {
            "metric": self.name,
            "value": self.value,
            "sample_count": self.sample_count,
            "config": dict(self.config),
        }


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(hypothesis: str, reference: str, max_n: int = 4) -> float:
    """Sentence BLEU: geometric mean of clipped n-gram precisions times
    the brevity penalty exp(1 - r/h) when the hypothesis is shorter.

    Orders longer than the hypothesis are skipped; a present order with zero
    matches contributes epsilon instead, so disjoint strings score near 0
    rather than exactly 0.
    """
    if max_n < 1:
        raise InputError(f"max_n must be >= 1, got {max_n}")
    hyp = hypothesis.split()
    ref = reference.split()
    if not hyp:
        warnings.warn("BLEU of an empty hypothesis is 0", stacklevel=2)
        return 0.0
    log_precisions = []
    for n in range(1, max_n + 1):
        hyp_counts = _ngrams(hyp, n)
        total = sum(hyp_counts.values())
        if total == 0:
            continue
        ref_counts = _ngrams(ref, n)
        matches = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
        p = matches / total if matches > 0 else BLEU_EPSILON / total
        log_precisions.append(math.log(p))
    geo = math.exp(math.fsum(log_precisions) / len(log_precisions))
    bp = 1.0 if len(hyp) >= len(ref) else math.exp(1.0 - len(ref) / len(hyp))
    return min(1.0, geo * bp)


def rouge_n(hypothesis: str, reference: str, n: int = 1) -> float:
    """ROUGE-N F-measure: 2*overlap / (hyp n-grams + ref n-grams).

    That form equals the harmonic mean of precision and recall wherever the
    overlap is nonzero, and is 0 when either side has no n-grams.
    """
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    hyp_counts = _ngrams(hypothesis.split(), n)
    ref_counts = _ngrams(reference.split(), n)
    hyp_total = sum(hyp_counts.values())
    ref_total = sum(ref_counts.values())
    if hyp_total == 0 or ref_total == 0:
        return 0.0
    overlap = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
    return 2.0 * overlap / (hyp_total + ref_total)


def f1_bleu_rouge(b: float, r: float) -> float:
    """Harmonic mean 2br/(b+r) of a BLEU and a ROUGE value; 0 when both 0."""
    if not (0.0 <= b <= 1.0 and 0.0 <= r <= 1.0):
        raise InputError(f"inputs must lie in [0, 1], got ({b}, {r})")
    if b + r == 0.0:
        return 0.0
    return 2.0 * b * r / (b + r)


def accuracy(predictions, golds) -> float:
    """Fraction of positions where prediction equals gold."""
    predictions = list(predictions)
    golds = list(golds)
    if len(predictions) != len(golds):
        raise InputError(f"length mismatch: {len(predictions)} vs {len(golds)}")
    if not predictions:
        raise InputError("accuracy of zero samples is undefined")
    return sum(p == g for p, g in zip(predictions, golds)) / len(predictions)
