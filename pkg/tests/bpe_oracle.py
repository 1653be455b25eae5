"""Brute-force BPE reference used to validate the real trainer.

Deliberately naive: keeps one symbol list per word occurrence (no dedup, no
count caching) and recounts every adjacent pair from scratch each iteration.
Quadratic and slow, but each step is small enough to audit by eye.  Shares
only the normalization front-end with the package; all counting, selection,
and merge application are reimplemented here.
"""

from __future__ import annotations

from alm.normalize import NormalizerConfig, normalize, pretokenize

SPECIALS = ["<unk>", "<bos>", "<eos>", "<pad>"]
MIN_PAIR_FREQUENCY = 2


def _apply(word: list[str], pair: tuple[str, str], merged: str) -> list[str]:
    out = []
    i = 0
    while i < len(word):
        if i + 1 < len(word) and (word[i], word[i + 1]) == pair:
            out.append(merged)
            i += 2
        else:
            out.append(word[i])
            i += 1
    return out


def oracle_train_bpe(
    corpus, vocab_size: int, normalizer: NormalizerConfig | None = None
) -> tuple[list[str], list[tuple[str, str]]]:
    """Return (vocab in id order, merges in rank order)."""
    normalizer = normalizer or NormalizerConfig()
    words: list[list[str]] = []
    for doc in corpus:
        for pretoken in pretokenize(normalize(doc, normalizer).text):
            words.append(list(pretoken))
    assert words, "oracle needs a non-empty corpus"
    base = sorted({sym for w in words for sym in w})
    vocab = SPECIALS + base
    assert vocab_size >= len(vocab), "budget below base alphabet + specials"
    merges: list[tuple[str, str]] = []
    while len(vocab) < vocab_size:
        counts: dict[tuple[str, str], int] = {}
        for w in words:
            for i in range(len(w) - 1):
                p = (w[i], w[i + 1])
                counts[p] = counts.get(p, 0) + 1
        if not counts:
            break
        best = max(counts.values())
        if best < MIN_PAIR_FREQUENCY:
            break
        pair = min(p for p, c in counts.items() if c == best)
        merged = pair[0] + pair[1]
        merges.append(pair)
        words = [_apply(w, pair, merged) for w in words]
        if merged not in vocab:
            vocab.append(merged)
    return vocab, merges
