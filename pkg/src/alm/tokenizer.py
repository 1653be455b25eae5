"""Trainable BPE subword tokenizer with Arabic-aware normalization.

The model couples a :class:`~alm.normalize.NormalizerConfig` with a greedy
byte-pair-encoding vocabulary learned at codepoint level (no byte fallback:
codepoints unseen at training time encode to ``<unk>``).  Special tokens
occupy the reserved ids 0..3 and never participate in merges.

Vocabulary-size presets follow the 32k/50k/64k/86k family, with 64k as the
default.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ConfigError, InputError
from .normalize import WORD_MARKER, NormalizerConfig, normalize, pretokenize

SPECIAL_TOKENS = {"unk": "<unk>", "bos": "<bos>", "eos": "<eos>", "pad": "<pad>"}
UNK_ID, BOS_ID, EOS_ID, PAD_ID = 0, 1, 2, 3

PRESET_VOCAB_SIZES = {"32k": 32000, "50k": 50000, "64k": 64000, "86k": 86000}
DEFAULT_PRESET = "64k"

# A pair must occur at least this often to be merged.
MIN_PAIR_FREQUENCY = 2

FILE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MergeRule:
    """One learned merge: at ``rank``, adjacent (left, right) becomes merged."""

    rank: int
    left: str
    right: str

    @property
    def merged(self) -> str:
        return self.left + self.right


class TokenizerModel:
    """Immutable trained tokenizer: normalizer + vocab + ordered merges."""

    def __init__(
        self,
        normalizer: NormalizerConfig,
        vocab: list[str],
        merges: list[MergeRule],
        specials: dict[str, str] | None = None,
    ):
        self.normalizer = normalizer
        self.vocab = list(vocab)
        self.merges = list(merges)
        self.specials = dict(specials or SPECIAL_TOKENS)
        self.token_to_id = {tok: i for i, tok in enumerate(self.vocab)}
        if len(self.token_to_id) != len(self.vocab):
            raise InputError("vocab contains duplicate token strings")
        for name in ("unk", "bos", "eos", "pad"):
            if name not in self.specials:
                raise InputError(f"missing special token: {name}")
        expected = [self.specials[n] for n in ("unk", "bos", "eos", "pad")]
        if self.vocab[:4] != expected:
            raise InputError(f"special tokens must occupy ids 0..3, got {self.vocab[:4]!r}")
        self._merge_ranks = {(m.left, m.right): m.rank for m in self.merges}
        for m in self.merges:
            for tok in (m.left, m.right, m.merged):
                if tok not in self.token_to_id:
                    raise InputError(f"merge rank {m.rank} references unknown token {tok!r}")
            if m.left in expected or m.right in expected:
                raise InputError(f"special token used in merge rank {m.rank}")
        self._encode_cache: dict[str, tuple[int, ...]] = {}

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TokenizerModel):
            return NotImplemented
        return (
            self.normalizer == other.normalizer
            and self.vocab == other.vocab
            and self.merges == other.merges
            and self.specials == other.specials
        )

    def encode_word(self, word: str) -> list[int]:
        """Encode one marker-prefixed pretoken to ids (cached per word)."""
        hit = self._encode_cache.get(word)
        if hit is None:
            symbols = list(word)
            ranks = self._merge_ranks
            while len(symbols) > 1:
                best_rank = None
                for pair in zip(symbols, symbols[1:]):
                    rank = ranks.get(pair)
                    if rank is not None and (best_rank is None or rank < best_rank):
                        best_rank = rank
                if best_rank is None:
                    break
                rule = self.merges[best_rank]
                symbols = _apply_merge(symbols, rule.left, rule.right)
            unk = UNK_ID
            hit = tuple(self.token_to_id.get(s, unk) for s in symbols)
            self._encode_cache[word] = hit
        return list(hit)

    def encode(self, text: str) -> list[int]:
        """Normalize, pretokenize, and BPE-encode ``text`` to token ids."""
        normed = normalize(text, self.normalizer).text
        ids: list[int] = []
        for word in pretokenize(normed):
            ids.extend(self.encode_word(word))
        return ids

    def decode(self, ids: Iterable[int]) -> str:
        """Map ids back to text; specials other than ``<unk>`` are skipped."""
        pieces = []
        for i in ids:
            if not 0 <= i < self.vocab_size:
                raise InputError(f"token id {i} out of range [0, {self.vocab_size})")
            if i in (BOS_ID, EOS_ID, PAD_ID):
                continue
            pieces.append(self.vocab[i])
        text = "".join(pieces).replace(WORD_MARKER, " ")
        if text.startswith(" "):
            text = text[1:]
        return text


def _apply_merge(symbols: list[str], left: str, right: str) -> list[str]:
    """Replace every (left, right) adjacency, scanning left to right."""
    out: list[str] = []
    i = 0
    n = len(symbols)
    while i < n:
        if i + 1 < n and symbols[i] == left and symbols[i + 1] == right:
            out.append(left + right)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def _count_words(corpus: Iterable[str], normalizer: NormalizerConfig) -> Counter:
    counts: Counter = Counter()
    for doc in corpus:
        normed = normalize(doc, normalizer).text
        counts.update(pretokenize(normed))
    return counts


def train_bpe(
    corpus: Iterable[str],
    vocab_size: int,
    normalizer: NormalizerConfig | None = None,
    specials: dict[str, str] | None = None,
) -> TokenizerModel:
    """Train a BPE tokenizer on a stream of documents.

    Merges are selected greedily by highest pair frequency (ties broken by
    lexicographically smallest ``(left, right)``), until ``vocab_size`` is
    reached or no pair occurs at least :data:`MIN_PAIR_FREQUENCY` times.
    Pair frequencies count every adjacency, so overlapping runs like "aaa"
    contribute twice to ("a", "a").
    """
    if normalizer is None:
        normalizer = NormalizerConfig()
    specials = dict(specials or SPECIAL_TOKENS)

    word_counts = _count_words(corpus, normalizer)
    if not word_counts:
        raise InputError("empty corpus: no words after normalization")

    alphabet = sorted({c for word in word_counts for c in word})
    special_strings = [specials[n] for n in ("unk", "bos", "eos", "pad")]
    base_size = len(special_strings) + len(alphabet)
    if vocab_size < base_size:
        raise ConfigError(
            f"vocab_size {vocab_size} smaller than base alphabet + specials ({base_size})"
        )

    vocab = special_strings + alphabet
    known = set(vocab)
    # Distinct words as symbol tuples with occurrence counts.
    words: dict[tuple[str, ...], int] = {tuple(w): c for w, c in word_counts.items()}

    merges: list[MergeRule] = []
    while len(vocab) < vocab_size:
        pair_counts: Counter = Counter()
        for symbols, count in words.items():
            for pair in zip(symbols, symbols[1:]):
                pair_counts[pair] += count
        if not pair_counts:
            break
        best_count = max(pair_counts.values())
        if best_count < MIN_PAIR_FREQUENCY:
            break
        left, right = min(p for p, c in pair_counts.items() if c == best_count)
        merged = left + right
        rule = MergeRule(rank=len(merges), left=left, right=right)
        merges.append(rule)
        if merged not in known:
            vocab.append(merged)
            known.add(merged)
        new_words: dict[tuple[str, ...], int] = {}
        for symbols, count in words.items():
            replaced = tuple(_apply_merge(list(symbols), left, right))
            new_words[replaced] = new_words.get(replaced, 0) + count
        words = new_words

    return TokenizerModel(normalizer=normalizer, vocab=vocab, merges=merges, specials=specials)


def fertility(model: TokenizerModel, corpus: Iterable[str]) -> float:
    """Average subword tokens per whitespace word over ``corpus``."""
    total_tokens = 0
    total_words = 0
    for doc in corpus:
        normed = normalize(doc, model.normalizer).text
        for word in pretokenize(normed):
            total_tokens += len(model.encode_word(word))
            total_words += 1
    if total_words == 0:
        raise InputError("empty corpus: no words after normalization")
    return total_tokens / total_words


def save_tokenizer(model: TokenizerModel, path: str | Path) -> None:
    """Write the tokenizer as a single UTF-8 JSON document (no BOM)."""
    doc = {
        "version": FILE_FORMAT_VERSION,
        "normalizer": model.normalizer.to_json(),
        "specials": model.specials,
        "vocab": model.vocab,
        "merges": [[m.left, m.right] for m in model.merges],
    }
    Path(path).write_text(json.dumps(doc, ensure_ascii=False), encoding="utf-8")


def load_tokenizer(path: str | Path) -> TokenizerModel:
    """Load a tokenizer written by :func:`save_tokenizer`."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InputError(f"malformed tokenizer file {path}: {exc}") from exc
    if doc.get("version") != FILE_FORMAT_VERSION:
        raise InputError(f"unsupported tokenizer file version: {doc.get('version')!r}")
    merges = [
        MergeRule(rank=i, left=left, right=right)
        for i, (left, right) in enumerate(doc["merges"])
    ]
    return TokenizerModel(
        normalizer=NormalizerConfig.from_json(doc["normalizer"]),
        vocab=doc["vocab"],
        merges=merges,
        specials=doc["specials"],
    )


def iter_token_stream(model: TokenizerModel, corpus: Iterable[str]) -> Iterator[int]:
    """Encode a document stream, appending ``<eos>`` after each document."""
    for doc in corpus:
        yield from model.encode(doc)
        yield EOS_ID
