"""Deterministic Unicode normalization for Arabic text.

Every string entering the tokenizer goes through :func:`normalize` first, so
the pipeline below defines the canonical text form for the whole toolkit:

1. NFKC (compatibility decomposition + canonical composition).  This resolves
   Arabic presentation forms, e.g. the isolated lam-alef ligature U+FEFB
   becomes the two letters U+0644 U+0627.
2. Tatweel (kashida, U+0640) removal.
3. Optional stripping of the tashkeel diacritics U+064B..U+0652.
4. Optional folding of alef variants to bare alef (off by default; folding
   destroys orthographic information).
5. Optional lowercasing of Latin letters (off by default).
6. Whitespace collapse: runs of whitespace become a single space, ends are
   trimmed.

All steps are idempotent, so normalizing already-normalized text is a no-op.
Non-Arabic text passes through untouched apart from whitespace handling.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import asdict, dataclass

# Word-boundary marker prepended to every whitespace-delimited word before
# subword segmentation (U+2581 LOWER ONE EIGHTH BLOCK).
WORD_MARKER = "▁"

TATWEEL = "ـ"

# Tashkeel: fathatan..sukun.
_DIACRITICS_RE = re.compile(r"[ً-ْ]")
_ALEF_VARIANTS_RE = re.compile(r"[آأإ]")
_WHITESPACE_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class NormalizerConfig:
    """Pure-data switches for the normalization pipeline.

    Two equal configs normalize every input identically.
    """

    unicode_canonicalize: bool = True
    preserve_diacritics: bool = True
    remove_tatweel: bool = True
    collapse_whitespace: bool = True
    lowercase_latin: bool = False
    fold_alef_variants: bool = False

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "NormalizerConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: bool(v) for k, v in obj.items() if k in known})


@dataclass(frozen=True)
class NormalizedText:
    """Result of :func:`normalize`: canonical text plus the input length."""

    text: str
    source_len: int


def normalize(text: str, config: NormalizerConfig | None = None) -> NormalizedText:
    """Apply the normalization pipeline to ``text``.

    Idempotent: ``normalize(normalize(s).text).text == normalize(s).text``.
    """
    if config is None:
        config = NormalizerConfig()
    source_len = len(text)
    if config.unicode_canonicalize:
        text = unicodedata.normalize("NFKC", text)
    if config.remove_tatweel:
        text = text.replace(TATWEEL, "")
    if not config.preserve_diacritics:
        text = _DIACRITICS_RE.sub("", text)
    if config.fold_alef_variants:
        text = _ALEF_VARIANTS_RE.sub("ا", text)
    if config.lowercase_latin:
        text = "".join(c.lower() if c.isascii() else c for c in text)
    if config.unicode_canonicalize:
        # character removal above can leave combining marks in
        # non-canonical order; recompose so the result is NFKC-stable
        text = unicodedata.normalize("NFKC", text)
    if config.collapse_whitespace:
        text = _WHITESPACE_RE.sub(" ", text).strip()
    return NormalizedText(text=text, source_len=source_len)


def pretokenize(text: str) -> list[str]:
    """Split normalized text into marker-prefixed words.

    Each whitespace-delimited word is emitted with :data:`WORD_MARKER`
    prepended; whitespace itself is dropped.  Joining the pretokens and
    replacing the marker with a single space reconstructs the input
    (up to whitespace collapsing).
    """
    return [WORD_MARKER + w for w in text.split()]
