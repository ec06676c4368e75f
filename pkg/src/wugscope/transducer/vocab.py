from __future__ import annotations

import logging
from collections.abc import Iterable
from dataclasses import dataclass

from ..corpus import FeatureInventory
from ..errors import InputError

log = logging.getLogger(__name__)

PAD, BOS, EOS, UNK = 0, 1, 2, 3
SPECIALS = ("<pad>", "<s>", "</s>", "<unk>")


@dataclass(frozen=True)
class Vocabulary:
    """Character alphabet (after the four reserved symbols) plus slot features."""

    chars: tuple[str, ...]
    features: FeatureInventory

    def __post_init__(self):
        object.__setattr__(
            self, "_char_index", {c: i + len(SPECIALS) for i, c in enumerate(self.chars)}
        )

    @classmethod
    def build(cls, examples: Iterable[tuple[str, frozenset, str]]) -> "Vocabulary":
        """Vocabulary over (lemma, slot, form) examples; characters sorted."""
        chars: set[str] = set()
        slots = []
        for lemma, slot, form in examples:
            chars.update(lemma)
            chars.update(form)
            slots.append(slot)
        return cls(tuple(sorted(chars)), FeatureInventory.from_slots(slots))

    @property
    def size(self) -> int:
        return len(SPECIALS) + len(self.chars)

    @property
    def n_features(self) -> int:
        return len(self.features)

    def char_id(self, c: str) -> int:
        return self._char_index.get(c, UNK)

    def symbol(self, i: int) -> str:
        if i < len(SPECIALS):
            return SPECIALS[i]
        return self.chars[i - len(SPECIALS)]

    def decode_ids(self, ids: Iterable[int]) -> str:
        return "".join(self.symbol(i) for i in ids)


@dataclass(frozen=True)
class EncodedExample:
    src: tuple[int, ...]
    features: tuple[int, ...]
    tgt: tuple[int, ...] | None
    dropped_features: int = 0

    def multi_hot(self, n_features: int) -> list[float]:
        v = [0.0] * n_features
        for f in self.features:
            v[f] = 1.0
        return v


def encode_example(vocab: Vocabulary, lemma: str, slot: Iterable[str], target: str | None) -> EncodedExample:
    """Index a lemma as BOS x EOS, a target as w EOS, and a slot as feature indices.

    Unknown characters become UNK; unknown features are dropped and counted.
    Pass ``target=None`` to encode a decoding query.
    """
    if not lemma:
        raise InputError("empty lemma")
    if target is not None and not target:
        raise InputError("empty target form")
    src = (BOS, *(vocab.char_id(c) for c in lemma), EOS)
    feats = []
    dropped = 0
    for f in sorted(slot):
        if f in vocab.features:
            feats.append(vocab.features.index(f))
        else:
            dropped += 1
    if dropped:
        log.debug("dropped %d unseen features for %r", dropped, lemma)
    tgt = None if target is None else (*(vocab.char_id(c) for c in target), EOS)
    return EncodedExample(src, tuple(feats), tgt, dropped)
