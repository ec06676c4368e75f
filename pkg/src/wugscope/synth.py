"""Synthetic inflectional languages with known irregulars and controllable frequency coupling.

Regular lexemes inflect as stem + slot suffix.  Suppletive lexemes keep their
lemma but build every other cell on an unrelated random stem.  Lexeme counts
are Zipfian in rank; in ``high-frequency`` coupling the suppletive lexemes take
the top ranks, in ``uniform`` coupling ranks are a random permutation.

Paradigms and frequencies are drawn from independent child streams of the
seed, so two configs differing only in coupling (or Zipf exponent) share the
exact same paradigms.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from string import ascii_lowercase

import numpy as np

from .corpus import LEMMA_SLOT, FrequencyTable, Paradigm, serialize_frequency, serialize_unimorph
from .errors import ConfigError

COUPLINGS = ("high-frequency", "uniform")


@dataclass(frozen=True)
class SynthConfig:
    n_lexemes: int = 300
    n_slots: int = 6
    alphabet_size: int = 10
    suffixes: tuple[str, ...] | None = None  # one per slot; drawn at random when None
    n_suppletive: int = 0
    coupling: str = "uniform"
    zipf_s: float = 1.0
    seed: int = 0
    stem_length: tuple[int, int] = (3, 7)
    top_count: int = 10_000
    # share of a lexeme's count taken by the lemma cell and each slot, in order;
    # None means proportional to 1/(k+1) for cell k
    cell_proportions: tuple[float, ...] | None = None
    # stretch mode: lexemes that take an alternative suffix in half of the slots
    n_subregular: int = 0

    def __post_init__(self):
        if self.n_lexemes < 1 or self.n_slots < 1:
            raise ConfigError("n_lexemes and n_slots must be positive")
        if not 0 <= self.n_suppletive + self.n_subregular <= self.n_lexemes:
            raise ConfigError("n_suppletive + n_subregular exceeds n_lexemes")
        if not 2 <= self.alphabet_size <= len(ascii_lowercase):
            raise ConfigError("alphabet_size must be between 2 and 26")
        if self.coupling not in COUPLINGS:
            raise ConfigError(f"coupling must be one of {COUPLINGS}")
        if self.zipf_s < 0:
            raise ConfigError("zipf_s must be non-negative")
        lo, hi = self.stem_length
        if not 1 <= lo <= hi:
            raise ConfigError("bad stem_length range")
        if self.suffixes is not None:
            if len(self.suffixes) != self.n_slots:
                raise ConfigError("suffix table must have one entry per slot")
            if len(set(self.suffixes)) != self.n_slots or not all(self.suffixes):
                raise ConfigError("suffixes must be distinct and non-empty")
        elif self.alphabet_size + self.alphabet_size**2 < 2 * self.n_slots:
            raise ConfigError("alphabet too small for distinct suffixes of length <= 2")
        if self.cell_proportions is not None and len(self.cell_proportions) != self.n_slots + 1:
            raise ConfigError("cell_proportions needs n_slots + 1 entries (lemma first)")

    @property
    def alphabet(self) -> str:
        return ascii_lowercase[: self.alphabet_size]


@dataclass
class SynthLanguage:
    config: SynthConfig
    paradigms: dict[str, Paradigm]
    freq: FrequencyTable
    gold: frozenset[str]
    suffixes: tuple[str, ...]
    lexeme_counts: dict[str, int] = field(default_factory=dict)

    def write(self, directory, name: str = "synth") -> dict[str, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = {
            "unimorph": d / f"{name}.tsv",
            "freq": d / f"{name}.freq.tsv",
            "gold": d / f"{name}.gold.tsv",
        }
        paths["unimorph"].write_text(serialize_unimorph(self.paradigms.values()), encoding="utf-8")
        paths["freq"].write_text(serialize_frequency(self.freq), encoding="utf-8")
        paths["gold"].write_text(
            "".join(f"{lex}\t{int(lex in self.gold)}\n" for lex in self.paradigms), encoding="utf-8"
        )
        return paths


def slot_tags(n_slots: int) -> list[frozenset]:
    return [frozenset({"V", f"X{k + 1}"}) for k in range(n_slots)]


def zipf_counts(n: int, s: float, top: float) -> np.ndarray:
    """Unrounded counts top * rank^-s for ranks 1..n."""
    return top * np.arange(1, n + 1, dtype=np.float64) ** (-s)


def _random_string(rng, alphabet: str, lo: int, hi: int) -> str:
    k = int(rng.integers(lo, hi + 1))
    return "".join(alphabet[i] for i in rng.integers(0, len(alphabet), size=k))


def _draw_stems(rng, count: int, alphabet: str, lo: int, hi: int, taken: Sequence[str] = ()) -> list[str]:
    """Distinct stems, none a prefix or suffix of another (so no stem pair looks derived)."""
    existing = list(taken)
    out = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 1000 * (count + 10):
            raise ConfigError("cannot draw enough distinct stems; enlarge alphabet or stem length")
        s = _random_string(rng, alphabet, lo, hi)
        if any(t.startswith(s) or s.startswith(t) or t.endswith(s) or s.endswith(t) for t in existing):
            continue
        existing.append(s)
        out.append(s)
    return out


def _draw_suffixes(rng, n: int, alphabet: str, avoid: Sequence[str] = ()) -> tuple[str, ...]:
    out: list[str] = []
    while len(out) < n:
        s = _random_string(rng, alphabet, 1, 2)
        if s not in out and s not in avoid:
            out.append(s)
    return tuple(out)


def generate(config: SynthConfig) -> SynthLanguage:
    """Draw one synthetic language: paradigms, form frequencies and the gold irregular set."""
    form_seq, freq_seq = np.random.SeedSequence(config.seed).spawn(2)
    rng = np.random.default_rng(form_seq)
    alphabet = config.alphabet
    lo, hi = config.stem_length

    suffixes = config.suffixes or _draw_suffixes(rng, config.n_slots, alphabet)
    alt_suffixes = _draw_suffixes(rng, config.n_slots, alphabet, avoid=suffixes)
    stems = _draw_stems(rng, config.n_lexemes, alphabet, lo, hi)
    order = rng.permutation(config.n_lexemes)
    suppletive = {stems[i] for i in order[: config.n_suppletive]}
    subregular = {stems[i] for i in order[config.n_suppletive : config.n_suppletive + config.n_subregular]}
    alt_stems = iter(_draw_stems(rng, len(suppletive), alphabet, lo, hi, taken=stems))

    tags = slot_tags(config.n_slots)
    paradigms: dict[str, Paradigm] = {}
    for stem in stems:
        cells = {LEMMA_SLOT: stem}
        if stem in suppletive:
            base = next(alt_stems)
            for tag, suf in zip(tags, suffixes):
                cells[tag] = base + suf
        else:
            for k, (tag, suf) in enumerate(zip(tags, suffixes)):
                if stem in subregular and k % 2 == 1:
                    suf = alt_suffixes[k]
                cells[tag] = stem + suf
        paradigms[stem] = Paradigm(stem, cells, LEMMA_SLOT)

    frng = np.random.default_rng(freq_seq)
    irregular = [s for s in stems if s in suppletive]
    regular = [s for s in stems if s not in suppletive]
    if config.coupling == "high-frequency":
        ranked = [irregular[i] for i in frng.permutation(len(irregular))]
        ranked += [regular[i] for i in frng.permutation(len(regular))]
    else:
        ranked = [stems[i] for i in frng.permutation(len(stems))]
    raw = zipf_counts(len(ranked), config.zipf_s, config.top_count)
    lexeme_counts = {lex: int(round(c)) for lex, c in zip(ranked, raw)}

    if config.cell_proportions is None:
        props = 1.0 / np.arange(1, config.n_slots + 2, dtype=np.float64)
    else:
        props = np.asarray(config.cell_proportions, dtype=np.float64)
    props = props / props.sum()
    counts: dict[str, int] = {}
    for lex in stems:
        forms = [paradigms[lex].cells[LEMMA_SLOT]] + [paradigms[lex].cells[t] for t in tags]
        for form, share in zip(forms, props):
            counts[form] = counts.get(form, 0) + int(round(lexeme_counts[lex] * share))
    return SynthLanguage(config, paradigms, FrequencyTable(counts), frozenset(suppletive), suffixes, lexeme_counts)
