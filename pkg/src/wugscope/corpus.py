"""UniMorph paradigm files and surface-form frequency tables.

A UniMorph file has one inflected form per line::

    lemma<TAB>form<TAB>FEAT1;FEAT2;...

Lexemes are identified by their lemma string.  Every parsed paradigm gets an
extra cell under the reserved slot ``{LEMMA}`` holding the lemma itself, since
the inflection model conditions on the citation form.
"""

from __future__ import annotations

import io
import re
import unicodedata
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import TextIO, Union

from .errors import ConflictError, ParseError

LEMMA_FEATURE = "LEMMA"
LEMMA_SLOT: frozenset[str] = frozenset({LEMMA_FEATURE})

NORMALIZATIONS = ("none", "NFC", "NFD", "NFKC", "NFKD")

# A slot is an unordered bag of feature values.
SlotTag = frozenset

TextSource = Union[str, TextIO, Iterable[str]]

_COUNT_RE = re.compile(r"[0-9]+")


def format_slot(slot: Iterable[str]) -> str:
    """Canonical ``;``-joined spelling of a slot (features sorted)."""
    return ";".join(sorted(slot))


def parse_slot(text: str) -> frozenset[str]:
    return frozenset(f.strip() for f in text.split(";") if f.strip())


def normalize(text: str, form: str = "NFC") -> str:
    if form == "none":
        return text
    if form not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {form!r}")
    return unicodedata.normalize(form, text)


def _lines(source: TextSource) -> Iterable[str]:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


@dataclass(frozen=True)
class FeatureInventory:
    """Sorted, de-duplicated feature values with dense indices."""

    features: tuple[str, ...] = ()

    @classmethod
    def from_slots(cls, slots: Iterable[Iterable[str]]) -> "FeatureInventory":
        seen = set()
        for slot in slots:
            seen.update(slot)
        return cls(tuple(sorted(seen)))

    def __post_init__(self):
        if len(set(self.features)) != len(self.features):
            raise ValueError("duplicate features in inventory")
        object.__setattr__(self, "_index", {f: i for i, f in enumerate(self.features)})

    def __len__(self):
        return len(self.features)

    def __contains__(self, feature):
        return feature in self._index

    def index(self, feature: str) -> int:
        return self._index[feature]


@dataclass(frozen=True)
class Triple:
    lexeme: str
    slot: frozenset
    form: str

    def __post_init__(self):
        if not self.form:
            raise ValueError("empty surface form")
        if any(c in self.form for c in "\t\n\r"):
            raise ValueError(f"surface form {self.form!r} contains tab or newline")
        if not self.slot:
            raise ValueError("empty slot tag")


@dataclass(frozen=True, eq=True)
class Paradigm:
    """One lexeme's map from slot tags to surface forms."""

    lexeme: str
    cells: Mapping[frozenset, str] = field(hash=False)
    lemma_slot: frozenset = LEMMA_SLOT

    def __post_init__(self):
        if not self.cells:
            raise ValueError(f"paradigm {self.lexeme!r} has no cells")
        if self.lemma_slot not in self.cells:
            raise ValueError(f"paradigm {self.lexeme!r} lacks its lemma cell")

    @property
    def lemma(self) -> str:
        return self.cells[self.lemma_slot]

    def triples(self) -> list[Triple]:
        return [Triple(self.lexeme, slot, form) for slot, form in self.cells.items()]


def parse_unimorph(
    source: TextSource, normalization: str = "NFC", name: str | None = None
) -> dict[str, Paradigm]:
    """Parse UniMorph TSV into paradigms keyed by lemma, in order of first appearance.

    Raises ParseError for a line without exactly three fields and
    ConflictError when one (lemma, slot) pair is given two different forms.
    """
    cells: dict[str, dict[frozenset, str]] = {}
    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(f"expected 3 tab-separated fields, got {len(parts)}", lineno, name)
        lemma, form, feats = (normalize(p.strip(), normalization) for p in parts)
        if not lemma or not form:
            raise ParseError("empty lemma or form", lineno, name)
        slot = parse_slot(feats)
        if not slot:
            raise ParseError("empty feature bundle", lineno, name)
        paradigm = cells.setdefault(lemma, {})
        previous = paradigm.get(slot)
        if previous is not None and previous != form:
            raise ConflictError(lemma, format_slot(slot), previous, form, lineno)
        paradigm[slot] = form

    out = {}
    for lemma, slot_map in cells.items():
        full = dict(slot_map)
        full[LEMMA_SLOT] = lemma
        out[lemma] = Paradigm(lemma, full, LEMMA_SLOT)
    return out


def serialize_unimorph(paradigms: Iterable[Paradigm]) -> str:
    """Inverse of parse_unimorph; the synthesized ``{LEMMA}`` cell is not written."""
    lines = []
    for p in paradigms:
        for slot in sorted(p.cells, key=format_slot):
            if slot == LEMMA_SLOT:
                continue
            lines.append(f"{p.lexeme}\t{p.cells[slot]}\t{format_slot(slot)}\n")
    return "".join(lines)


class FrequencyTable(Mapping):
    """Surface form -> non-negative count; absent forms count 0."""

    def __init__(self, counts: Mapping[str, int] | None = None):
        self._counts = dict(counts or {})
        for form, c in self._counts.items():
            if c < 0:
                raise ValueError(f"negative count for {form!r}")

    def __getitem__(self, form):
        return self._counts.get(form, 0)

    def __contains__(self, form):
        return form in self._counts

    def __iter__(self):
        return iter(self._counts)

    def __len__(self):
        return len(self._counts)

    def __eq__(self, other):
        if isinstance(other, FrequencyTable):
            return self._counts == other._counts
        return NotImplemented

    def __repr__(self):
        return f"FrequencyTable({self._counts!r})"

    @property
    def counts(self) -> dict[str, int]:
        return dict(self._counts)


def parse_frequency(
    source: TextSource, normalization: str = "NFC", name: str | None = None
) -> FrequencyTable:
    """Parse ``form<TAB>count`` lines; repeated forms have their counts summed."""
    counts: dict[str, int] = {}
    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(f"expected 2 tab-separated fields, got {len(parts)}", lineno, name)
        form = normalize(parts[0].strip(), normalization)
        count = parts[1].strip()
        if not form:
            raise ParseError("empty form", lineno, name)
        if not _COUNT_RE.fullmatch(count):
            raise ParseError(f"count {count!r} is not a non-negative integer", lineno, name)
        counts[form] = counts.get(form, 0) + int(count)
    return FrequencyTable(counts)


def serialize_frequency(freq: FrequencyTable) -> str:
    return "".join(f"{form}\t{freq[form]}\n" for form in sorted(freq))


def lexeme_count(paradigm, freq: FrequencyTable) -> int:
    """Total count of a paradigm's distinct surface forms, lemma included."""
    return sum(freq[form] for form in set(paradigm.cells.values()))
