"""Paradigm preparation: syncretism collapsing and removal of derived lexemes."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import NamedTuple

from .corpus import Paradigm, format_slot
from .errors import InputError

log = logging.getLogger(__name__)

MergedSlot = frozenset


@dataclass(frozen=True)
class CollapsedParadigm:
    """A paradigm in which every surface form occupies exactly one cell.

    ``syncretism_map`` sends each original slot tag to the merged slot that now
    holds its form.
    """

    lexeme: str
    cells: Mapping[frozenset, str] = field(hash=False)
    lemma_slot: frozenset
    syncretism_map: Mapping[frozenset, frozenset] = field(hash=False, compare=False)

    def __post_init__(self):
        if self.lemma_slot not in self.cells:
            raise ValueError(f"{self.lexeme!r}: lemma slot missing")
        if len(set(self.cells.values())) != len(self.cells):
            raise ValueError(f"{self.lexeme!r}: collapsed cells must hold distinct forms")

    @property
    def lemma(self) -> str:
        return self.cells[self.lemma_slot]

    def inflected(self) -> list[tuple[frozenset, str]]:
        """Cells whose form differs from the lemma, in canonical slot order."""
        lemma = self.lemma
        return sorted(
            ((s, w) for s, w in self.cells.items() if w != lemma),
            key=lambda sw: format_slot(sw[0]),
        )


def collapse(paradigm: Paradigm | CollapsedParadigm) -> CollapsedParadigm:
    """Merge cells that share a surface form into one cell.

    The merged slot is the union of the member slots' features.  The lemma
    cell takes part in the grouping like any other cell.
    """
    groups: dict[str, list[frozenset]] = {}
    for slot in sorted(paradigm.cells, key=format_slot):
        groups.setdefault(paradigm.cells[slot], []).append(slot)

    cells: dict[frozenset, str] = {}
    smap: dict[frozenset, frozenset] = {}
    lemma_slot = None
    for form, slots in groups.items():
        merged = frozenset().union(*slots)
        if merged in cells:
            raise InputError(
                f"{paradigm.lexeme!r}: merged slot {format_slot(merged)} arises from two "
                f"different forms ({cells[merged]!r}, {form!r})"
            )
        cells[merged] = form
        for s in slots:
            smap[s] = merged
        if paradigm.lemma_slot in slots:
            lemma_slot = merged

    original_map = getattr(paradigm, "syncretism_map", None)
    if original_map:
        # compose with an earlier collapse so the map stays total over the raw slots
        smap = {raw: smap[mid] for raw, mid in original_map.items()}
    return CollapsedParadigm(paradigm.lexeme, cells, lemma_slot, smap)


class Derivation(NamedTuple):
    lexeme: str
    base: str
    affix: str
    direction: str  # "prefix" or "suffix"


def _values(paradigms) -> list:
    if isinstance(paradigms, Mapping):
        return list(paradigms.values())
    return list(paradigms)


def _derives(derived: CollapsedParadigm, base: CollapsedParadigm, affix: str, direction: str) -> bool:
    if derived.cells.keys() != base.cells.keys():
        return False
    if direction == "prefix":
        return all(derived.cells[s] == affix + w for s, w in base.cells.items())
    return all(derived.cells[s] == w + affix for s, w in base.cells.items())


def find_derivations(paradigms: Iterable[CollapsedParadigm]) -> list[Derivation]:
    """Every (derived, base) pair related by a uniform non-empty prefix or suffix.

    Candidates come from looking up each proper prefix and proper suffix of a
    lemma among the other lemmas; only those pairs are checked cell by cell.
    """
    items = _values(paradigms)
    by_lemma: dict[str, list[CollapsedParadigm]] = {}
    for p in items:
        by_lemma.setdefault(p.lemma, []).append(p)

    found = []
    for p in items:
        lemma = p.lemma
        for cut in range(1, len(lemma)):
            # lemma = affix + base_lemma
            for base in by_lemma.get(lemma[cut:], ()):
                if base.lexeme != p.lexeme and _derives(p, base, lemma[:cut], "prefix"):
                    found.append(Derivation(p.lexeme, base.lexeme, lemma[:cut], "prefix"))
            # lemma = base_lemma + affix
            for base in by_lemma.get(lemma[:cut], ()):
                if base.lexeme != p.lexeme and _derives(p, base, lemma[cut:], "suffix"):
                    found.append(Derivation(p.lexeme, base.lexeme, lemma[cut:], "suffix"))
    found.sort()
    return found


def find_derived(paradigms: Iterable[CollapsedParadigm]) -> set[str]:
    return {d.lexeme for d in find_derivations(paradigms)}


def filter_derived(paradigms) -> dict[str, CollapsedParadigm]:
    """Drop every lexeme derived from another; bases are kept."""
    items = _values(paradigms)
    derived = find_derived(items)
    if derived:
        log.info("removing %d derived lexemes", len(derived))
    return {p.lexeme: p for p in items if p.lexeme not in derived}


def format_derivations(derivations: Iterable[Derivation]) -> str:
    return "".join(f"{d.lexeme}\t{d.base}\t{d.affix}\t{d.direction}\n" for d in derivations)


def parse_derivations(text: str) -> list[Derivation]:
    out = []
    for line in text.splitlines():
        if line.strip():
            lexeme, base, affix, direction = line.split("\t")
            out.append(Derivation(lexeme, base, affix, direction))
    return out
