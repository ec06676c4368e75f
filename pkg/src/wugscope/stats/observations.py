"""Turn per-form scores and frequency tables into regression observations."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

from ..corpus import FrequencyTable, lexeme_count
from ..irregularity import UndefinedScore, iota_lexeme
from .mixed import ObservationSet

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FormScore:
    """One scored non-lemma cell; ``slot`` is the merged slot of the collapsed paradigm."""

    language: str
    lexeme: str
    slot: frozenset
    form: str
    log_p: float
    iota: float


@dataclass
class Exclusions:
    zero_count: int = 0
    lemma_only: int = 0
    unscored: int = 0

    def to_dict(self) -> dict:
        return {"zero_count": self.zero_count, "lemma_only": self.lemma_only, "unscored": self.unscored}


def build_observations(
    scores: Iterable[FormScore],
    freqs: Mapping[str, FrequencyTable],
    level: str,
    languages: Iterable[str],
    paradigms: Mapping[str, Mapping] | None = None,
    exclusions: Exclusions | None = None,
) -> ObservationSet:
    """Rows for the frequency analysis at ``level`` "form" or "lexeme".

    Form level: one row per scored form with count >= 1.  Lexeme level: one
    row per lexeme with summed paradigm count >= 1 and at least one non-lemma
    cell; its score is the paradigm average.  Counts enter as natural logs.
    """
    if level not in ("form", "lexeme"):
        raise ValueError(f"level must be 'form' or 'lexeme', got {level!r}")
    keep = set(languages)
    exclusions = exclusions if exclusions is not None else Exclusions()
    rows = []
    by_lexeme: dict[tuple[str, str], dict] = {}
    for s in scores:
        if s.language not in keep:
            continue
        if level == "form":
            count = freqs[s.language][s.form]
            if count < 1:
                exclusions.zero_count += 1
                continue
            rows.append((s.language, f"{s.lexeme}|{s.form}", math.log(count), s.iota))
        else:
            by_lexeme.setdefault((s.language, s.lexeme), {})[s.slot] = s.iota

    if level == "lexeme":
        if paradigms is None:
            raise ValueError("lexeme level needs the collapsed paradigms")
        for lang in sorted(keep):
            for lexeme, paradigm in paradigms.get(lang, {}).items():
                form_scores = by_lexeme.get((lang, lexeme))
                if form_scores is None:
                    if len(paradigm.cells) < 2:
                        exclusions.lemma_only += 1
                    else:
                        exclusions.unscored += 1
                    continue
                try:
                    iota = iota_lexeme(paradigm, form_scores).value
                except UndefinedScore:
                    exclusions.lemma_only += 1
                    continue
                count = lexeme_count(paradigm, freqs[lang])
                if count < 1:
                    exclusions.zero_count += 1
                    continue
                rows.append((lang, lexeme, math.log(count), iota))

    if not rows:
        return ObservationSet((), (), [], [], level)
    lang, unit, x, y = zip(*rows)
    return ObservationSet(lang, unit, list(x), list(y), level)
