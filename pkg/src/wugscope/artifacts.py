"""Readers and writers for the per-stage TSV files."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

from .corpus import format_slot, parse_slot, parse_unimorph, serialize_unimorph
from .errors import ParseError
from .prep import CollapsedParadigm, collapse
from .stats.observations import FormScore

SCORE_HEADER = "language\tlexeme\tslot_features\tform\tlog_p\tiota\n"
PREDICTION_HEADER = "language\tfold\tlexeme\tslot_features\tgold\tpredicted\tlog_p_predicted\tcorrect\n"


@dataclass(frozen=True)
class Prediction:
    language: str
    fold: int
    lexeme: str
    slot: frozenset
    gold: str
    predicted: str | None
    log_p: float

    @property
    def correct(self) -> bool:
        return self.predicted is not None and self.predicted == self.gold


def write_collapsed(paradigms: Iterable[CollapsedParadigm]) -> str:
    """Collapsed paradigms as UniMorph lines whose features are the merged unions.

    Re-parsing and re-collapsing yields the same merged cells.
    """
    return serialize_unimorph(paradigms)


def read_collapsed(text: str, name: str | None = None) -> dict[str, CollapsedParadigm]:
    return {lex: collapse(p) for lex, p in parse_unimorph(text, "none", name).items()}


def write_scores(scores: Iterable[FormScore]) -> str:
    rows = [SCORE_HEADER]
    for s in scores:
        rows.append(f"{s.language}\t{s.lexeme}\t{format_slot(s.slot)}\t{s.form}\t{s.log_p!r}\t{s.iota!r}\n")
    return "".join(rows)


def read_scores(text: str, name: str | None = None) -> list[FormScore]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if lineno == 1 and line + "\n" == SCORE_HEADER:
            continue
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise ParseError("expected 6 fields in score file", lineno, name)
        try:
            log_p, iota = float(parts[4]), float(parts[5])
        except ValueError as exc:
            raise ParseError(str(exc), lineno, name) from None
        out.append(FormScore(parts[0], parts[1], parse_slot(parts[2]), parts[3], log_p, iota))
    return out


def write_predictions(preds: Iterable[Prediction]) -> str:
    rows = [PREDICTION_HEADER]
    for p in preds:
        pred = "" if p.predicted is None else p.predicted
        rows.append(
            f"{p.language}\t{p.fold}\t{p.lexeme}\t{format_slot(p.slot)}\t{p.gold}\t{pred}\t{p.log_p!r}\t{int(p.correct)}\n"
        )
    return "".join(rows)


def read_predictions(text: str, name: str | None = None) -> list[Prediction]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if lineno == 1 and line + "\n" == PREDICTION_HEADER:
            continue
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 8:
            raise ParseError("expected 8 fields in prediction file", lineno, name)
        out.append(
            Prediction(parts[0], int(parts[1]), parts[2], parse_slot(parts[3]), parts[4],
                       parts[5] or None, float(parts[6]))
        )
    return out


def read_gold(text: str, name: str | None = None) -> dict[str, float]:
    """Two-column ``key<TAB>label`` file; keys are forms or lexemes, labels numeric."""
    gold = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError("expected key<TAB>label", lineno, name)
        try:
            gold[parts[0].strip()] = float(parts[1])
        except ValueError:
            raise ParseError(f"label {parts[1]!r} is not numeric", lineno, name) from None
    return gold


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
