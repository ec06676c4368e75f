"""Degree of irregularity: the negative log odds of the held-out form's probability.

Positive values mean most of the model's mass falls on other strings;
negative values mean the correct form is the likely one.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

from .errors import InputError, NumericError

EPSILON = 1e-9
# largest attainable |iota| under the clamp, about 20.723
CLAMP_BOUND = math.log((1.0 - EPSILON) / EPSILON)


class UndefinedScore(ValueError):
    """Lexeme has no cell other than its lemma, so the average is undefined."""


@dataclass(frozen=True)
class IrregularityScore:
    value: float
    probability: float
    level: str = "form"


def clamp(p: float) -> float:
    return min(max(p, EPSILON), 1.0 - EPSILON)


def iota_form(p: float) -> IrregularityScore:
    if not (0.0 <= p <= 1.0):
        raise NumericError(f"probability {p!r} outside [0, 1]")
    q = clamp(p)
    # 1 - EPSILON is not exact in binary, so clip to keep |iota| <= CLAMP_BOUND
    value = min(max(math.log1p(-q) - math.log(q), -CLAMP_BOUND), CLAMP_BOUND)
    return IrregularityScore(value, q, "form")


def iota_from_logprob(log_p: float) -> IrregularityScore:
    if math.isnan(log_p) or log_p > 1e-12:
        raise NumericError(f"log-probability {log_p!r} is not <= 0")
    return iota_form(math.exp(min(log_p, 0.0)))


def iota_lexeme(paradigm, form_scores: Mapping) -> IrregularityScore:
    """Mean form-level score over every cell whose form differs from the lemma.

    ``form_scores`` is keyed by (merged) slot.  The lexeme-level probability
    field holds the mean of the clamped form probabilities.
    """
    lemma = paradigm.lemma
    slots = [s for s, w in paradigm.cells.items() if w != lemma]
    if not slots:
        raise UndefinedScore(f"lexeme {paradigm.lexeme!r} has only its lemma cell")
    missing = [s for s in slots if s not in form_scores]
    if missing:
        raise InputError(f"lexeme {paradigm.lexeme!r}: {len(missing)} cells lack a score")
    values = [_value(form_scores[s]) for s in slots]
    probs = [getattr(form_scores[s], "probability", float("nan")) for s in slots]
    return IrregularityScore(math.fsum(values) / len(values), math.fsum(probs) / len(probs), "lexeme")


def language_average(scores: Iterable) -> float:
    values = [_value(s) for s in scores]
    if not values:
        raise InputError("no scores to average")
    return math.fsum(values) / len(values)


def _value(score) -> float:
    return score.value if isinstance(score, IrregularityScore) else float(score)
