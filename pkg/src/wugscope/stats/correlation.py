from __future__ import annotations

import math

import numpy as np
from scipy.stats import rankdata

from ..errors import InputError
from .special import t_two_sided


def _check(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InputError("x and y must be 1-d sequences of equal length")
    if len(x) < 3:
        raise InputError(f"need at least 3 pairs, got {len(x)}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise InputError("non-finite values")
    return x, y


def pearson(x, y) -> tuple[float, float]:
    """Sample correlation and its two-sided p-value from a t test with n - 2 df."""
    x, y = _check(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx <= 0.0 or syy <= 0.0:
        raise InputError("zero variance; correlation undefined")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    df = len(x) - 2
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt(df / (1.0 - r * r))
    return r, t_two_sided(t, df)


def spearman(x, y) -> tuple[float, float]:
    """Pearson correlation of average ranks (ties share the mean rank)."""
    x, y = _check(x, y)
    return pearson(rankdata(x), rankdata(y))
