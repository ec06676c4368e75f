"""Linear mixed model with per-language random intercepts and slopes, fit by ML.

    iota = b0 + b1 * log_count + u0[lang] + u1[lang] * log_count + e

with (u0, u1) ~ N(0, G) and e ~ N(0, s2).  Writing G = s2 * L L^T, the fixed
effects and s2 have closed forms given L, so only the three log-Cholesky
entries of L are searched (Nelder-Mead from a fixed grid of starts).  Each language is reduced to its
cross-product matrices and the Woodbury identity handles the 2x2 random-effect
block, so one likelihood evaluation costs O(languages).
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ..errors import InputError
from .special import chi2_sf

log = logging.getLogger(__name__)

MAX_ITER = 2000
START_FRACTION = 0.1
START_OFFSETS = (-6.0, 0.0, 3.0)
# log-Cholesky diagonal floor: a variance ratio of e^-30 is zero for all purposes,
# and the flat plateau below it lets the simplex contract instead of drifting
LOG_DIAG_FLOOR = -15.0


@dataclass(frozen=True)
class ObservationSet:
    language: tuple[str, ...]
    unit: tuple[str, ...]
    log_count: np.ndarray
    iota: np.ndarray
    level: str = "form"

    def __post_init__(self):
        n = len(self.language)
        if not (len(self.unit) == n == len(self.log_count) == len(self.iota)):
            raise InputError("observation columns differ in length")
        object.__setattr__(self, "log_count", np.asarray(self.log_count, dtype=np.float64))
        object.__setattr__(self, "iota", np.asarray(self.iota, dtype=np.float64))
        if not np.isfinite(self.log_count).all() or not np.isfinite(self.iota).all():
            raise InputError("observations must be finite (drop zero counts first)")

    def __len__(self):
        return len(self.language)

    def languages(self) -> list[str]:
        return sorted(set(self.language))

    def for_language(self, lang: str) -> tuple[np.ndarray, np.ndarray]:
        mask = np.array([l == lang for l in self.language], dtype=bool)
        return self.log_count[mask], self.iota[mask]


@dataclass
class MixedModelFit:
    beta: np.ndarray  # (b0,) or (b0, b1)
    re_cov: np.ndarray  # 2x2 covariance of (u0, u1)
    residual_var: float
    loglik: float
    n_params: int
    n_obs: int
    converged: bool
    theta: np.ndarray = field(repr=False)  # log-Cholesky of G / s2
    iterations: int = 0

    @property
    def beta0(self) -> float:
        return float(self.beta[0])

    @property
    def beta1(self) -> float:
        return float(self.beta[1]) if len(self.beta) > 1 else 0.0

    @property
    def aic(self) -> float:
        return 2 * self.n_params - 2 * self.loglik

    def to_dict(self) -> dict:
        return {
            "beta0": self.beta0,
            "beta1": self.beta1,
            "re_cov": self.re_cov.tolist(),
            "residual_var": float(self.residual_var),
            "loglik": float(self.loglik),
            "aic": float(self.aic),
            "k": self.n_params,
            "n": self.n_obs,
            "converged": self.converged,
        }


def cholesky_factor(theta) -> np.ndarray:
    d0 = max(theta[0], LOG_DIAG_FLOOR)
    d1 = max(theta[2], LOG_DIAG_FLOOR)
    return np.array([[math.exp(d0), 0.0], [theta[1], math.exp(d1)]])


class _Problem:
    """Per-language cross products for one fixed-effect design."""

    def __init__(self, obs: ObservationSet, with_slope: bool):
        langs = obs.languages()
        if len(langs) < 2:
            raise InputError("mixed model needs at least 2 languages")
        self.groups = []
        for lang in langs:
            x, y = obs.for_language(lang)
            if len(x) < 3:
                raise InputError(f"language {lang!r} has only {len(x)} observations")
            Z = np.column_stack([np.ones_like(x), x])
            X = Z if with_slope else Z[:, :1]
            self.groups.append((Z.T @ Z, Z.T @ X, Z.T @ y, X.T @ X, X.T @ y, float(y @ y)))
        self.n = len(obs)
        self.p = 2 if with_slope else 1

    def profile(self, theta):
        """(loglik, beta, s2) with beta and s2 maximized out for this theta."""
        L = cholesky_factor(theta)
        XtWX = np.zeros((self.p, self.p))
        XtWy = np.zeros(self.p)
        ytWy = 0.0
        logdet = 0.0
        for ZtZ, ZtX, Zty, XtX, Xty, yty in self.groups:
            M = np.eye(2) + L.T @ ZtZ @ L
            cf = np.linalg.cholesky(M)
            logdet += 2.0 * np.log(np.diag(cf)).sum()
            LZX = L.T @ ZtX
            LZy = L.T @ Zty
            SX = np.linalg.solve(M, LZX)
            Sy = np.linalg.solve(M, LZy)
            XtWX += XtX - LZX.T @ SX
            XtWy += Xty - LZX.T @ Sy
            ytWy += yty - LZy @ Sy
        beta = np.linalg.solve(XtWX, XtWy)
        rss = ytWy - beta @ XtWy
        s2 = max(rss, 1e-300) / self.n
        ll = -0.5 * self.n * (math.log(2 * math.pi * s2) + 1.0) - 0.5 * logdet
        return ll, beta, float(s2)


def default_start(obs: ObservationSet) -> np.ndarray:
    """Random-effect variances at 10% of the total, correlation 0.

    On the relative scale G / s2 (taking s2 as the total variance) the
    intercept entry is 0.1 and the slope entry 0.1 / var(log_count), so the
    slope term also contributes about 10% of the variance.
    """
    vx = float(np.var(obs.log_count))
    slope = START_FRACTION / vx if vx > 0 else START_FRACTION
    return np.array([0.5 * math.log(START_FRACTION), 0.0, 0.5 * math.log(slope)])


def start_grid(obs: ObservationSet) -> list[np.ndarray]:
    """Default start first, then a fixed grid around it.

    With few languages the ML optimum often sits on a boundary (a variance at
    zero, or the two random effects perfectly correlated), and a simplex from
    one start can settle on a ridge well short of it.
    """
    base = default_start(obs)
    scale = math.exp(base[2])
    grid = [base]
    for a, b, c in itertools.product(START_OFFSETS, (-1.0, 0.0, 1.0), START_OFFSETS):
        if (a, b, c) != (0.0, 0.0, 0.0):
            grid.append(base + np.array([a, b * scale, c]))
    return grid


def _simplex(theta0):
    steps = np.diag([1.0, 0.5 * math.exp(theta0[2]) + 0.1, 1.0])
    return np.vstack([theta0, theta0 + steps])


def _nelder_mead(objective, theta, budget):
    return minimize(
        objective, theta, method="Nelder-Mead",
        options={"maxiter": budget, "initial_simplex": _simplex(theta),
                 "xatol": 1e-7, "fatol": 1e-10},
    )


def _fit(obs: ObservationSet, with_slope: bool, start=None) -> MixedModelFit:
    problem = _Problem(obs, with_slope)
    starts = start_grid(obs)
    if start is not None:
        starts.insert(0, np.asarray(start, dtype=np.float64))

    def objective(t):
        if np.any(np.abs(t) > 50):
            return np.inf
        try:
            ll = problem.profile(t)[0]
        except np.linalg.LinAlgError:  # variances so large the fixed effects are unidentified
            return np.inf
        return -ll if math.isfinite(ll) else np.inf

    best = None
    iterations = 0
    for theta0 in starts:
        res = _nelder_mead(objective, theta0, MAX_ITER)
        iterations += int(res.nit)
        if best is None or res.fun < best.fun:
            best = res
    # restart from the winner in case its simplex collapsed
    res = _nelder_mead(objective, best.x, MAX_ITER)
    iterations += int(res.nit)
    converged = bool(res.success)
    theta = res.x if res.fun <= best.fun else best.x
    theta = np.array([max(theta[0], LOG_DIAG_FLOOR), theta[1], max(theta[2], LOG_DIAG_FLOOR)])
    ll, beta, s2 = problem.profile(theta)
    L = cholesky_factor(theta)
    k = (2 if with_slope else 1) + 3 + 1
    if not converged:
        log.warning("mixed model did not converge within %d simplex iterations", MAX_ITER)
    return MixedModelFit(beta, s2 * (L @ L.T), s2, ll, k, len(obs), converged, theta, iterations)


def fit_mixed(obs: ObservationSet, start=None) -> MixedModelFit:
    """Full model: fixed intercept and log-count slope, random intercept and slope per language."""
    return _fit(obs, True, start)


def fit_mixed_null(obs: ObservationSet, start=None) -> MixedModelFit:
    """Same random-effect structure with the fixed slope held at 0."""
    return _fit(obs, False, start)


def compare_models(obs: ObservationSet) -> tuple[MixedModelFit, MixedModelFit]:
    """Fit null and full models; the full fit is also started from the null optimum
    so that nestedness holds numerically, and the better of the two runs is kept."""
    null = fit_mixed_null(obs)
    full = fit_mixed(obs)
    if full.loglik < null.loglik:
        refit = fit_mixed(obs, start=null.theta)
        if refit.loglik > full.loglik:
            full = refit
    return full, null


def likelihood_ratio_test(full: MixedModelFit, null: MixedModelFit) -> tuple[float, int, float]:
    stat = 2.0 * (full.loglik - null.loglik)
    if stat < 0:
        log.warning("full model loglik below null (%.6g); flooring LRT statistic at 0", stat)
        stat = 0.0
    df = full.n_params - null.n_params
    return stat, df, chi2_sf(stat, df)


def aic_log_odds(full: MixedModelFit, null: MixedModelFit) -> float:
    """Log relative likelihood (AIC scale) in favour of ``full``."""
    return (null.aic - full.aic) / 2.0
