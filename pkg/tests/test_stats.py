import itertools
import math
from pathlib import Path

import numpy as np
import pytest
import scipy.special as sc
import scipy.stats as ss
from hypothesis import given, settings
from hypothesis import strategies as st

from wugscope.corpus import FrequencyTable, parse_unimorph
from wugscope.errors import InputError
from wugscope.prep import collapse
from wugscope.stats import (
    Exclusions,
    FormScore,
    ObservationSet,
    aic_log_odds,
    betainc,
    build_observations,
    chi2_sf,
    compare_models,
    fit_mixed,
    fit_mixed_null,
    gammainc,
    gammaincc,
    likelihood_ratio_test,
    pearson,
    spearman,
    t_two_sided,
)
from wugscope.stats.mixed import LOG_DIAG_FLOOR, MixedModelFit, _Problem

DATA = Path(__file__).parent / "data"


class TestSpecialFunctions:
    # textbook chi-squared and t critical values
    @pytest.mark.parametrize("stat,df,p", [(3.841, 1, 0.05), (6.635, 1, 0.01), (10.828, 1, 0.001),
                                           (5.991, 2, 0.05), (11.070, 5, 0.05)])
    def test_chi2_table(self, stat, df, p):
        assert chi2_sf(stat, df) == pytest.approx(p, abs=1e-3)

    @pytest.mark.parametrize("t,df,p", [(2.228, 10, 0.05), (12.706, 1, 0.05), (1.96, 10**6, 0.05), (2.576, 10**6, 0.01)])
    def test_t_table(self, t, df, p):
        assert t_two_sided(t, df) == pytest.approx(p, abs=1e-3)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.05, 50), st.floats(0.05, 50), st.floats(0.0, 1.0))
    def test_betainc_vs_scipy(self, a, b, x):
        assert betainc(a, b, x) == pytest.approx(sc.betainc(a, b, x), abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.05, 100), st.floats(0.0, 300))
    def test_gamma_vs_scipy(self, a, x):
        assert gammaincc(a, x) == pytest.approx(sc.gammaincc(a, x), abs=1e-12)
        assert gammainc(a, x) == pytest.approx(sc.gammainc(a, x), abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.0, 200), st.integers(1, 30))
    def test_chi2_vs_scipy(self, x, df):
        assert chi2_sf(x, df) == pytest.approx(ss.chi2.sf(x, df), abs=1e-12)

    def test_chi2_nonpositive(self):
        assert chi2_sf(0.0) == 1.0 and chi2_sf(-1.0) == 1.0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            betainc(1, 1, 1.5)
        with pytest.raises(ValueError):
            gammaincc(-1, 1)


class TestCorrelation:
    def test_pearson_vs_scipy(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=40)
        y = 0.3 * x + rng.normal(size=40)
        r, p = pearson(x, y)
        ref = ss.pearsonr(x, y)
        assert r == pytest.approx(ref.statistic, abs=1e-12)
        assert p == pytest.approx(ref.pvalue, abs=1e-10)

    def test_spearman_with_ties_vs_scipy(self):
        x = [1, 2, 2, 3, 4, 4, 4, 5, 6, 7]
        y = [2, 1, 4, 3, 6, 5, 5, 8, 7, 9]
        rho, p = spearman(x, y)
        ref = ss.spearmanr(x, y)
        assert rho == pytest.approx(ref.statistic, abs=1e-12)
        assert p == pytest.approx(ref.pvalue, abs=1e-10)

    def test_perfect(self):
        assert pearson([1, 2, 3], [2, 4, 6]) == (1.0, 0.0)
        assert spearman([1, 2, 3, 4], [1, 8, 27, 64])[0] == pytest.approx(1.0)

    def test_errors(self):
        with pytest.raises(InputError):
            pearson([1, 2], [1, 2])
        with pytest.raises(InputError):
            pearson([1, 1, 1], [1, 2, 3])
        with pytest.raises(InputError):
            pearson([1, 2, 3], [1, 2])


def simulate(seed, n_lang=5, per=(80, 200), b0=0.5, b1=0.3, sd_u0=0.4, sd_u1=0.15, noise=1.0):
    rng = np.random.default_rng(seed)
    lang, x, y = [], [], []
    for g in range(n_lang):
        m = int(rng.integers(per[0], per[1] + 1))
        xs = rng.normal(3.0, 1.5, size=m)
        u0, u1 = rng.normal(0, sd_u0), rng.normal(0, sd_u1)
        ys = b0 + u0 + (b1 + u1) * xs + rng.normal(0, noise, size=m)
        lang += [f"g{g}"] * m
        x.extend(xs)
        y.extend(ys)
    return ObservationSet(tuple(lang), tuple(map(str, range(len(x)))), x, y)


def dense_loglik(obs, beta, G, s2, with_slope=True):
    """Direct multivariate-normal log-likelihood with the full covariance of each group."""
    total = 0.0
    for lang in obs.languages():
        x, y = obs.for_language(lang)
        Z = np.column_stack([np.ones_like(x), x])
        X = Z if with_slope else Z[:, :1]
        V = Z @ G @ Z.T + s2 * np.eye(len(x))
        total += ss.multivariate_normal(X @ beta, V).logpdf(y)
    return total


class TestMixedModel:
    def test_profile_matches_dense_likelihood(self):
        obs = simulate(1, n_lang=3, per=(10, 20))
        prob = _Problem(obs, True)
        theta = np.array([-0.7, 0.2, -1.3])
        ll, beta, s2 = prob.profile(theta)
        L = np.array([[math.exp(theta[0]), 0], [theta[1], math.exp(theta[2])]])
        assert ll == pytest.approx(dense_loglik(obs, beta, s2 * L @ L.T, s2), abs=1e-8)

    def test_profiled_beta_and_s2_are_maximizers(self):
        obs = simulate(2, n_lang=3, per=(10, 20))
        prob = _Problem(obs, True)
        theta = np.array([-0.5, 0.1, -1.0])
        ll, beta, s2 = prob.profile(theta)
        L = np.array([[math.exp(theta[0]), 0], [theta[1], math.exp(theta[2])]])
        for db in ([0.01, 0], [0, 0.01], [-0.01, 0.005]):
            for f in (0.98, 1.0, 1.02):
                other = dense_loglik(obs, beta + np.array(db), f * s2 * L @ L.T, f * s2)
                assert other <= ll + 1e-9

    def test_matches_statsmodels(self):
        sm = pytest.importorskip("statsmodels.formula.api")
        import pandas as pd

        obs = simulate(3)
        df = pd.DataFrame({"y": obs.iota, "x": obs.log_count, "g": obs.language})
        ref = sm.mixedlm("y ~ x", df, groups=df["g"], re_formula="~x").fit(reml=False, method="lbfgs")
        fit = fit_mixed(obs)
        assert fit.loglik >= ref.llf - 1e-6
        assert fit.loglik == pytest.approx(ref.llf, abs=1e-4)
        assert fit.beta1 == pytest.approx(ref.fe_params["x"], abs=1e-3)

    def test_recovers_slope(self):
        fit = fit_mixed(simulate(4, n_lang=8, per=(300, 400), noise=0.5))
        assert fit.converged
        assert fit.beta1 == pytest.approx(0.3, abs=0.15)

    def test_nested_models(self):
        obs = simulate(5, b1=0.0)
        full, null = compare_models(obs)
        assert full.loglik >= null.loglik - 1e-9
        assert (full.n_params, null.n_params) == (6, 5)
        stat, df, p = likelihood_ratio_test(full, null)
        assert df == 1 and stat >= 0 and 0 <= p <= 1
        assert aic_log_odds(full, null) == pytest.approx((null.aic - full.aic) / 2)

    def test_lrt_floors_negative_statistic(self, caplog):
        kw = dict(re_cov=np.eye(2), residual_var=1.0, n_obs=10, converged=True, theta=np.zeros(3))
        full = MixedModelFit(np.zeros(2), loglik=-10.0, n_params=6, **kw)
        null = MixedModelFit(np.zeros(1), loglik=-9.0, n_params=5, **kw)
        assert likelihood_ratio_test(full, null) == (0.0, 1, 1.0)

    def test_null_has_zero_slope(self):
        null = fit_mixed_null(simulate(6))
        assert null.beta1 == 0.0 and len(null.beta) == 1

    def test_degenerate_variances_hit_floor(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=300)
        y = 1.0 + 0.5 * x + rng.normal(0, 0.1, size=300)
        lang = tuple(f"g{i % 4}" for i in range(300))
        fit = fit_mixed(ObservationSet(lang, tuple(map(str, range(300))), x, y))
        assert fit.converged
        assert np.all(np.isfinite(fit.re_cov))
        assert fit.theta[0] >= LOG_DIAG_FLOOR and fit.theta[2] >= LOG_DIAG_FLOOR

    def test_boundary_optimum_beats_grid(self):
        # three languages whose null-model optimum has perfectly correlated random
        # effects; a single simplex from the default start stalls ~4.7 units short
        rows = [l.split("\t") for l in (DATA / "boundary_obs.tsv").read_text().splitlines()[1:]]
        obs = ObservationSet(tuple(r[0] for r in rows), tuple(map(str, range(len(rows)))),
                             [float(r[1]) for r in rows], [float(r[2]) for r in rows])
        null = fit_mixed_null(obs)
        prob = _Problem(obs, False)
        d = np.linspace(-8, 6, 15)
        grid = max(prob.profile(np.array(t))[0] for t in itertools.product(d, np.linspace(-8, 8, 17), d))
        assert null.loglik >= grid - 1e-9
        assert null.loglik > -1696.0
        full, null2 = compare_models(obs)
        assert full.loglik >= null2.loglik

    def test_needs_two_languages(self):
        obs = ObservationSet(("a",) * 5, tuple("12345"), [1, 2, 3, 4, 5], [1, 2, 3, 4, 6])
        with pytest.raises(InputError):
            fit_mixed(obs)

    def test_to_dict_json_ready(self):
        import json

        json.dumps(fit_mixed(simulate(8, n_lang=3)).to_dict())

    def test_rejects_nonfinite(self):
        with pytest.raises(InputError):
            ObservationSet(("a", "b", "c"), ("1", "2", "3"), [0, float("-inf"), 1], [1, 2, 3])


class TestObservations:
    def setup_method(self):
        text = "go\twent\tV;PST\ngo\tgone\tV;PTCP\nwalk\twalked\tV;PST\nwalk\twalked\tV;PTCP\nbe\tbe\tV;SBJV\n"
        self.paradigms = {"en": {k: collapse(v) for k, v in parse_unimorph(text).items()}}
        self.freqs = {"en": FrequencyTable({"go": 10, "went": 5, "gone": 0, "walked": 3, "be": 7})}
        S = frozenset
        self.scores = [
            FormScore("en", "go", S({"V", "PST"}), "went", -3.0, 2.9),
            FormScore("en", "go", S({"V", "PTCP"}), "gone", -2.0, 1.8),
            FormScore("en", "walk", S({"V", "PST", "PTCP"}), "walked", -0.1, -2.3),
        ]

    def test_form_level_drops_zero_counts(self):
        exc = Exclusions()
        obs = build_observations(self.scores, self.freqs, "form", ["en"], exclusions=exc)
        assert obs.unit == ("go|went", "walk|walked")
        np.testing.assert_allclose(obs.log_count, [math.log(5), math.log(3)])
        assert exc.zero_count == 1

    def test_lexeme_level(self):
        exc = Exclusions()
        obs = build_observations(self.scores, self.freqs, "form" if False else "lexeme", ["en"], self.paradigms, exc)
        assert obs.unit == ("go", "walk")
        np.testing.assert_allclose(obs.log_count, [math.log(15), math.log(3)])
        np.testing.assert_allclose(obs.iota, [2.35, -2.3])
        assert exc.lemma_only == 1  # "be": only syncretic with its lemma

    def test_language_filter(self):
        obs = build_observations(self.scores, self.freqs, "form", [])
        assert len(obs) == 0

    def test_bad_level(self):
        with pytest.raises(ValueError):
            build_observations(self.scores, self.freqs, "word", ["en"])
