import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wugscope.corpus import parse_unimorph
from wugscope.errors import InputError, NumericError
from wugscope.irregularity import (
    CLAMP_BOUND,
    EPSILON,
    IrregularityScore,
    UndefinedScore,
    clamp,
    iota_form,
    iota_from_logprob,
    iota_lexeme,
    language_average,
)
from wugscope.prep import collapse


def S(*f):
    return frozenset(f)


class TestFormLevel:
    def test_half_is_zero(self):
        assert iota_form(0.5).value == 0.0

    def test_likely_form_is_negative(self):
        assert iota_form(0.9).value == pytest.approx(-math.log(9))

    def test_unlikely_form_is_positive(self):
        assert iota_form(0.1).value == pytest.approx(math.log(9))

    @given(st.floats(0.0, 1.0))
    def test_antisymmetric(self, p):
        assert iota_form(p).value == pytest.approx(-iota_form(1.0 - p).value, abs=1e-6)

    @given(st.floats(0.0, 1.0))
    def test_bounded(self, p):
        assert abs(iota_form(p).value) <= CLAMP_BOUND + 1e-12

    def test_bound_value(self):
        assert CLAMP_BOUND == pytest.approx(-math.log(EPSILON / (1 - EPSILON)))
        assert iota_form(0.0).value == pytest.approx(CLAMP_BOUND)
        assert iota_form(1.0).value == pytest.approx(-CLAMP_BOUND)

    def test_clamped_probability_recorded(self):
        assert iota_form(0.0).probability == EPSILON
        assert clamp(1.0) == 1 - EPSILON

    @pytest.mark.parametrize("p", [-0.1, 1.5, float("nan")])
    def test_out_of_range(self, p):
        with pytest.raises(NumericError):
            iota_form(p)

    def test_from_logprob(self):
        assert iota_from_logprob(math.log(0.25)).value == pytest.approx(math.log(3))
        assert iota_from_logprob(-1e6).value == pytest.approx(CLAMP_BOUND)
        with pytest.raises(NumericError):
            iota_from_logprob(0.5)


class TestLexemeLevel:
    def paradigm(self):
        return collapse(parse_unimorph("go\twent\tV;PST\ngo\tgone\tV;PTCP\ngo\tgoes\tV;3;SG\n")["go"])

    def test_mean_over_non_lemma_cells(self):
        p = self.paradigm()
        scores = {S("V", "PST"): iota_form(0.1), S("V", "PTCP"): iota_form(0.5), S("V", "3", "SG"): iota_form(0.9)}
        assert iota_lexeme(p, scores).value == pytest.approx(0.0, abs=1e-12)
        assert iota_lexeme(p, scores).level == "lexeme"

    def test_lemma_cell_excluded(self):
        p = self.paradigm()
        scores = {S("V", "PST"): 1.0, S("V", "PTCP"): 2.0, S("V", "3", "SG"): 3.0, p.lemma_slot: 100.0}
        assert iota_lexeme(p, scores).value == pytest.approx(2.0)

    def test_syncretic_lemma_cell_excluded(self):
        # "put" fills its lemma, past and participle: only the 3sg cell is scored
        p = collapse(parse_unimorph("put\tput\tV;PST\nput\tput\tV;PTCP\nput\tputs\tV;3;SG\n")["put"])
        assert iota_lexeme(p, {S("V", "3", "SG"): 4.0}).value == 4.0

    def test_lemma_only_undefined(self):
        p = collapse(parse_unimorph("sheep\tsheep\tN;PL\n")["sheep"])
        with pytest.raises(UndefinedScore):
            iota_lexeme(p, {})

    def test_missing_score(self):
        with pytest.raises(InputError):
            iota_lexeme(self.paradigm(), {S("V", "PST"): 1.0})


class TestLanguageLevel:
    def test_mean(self):
        assert language_average([IrregularityScore(1.0, 0.2), 3.0]) == 2.0

    def test_empty(self):
        with pytest.raises(InputError):
            language_average([])
