import numpy as np
import pytest

from wugscope.corpus import LEMMA_SLOT, parse_frequency, parse_unimorph
from wugscope.errors import ConfigError
from wugscope.prep import collapse, find_derived
from wugscope.synth import SynthConfig, generate, slot_tags, zipf_counts


class TestGenerate:
    def test_regular_language_is_concatenative(self):
        lang = generate(SynthConfig(n_lexemes=50, n_slots=4, seed=3))
        tags = slot_tags(4)
        for stem, p in lang.paradigms.items():
            assert p.cells[LEMMA_SLOT] == stem
            for tag, suf in zip(tags, lang.suffixes):
                assert p.cells[tag] == stem + suf
        assert lang.gold == frozenset()

    def test_suppletive_lexemes_use_another_stem(self):
        lang = generate(SynthConfig(n_lexemes=60, n_slots=3, n_suppletive=6, seed=1))
        assert len(lang.gold) == 6
        for lex in lang.gold:
            p = lang.paradigms[lex]
            for tag, suf in zip(slot_tags(3), lang.suffixes):
                assert p.cells[tag].endswith(suf)
                assert not p.cells[tag].startswith(lex)

    def test_deterministic(self):
        a = generate(SynthConfig(n_lexemes=30, seed=9))
        b = generate(SynthConfig(n_lexemes=30, seed=9))
        assert a.paradigms == b.paradigms and a.freq == b.freq

    def test_coupling_only_changes_frequencies(self):
        base = dict(n_lexemes=80, n_suppletive=8, seed=4)
        hi = generate(SynthConfig(coupling="high-frequency", **base))
        un = generate(SynthConfig(coupling="uniform", **base))
        assert hi.paradigms == un.paradigms
        ranked = sorted(hi.lexeme_counts, key=hi.lexeme_counts.get, reverse=True)
        assert set(ranked[:8]) == hi.gold

    def test_zipf(self):
        np.testing.assert_allclose(zipf_counts(4, 1.0, 100), [100, 50, 100 / 3, 25])
        lang = generate(SynthConfig(n_lexemes=20, seed=0, top_count=1000))
        assert sorted(lang.lexeme_counts.values(), reverse=True)[:2] == [1000, 500]

    def test_no_derived_lexemes(self):
        lang = generate(SynthConfig(n_lexemes=200, n_slots=3, seed=2, stem_length=(2, 5)))
        assert find_derived(collapse(p) for p in lang.paradigms.values()) == set()

    def test_cell_proportions(self):
        lang = generate(SynthConfig(n_lexemes=5, n_slots=2, seed=0, cell_proportions=(1.0, 0.0, 0.0)))
        for stem, p in lang.paradigms.items():
            assert lang.freq[p.cells[LEMMA_SLOT]] == lang.lexeme_counts[stem]

    def test_subregular(self):
        lang = generate(SynthConfig(n_lexemes=40, n_slots=4, n_subregular=5, seed=0))
        odd = [lex for lex, p in lang.paradigms.items() if p.cells[slot_tags(4)[1]] != lex + lang.suffixes[1]]
        assert len(odd) == 5

    def test_write_round_trip(self, tmp_path):
        lang = generate(SynthConfig(n_lexemes=25, n_suppletive=3, seed=5))
        paths = lang.write(tmp_path, "x")
        assert parse_unimorph(paths["unimorph"].read_text()) == lang.paradigms
        assert parse_frequency(paths["freq"].read_text()) == lang.freq
        gold = dict(line.split("\t") for line in paths["gold"].read_text().splitlines())
        assert {k for k, v in gold.items() if v == "1"} == lang.gold

    @pytest.mark.parametrize("kw", [dict(n_lexemes=0), dict(n_suppletive=400), dict(coupling="inverse"),
                                    dict(alphabet_size=1), dict(suffixes=("a", "a", "b", "c", "d", "e")),
                                    dict(cell_proportions=(1.0,))])
    def test_config_errors(self, kw):
        with pytest.raises(ConfigError):
            SynthConfig(**kw)
