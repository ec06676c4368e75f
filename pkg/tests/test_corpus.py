import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wugscope.corpus import (
    LEMMA_SLOT,
    FeatureInventory,
    FrequencyTable,
    Triple,
    format_slot,
    lexeme_count,
    normalize,
    parse_frequency,
    parse_slot,
    parse_unimorph,
    serialize_frequency,
    serialize_unimorph,
)
from wugscope.errors import ConflictError, ParseError
from wugscope.prep import collapse

HERR = """\
Herr\tHerr\tN;NOM;SG
Herr\tHerrn\tN;GEN;SG
Herr\tHerrn\tN;ACC;SG
Herr\tHerrn\tN;DAT;SG
Herr\tHerren\tN;NOM;PL
Herr\tHerren\tN;GEN;PL
Herr\tHerren\tN;ACC;PL
Herr\tHerren\tN;DAT;PL
"""


class TestParseUnimorph:
    def test_single_line(self):
        p = parse_unimorph("poner\tpongo\tV;IND;PRS;1;SG\n")
        assert list(p) == ["poner"]
        cells = p["poner"].cells
        assert cells[frozenset({"V", "IND", "PRS", "1", "SG"})] == "pongo"
        assert cells[LEMMA_SLOT] == "poner"
        assert p["poner"].lemma == "poner"

    def test_empty_input(self):
        assert parse_unimorph("") == {}
        assert parse_unimorph("\n\n") == {}

    def test_two_fields_is_error_at_line_1(self):
        with pytest.raises(ParseError) as info:
            parse_unimorph("a\tb")
        assert info.value.line == 1

    def test_line_number_reported(self):
        with pytest.raises(ParseError) as info:
            parse_unimorph("go\twent\tV;PST\n\ngo\tgoes\n")
        assert info.value.line == 3

    def test_identical_duplicates_deduplicated(self):
        p = parse_unimorph("go\twent\tV;PST\ngo\twent\tPST;V\n")
        assert len(p["go"].cells) == 2

    def test_conflict_names_both_forms(self):
        with pytest.raises(ConflictError) as info:
            parse_unimorph("go\twent\tV;PST\ngo\tgoed\tV;PST\n")
        assert "went" in str(info.value) and "goed" in str(info.value)

    def test_empty_feature_bundle(self):
        with pytest.raises(ParseError):
            parse_unimorph("go\twent\t\n")

    def test_whitespace_stripped_and_nfc(self):
        decomposed = "Wörter"
        p = parse_unimorph(f"Wort \t{decomposed}\tN;NOM;PL\n")
        assert p["Wort"].cells[frozenset({"N", "NOM", "PL"})] == "Wörter"
        raw = parse_unimorph(f"Wort\t{decomposed}\tN;NOM;PL\n", normalization="none")
        assert raw["Wort"].cells[frozenset({"N", "NOM", "PL"})] == decomposed

    def test_order_of_first_appearance(self):
        p = parse_unimorph("b\tbs\tN;PL\na\tas\tN;PL\nb\tbb\tN;DU\n")
        assert list(p) == ["b", "a"]

    def test_herr_round_trip(self):
        p = parse_unimorph(HERR)
        again = parse_unimorph(serialize_unimorph(p.values()))
        assert again == p

    @settings(max_examples=50, deadline=None)
    @given(st.dictionaries(
        st.text("abcxyz", min_size=1, max_size=5),
        st.dictionaries(st.frozensets(st.sampled_from(["V", "N", "PST", "PL", "1", "2"]), min_size=1),
                        st.text("abcxyz", min_size=1, max_size=6), min_size=1, max_size=4),
        max_size=5,
    ))
    def test_round_trip_property(self, data):
        lines = "".join(f"{lem}\t{form}\t{format_slot(slot)}\n" for lem, cells in data.items()
                        for slot, form in cells.items())
        parsed = parse_unimorph(lines)
        assert parse_unimorph(serialize_unimorph(parsed.values())) == parsed


class TestSlots:
    def test_format_is_sorted(self):
        assert format_slot({"SG", "V", "3"}) == "3;SG;V"

    def test_parse_ignores_order_and_blanks(self):
        assert parse_slot("V;;PST;") == frozenset({"V", "PST"})

    def test_inventory(self):
        inv = FeatureInventory.from_slots([{"V", "PST"}, {"V", "3"}])
        assert inv.features == ("3", "PST", "V")
        assert inv.index("V") == 2 and "PST" in inv and len(inv) == 3

    def test_triple_rejects_empty_form(self):
        with pytest.raises(ValueError):
            Triple("go", frozenset({"V"}), "")

    def test_normalize_rejects_unknown_form(self):
        with pytest.raises(Exception):
            normalize("a", "NFX")


class TestFrequency:
    def test_direct(self):
        assert parse_frequency("went\t1000\n")["went"] == 1000

    def test_repeats_summed(self):
        assert parse_frequency("a\t1\na\t2\n")["a"] == 3

    @pytest.mark.parametrize("bad", ["a\t-1", "a\t1.5", "a\tx", "a\t1\t2", "a"])
    def test_bad_lines(self, bad):
        with pytest.raises(ParseError) as info:
            parse_frequency("ok\t1\n" + bad)
        assert info.value.line == 2

    def test_absent_is_zero(self):
        assert FrequencyTable({"a": 1})["zzz"] == 0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            FrequencyTable({"a": -1})

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.text("abc", min_size=1, max_size=3), st.integers(0, 10**6)), max_size=12),
           st.randoms())
    def test_permutation_invariant(self, rows, rnd):
        text = "".join(f"{f}\t{c}\n" for f, c in rows)
        shuffled = list(rows)
        rnd.shuffle(shuffled)
        assert parse_frequency(text) == parse_frequency("".join(f"{f}\t{c}\n" for f, c in shuffled))

    def test_serialize_round_trip(self):
        t = parse_frequency("b\t2\na\t1\n")
        assert serialize_frequency(t) == "a\t1\nb\t2\n"
        assert parse_frequency(serialize_frequency(t)) == t


class TestLexemeCount:
    def test_sum(self):
        p = parse_unimorph("go\twent\tV;PST\ngo\tgone\tV;PTCP\n")["go"]
        assert lexeme_count(collapse(p), FrequencyTable({"go": 5, "went": 3, "gone": 2})) == 10

    def test_absent_contributes_zero(self):
        p = parse_unimorph("go\twent\tV;PST\n")["go"]
        assert lexeme_count(collapse(p), FrequencyTable({"went": 3})) == 3

    def test_syncretic_cell_counted_once(self):
        herr = collapse(parse_unimorph(HERR)["Herr"])
        assert lexeme_count(herr, FrequencyTable({"Herr": 10, "Herrn": 7, "Herren": 4})) == 21

    def test_at_least_any_single_form(self):
        herr = collapse(parse_unimorph(HERR)["Herr"])
        freq = FrequencyTable({"Herr": 10, "Herrn": 7, "Herren": 4})
        assert all(lexeme_count(herr, freq) >= freq[w] for w in herr.cells.values())
