from decimal import Decimal

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmdforge.dictionaries import (
    Dictionary,
    PatternSpec,
    RangeSpec,
    generate_from_spec,
    generate_numeric_dictionary,
    generate_pattern_dictionary,
    load_dictionary,
    load_dictionary_dir,
    sample_value,
    save_dictionary,
)
from dmdforge.errors import DuplicateEntry, EmptyDictionary, InvalidRange, OverflowGuard


def decimal_oracle(lo, hi, step, decimals, pad=0):
    """Enumerate with Decimal addition, independent of the scaled-integer path."""
    out = []
    v = Decimal(str(lo))
    q = Decimal(1).scaleb(-decimals)
    while v <= Decimal(str(hi)):
        s = str(v.quantize(q))
        if pad and len(s) < pad:
            neg = s.startswith("-")
            body = s[1:] if neg else s
            s = ("-" if neg else "") + body.zfill(pad - neg)
        out.append(s)
        v += Decimal(str(step))
    return out


def test_integer_range():
    d = generate_numeric_dictionary(RangeSpec(0, 2, 1))
    assert d.entries == ("0", "1", "2")


def test_milli_range_matches_decimal_oracle():
    d = generate_numeric_dictionary(RangeSpec("0.000", "9.999", "0.001", decimals=3))
    assert len(d) == 10000
    assert d.entries[0] == "0.000" and d.entries[-1] == "9.999"
    assert list(d.entries) == decimal_oracle("0.000", "9.999", "0.001", 3)
    assert len(set(d.entries)) == 10000


def test_zero_padded_single_value():
    d = generate_numeric_dictionary(RangeSpec("0.67", "0.67", "0.01", decimals=2, pad_width=5))
    assert d.entries == ("00.67",)


def test_prefix_and_negative_values():
    d = generate_numeric_dictionary(RangeSpec("-4.420", "-4.410", "0.002", decimals=3))
    assert "-4.416" in d
    assert d.entries[0] == "-4.420"
    d2 = generate_numeric_dictionary(RangeSpec(1, 3, 1, prefix="-", suffix="V"))
    assert d2.entries == ("-1V", "-2V", "-3V")


@pytest.mark.parametrize("kwargs", [
    dict(min_value=0, max_value=1, step=0),
    dict(min_value=0, max_value=1, step=-1),
    dict(min_value=2, max_value=1, step=1),
    dict(min_value=0, max_value=1, step="0.001", decimals=2),
])
def test_invalid_ranges(kwargs):
    with pytest.raises(InvalidRange):
        generate_numeric_dictionary(RangeSpec(**kwargs))


def test_overflow_guard():
    with pytest.raises(OverflowGuard):
        generate_numeric_dictionary(RangeSpec(0, 10 ** 8, 1))
    with pytest.raises(OverflowGuard):
        generate_numeric_dictionary(RangeSpec(0, 100, 1), cap=50)


def test_clock_pattern():
    d = generate_pattern_dictionary(PatternSpec("{H}:{M}", {"H": [0, 23, 2], "M": [0, 59, 2]}))
    assert len(d) == 1440
    assert "17:57" in d
    assert d.entries[0] == "00:00" and d.entries[-1] == "23:59"


def test_pattern_small_cases():
    assert generate_pattern_dictionary(PatternSpec("{A}", {"A": [0, 0]})).entries == ("0",)
    d = generate_pattern_dictionary(PatternSpec("{A}:{B}", {"A": [0, 1], "B": [0, 1]}))
    assert d.entries == ("0:0", "0:1", "1:0", "1:1")


def test_pattern_errors():
    with pytest.raises(InvalidRange):
        PatternSpec("no fields", {})
    with pytest.raises(InvalidRange):
        PatternSpec("{A}", {})
    with pytest.raises(OverflowGuard):
        generate_pattern_dictionary(PatternSpec("{A}{B}", {"A": [0, 9999], "B": [0, 9999]}), cap=1000)


def test_generate_from_spec_dispatch():
    assert generate_from_spec({"min_value": 1, "max_value": 2, "step": 1}).entries == ("1", "2")
    d = generate_from_spec({"pattern": "{H}h", "field_ranges": {"H": {"min": 1, "max": 2}}, "name": "hrs"})
    assert d.entries == ("1h", "2h") and d.name == "hrs"


def test_round_trip(tmp_path):
    d = generate_numeric_dictionary(RangeSpec("0.000", "9.999", "0.001", decimals=3), name="v", unit="v")
    path = tmp_path / "v.txt"
    save_dictionary(d, path)
    assert load_dictionary(path) == d


def test_load_errors_and_order(tmp_path):
    (tmp_path / "dup.txt").write_text("1\n2\n1\n", encoding="utf-8")
    with pytest.raises(DuplicateEntry):
        load_dictionary(tmp_path / "dup.txt")
    (tmp_path / "empty.txt").write_text("", encoding="utf-8")
    with pytest.raises(EmptyDictionary):
        load_dictionary(tmp_path / "empty.txt")
    (tmp_path / "hand.txt").write_text("LO\n12\nOL\n", encoding="utf-8")
    assert load_dictionary(tmp_path / "hand.txt").entries == ("LO", "12", "OL")
    with pytest.raises(FileNotFoundError):
        load_dictionary(tmp_path / "missing.txt")


def test_load_dir_keys_by_stem(tmp_path):
    (tmp_path / "a.txt").write_text("1\n", encoding="utf-8")
    (tmp_path / "b.txt").write_text("2\n", encoding="utf-8")
    assert sorted(load_dictionary_dir(tmp_path)) == ["a", "b"]


def test_dictionary_invariants():
    with pytest.raises(EmptyDictionary):
        Dictionary("x", "u", ())
    with pytest.raises(ValueError):
        Dictionary("x", "u", ("a\nb",))


def test_sample_value_basics():
    single = Dictionary("s", "u", ("42",))
    assert sample_value(single, np.random.default_rng(0)) == "42"
    d = Dictionary("d", "u", tuple(str(i) for i in range(10)))
    a = [sample_value(d, np.random.default_rng(5)) for _ in range(3)]
    assert len(set(a)) == 1


def test_sample_value_uniformity():
    d = Dictionary("d", "u", tuple(str(i) for i in range(10)))
    rng = np.random.default_rng(2024)
    draws = [sample_value(d, rng) for _ in range(100_000)]
    counts = np.array([draws.count(str(i)) for i in range(10)])
    sigma = np.sqrt(100_000 * 0.1 * 0.9)
    assert np.all(np.abs(counts - 10_000) <= 3 * sigma)
    chi2 = ((counts - 10_000) ** 2 / 10_000).sum()
    assert chi2 < 21.666  # chi-square 9 dof, alpha = 0.01


@settings(max_examples=60, deadline=None)
@given(
    lo=st.integers(-5000, 5000),
    n_steps=st.integers(0, 60),
    step=st.integers(1, 50),
    decimals=st.integers(0, 3),
    pad=st.integers(0, 8),
)
def test_entries_reparse_into_range(lo, n_steps, step, decimals, pad):
    span = n_steps * step
    scale = Decimal(10) ** -decimals
    spec = RangeSpec(Decimal(lo) * scale, Decimal(lo + span) * scale, Decimal(step) * scale,
                     decimals=decimals, pad_width=pad)
    d = generate_numeric_dictionary(spec)
    assert len(d) == n_steps + 1
    for entry in d.entries:
        v = spec.parse(entry)
        assert spec.min_value <= v <= spec.max_value
        assert ((v - spec.min_value) / spec.step) % 1 == 0
