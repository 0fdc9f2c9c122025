import csv
import json
import random
from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmdforge.errors import EmptyEvaluation, MalformedCsv, NoMeasurementRows, NoUnitRows
from dmdforge.evaluation import (
    PredictionRow,
    anls,
    anls_item,
    evaluate,
    levenshtein,
    numeric_match,
    one_word_accuracies,
    read_predictions,
    run_benchmark,
    write_per_device_csv,
)


def lev_oracle(a, b):
    """Memoized recursive definition."""
    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))
    return d(len(a), len(b))


def _random_strings(rng, n, alphabet="ab0.1 VA"):
    return ["".join(rng.choice(alphabet) for _ in range(rng.randint(0, 30))) for _ in range(n)]


def test_levenshtein_examples():
    assert levenshtein("", "abc") == 3
    assert levenshtein("30", "30") == 0
    assert levenshtein("0.022 V", "0.022 A") == 1
    assert levenshtein("kitten", "sitting") == 3


def test_levenshtein_matches_oracle():
    rng = random.Random(0)
    xs, ys = _random_strings(rng, 1000), _random_strings(rng, 1000)
    for a, b in zip(xs, ys):
        assert levenshtein(a, b) == lev_oracle(a, b)


def test_levenshtein_symmetry_and_triangle():
    rng = random.Random(1)
    s = _random_strings(rng, 600)
    for a, b, c in zip(s[0::3], s[1::3], s[2::3]):
        assert levenshtein(a, b) == levenshtein(b, a)
        assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=15), st.text(max_size=15), st.text(max_size=8))
def test_common_suffix_never_increases_distance(a, b, s):
    assert levenshtein(a + s, b + s) <= levenshtein(a, b)


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=20), st.text(min_size=1, max_size=20))
def test_anls_item_range(pred, gt):
    assert 0.0 <= anls_item(pred, gt) <= 1.0
    if gt.strip():
        assert anls_item(gt, gt) == 1.0


def test_anls_item_examples():
    assert anls_item("0.022 A", "0.022 V") == pytest.approx(6 / 7, abs=1e-9)
    assert anls_item("30", "30") == 1.0
    assert anls_item("abcd", "wxyz") == 0.0
    assert anls_item("  TEMPO ", "tempo") == 1.0
    assert anls_item("ab", "ac", tau=0.5) == 0.5
    assert anls_item("ab", "ac", tau=0.4) == 0.0
    assert anls_item("35.9", ["36.9", "35.9"]) == 1.0


def _row(pred, gt, target="other", device=""):
    return PredictionRow("img", "q", pred, gt, target, device)


def test_anls_aggregate():
    assert anls([_row("a", "a"), _row("b", "b")]) == 1.0
    assert anls([_row("abc", "abc"), _row("xyz", "abc")]) == 0.5
    assert anls([_row("0.022 A", "0.022 V")]) == pytest.approx(6 / 7)
    with pytest.raises(EmptyEvaluation):
        anls([])


def test_one_word_accuracies():
    rows = [_row("76", "76", "measurement"), _row("36.9", "35.9", "measurement"),
            _row("bpm", "BPM", "unit"), _row("17:57", "17:57", "measurement")]
    numeric, unit, word = one_word_accuracies(rows)
    assert (numeric, unit) == (2 / 3, 1.0) and word == pytest.approx((2 / 3 + 1) / 2, abs=1e-12)
    assert numeric_match("76.0", "76") and numeric_match("+4", "4")
    assert not numeric_match("00.67", "0.068") and numeric_match("00.67", "0.67")
    assert not numeric_match("17.57", "17:57")
    with pytest.raises(NoMeasurementRows):
        one_word_accuracies([_row("V", "V", "unit")])
    with pytest.raises(NoUnitRows):
        one_word_accuracies([_row("1", "1", "measurement")])


FIXTURE = [
    ("76", "76", "measurement", "metronome"),
    ("36.9", "35.9", "measurement", "metronome"),
    ("bpm", "BPM", "unit", "metronome"),
    ("V", "mmHg", "unit", "metronome"),
    ("The digital display conveys a TEMPO reading of 30 BPM.",
     "The digital display conveys a TEMPO reading of 30 BPM.", "other", "multimeter"),
    ("0.022 A", "0.022 V", "other", "multimeter"),
    ("76.0", "76", "measurement", "multimeter"),
]


def _write_fixture(path, rows=FIXTURE, with_device=True):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["image", "question", "prediction", "ground_truth", "target"] + (["device"] if with_device else []))
        for i, (p, g, t, d) in enumerate(rows):
            w.writerow([f"img{i}.png", "q?", p, g, t] + ([d] if with_device else []))
    return path


def test_run_benchmark_hand_scored(tmp_path):
    report = run_benchmark(_write_fixture(tmp_path / "p.csv"), tmp_path / "r.json")
    assert report.n_items == 7
    assert report.anls == pytest.approx((1 + 0.75 + 1 + 0 + 1 + 6 / 7 + 0.5) / 7, abs=1e-12)
    assert report.numeric_accuracy == pytest.approx(2 / 3)
    assert report.unit_accuracy == 0.5
    assert report.word_level_accuracy == pytest.approx((2 / 3 + 0.5) / 2, abs=1e-9)
    metronome, multimeter = report.per_device["metronome"], report.per_device["multimeter"]
    assert metronome["anls"] == pytest.approx(0.6875) and metronome["word_level_accuracy"] == 0.5
    assert multimeter["numeric_accuracy"] == 1.0 and multimeter["unit_accuracy"] is None
    assert multimeter["anls"] == pytest.approx((1 + 6 / 7 + 0.5) / 3)
    saved = json.loads((tmp_path / "r.json").read_text())
    assert saved["anls"] == pytest.approx(report.anls) and saved["tau"] == 0.5
    write_per_device_csv(report, tmp_path / "dev.csv")
    lines = (tmp_path / "dev.csv").read_text().splitlines()
    assert lines[1].startswith("ALL,7,") and len(lines) == 4


def test_run_benchmark_without_device_column(tmp_path):
    report = run_benchmark(_write_fixture(tmp_path / "p.csv", with_device=False))
    assert report.per_device == {}


def test_word_level_invariant_random(tmp_path):
    rng = random.Random(3)
    rows = [(str(rng.randint(0, 9)), str(rng.randint(0, 9)), rng.choice(["measurement", "unit"]), "")
            for _ in range(200)]
    report = run_benchmark(_write_fixture(tmp_path / "p.csv", rows))
    assert abs(report.word_level_accuracy - (report.numeric_accuracy + report.unit_accuracy) / 2) <= 1e-9


def test_malformed_inputs(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(MalformedCsv):
        run_benchmark(empty)
    header_only = tmp_path / "header.csv"
    header_only.write_text("image,question,prediction,ground_truth,target\n", encoding="utf-8")
    with pytest.raises(EmptyEvaluation):
        run_benchmark(header_only)
    no_target = tmp_path / "nt.csv"
    no_target.write_text("image,question,prediction,ground_truth\na,b,c,d\n", encoding="utf-8")
    with pytest.raises(MalformedCsv):
        run_benchmark(no_target)
    blank_truth = tmp_path / "bt.csv"
    blank_truth.write_text("image,question,prediction,ground_truth,target\na,b,c, ,other\n", encoding="utf-8")
    with pytest.raises(MalformedCsv):
        run_benchmark(blank_truth)
    latin = tmp_path / "latin.csv"
    latin.write_bytes("image,question,prediction,ground_truth,target\na,b,\xb0C,\xb0C,unit\n".encode("latin-1"))
    with pytest.raises(MalformedCsv):
        run_benchmark(latin)


def test_multi_truth_flag(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("image,question,prediction,ground_truth,target\na,q,35.9,36.9|35.9,measurement\n",
                    encoding="utf-8")
    assert run_benchmark(path).anls == 0.0  # literal "36.9|35.9" is too far
    multi = run_benchmark(path, multi_truth=True)
    assert multi.anls == 1.0 and multi.numeric_accuracy == 1.0
    assert read_predictions(path, multi_truth=True)[0].ground_truth == ["36.9", "35.9"]


def test_evaluate_in_memory():
    report = evaluate([_row("76", "76", "measurement", "a"), _row("BPM", "BPM", "unit", "b")])
    assert report.word_level_accuracy == 1.0 and set(report.per_device) == {"a", "b"}
