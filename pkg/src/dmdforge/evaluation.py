"""Scoring model predictions: ANLS and one-word numeric/unit accuracies."""
from __future__ import annotations

import csv
import json
import re
from dataclasses import asdict, dataclass, field
from decimal import Decimal
from pathlib import Path

from .errors import EmptyEvaluation, MalformedCsv, NoMeasurementRows, NoUnitRows

DEFAULT_TAU = 0.5
PREDICTION_COLUMNS = ["image", "question", "prediction", "ground_truth", "target"]
_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)$")


@dataclass(frozen=True)
class PredictionRow:
    image_id: str
    question: str
    prediction: str
    ground_truth: object  # str, or a list of acceptable answers
    target: str = "other"
    device: str = ""

    def truths(self):
        return list(self.ground_truth) if isinstance(self.ground_truth, (list, tuple)) else [self.ground_truth]


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def normalize(text: str) -> str:
    return text.strip().casefold()


def anls_item(pred: str, gt, tau: float = DEFAULT_TAU) -> float:
    """Similarity ``1 - NL`` when the normalized edit distance ``NL <= tau``, else 0.

    ``gt`` may be a list of acceptable answers; the best one counts.
    """
    if isinstance(gt, (list, tuple)):
        return max(anls_item(pred, g, tau) for g in gt)
    p, g = normalize(pred), normalize(gt)
    longest = max(len(p), len(g))
    if longest == 0:
        return 1.0
    nl = levenshtein(p, g) / longest
    return 1.0 - nl if nl <= tau else 0.0


def anls(rows, tau: float = DEFAULT_TAU) -> float:
    rows = list(rows)
    if not rows:
        raise EmptyEvaluation("no rows to score")
    return sum(anls_item(r.prediction, r.ground_truth, tau) for r in rows) / len(rows)


def _decimal(text):
    t = text.strip()
    return Decimal(t) if _NUMBER.match(t) else None


def numeric_match(pred: str, gt: str) -> bool:
    truth = _decimal(gt)
    if truth is None:
        return pred.strip() == gt.strip()
    guess = _decimal(pred)
    return guess is not None and guess == truth


def unit_match(pred: str, gt: str) -> bool:
    return pred.strip().casefold() == gt.strip().casefold()


def _any_truth(row, matcher):
    return any(matcher(row.prediction, g) for g in row.truths())


def numeric_accuracy(rows) -> float:
    rows = [r for r in rows if r.target == "measurement"]
    if not rows:
        raise NoMeasurementRows("no measurement rows")
    return sum(_any_truth(r, numeric_match) for r in rows) / len(rows)


def unit_accuracy(rows) -> float:
    rows = [r for r in rows if r.target == "unit"]
    if not rows:
        raise NoUnitRows("no unit rows")
    return sum(_any_truth(r, unit_match) for r in rows) / len(rows)


def one_word_accuracies(rows):
    """(numeric, unit, word_level) with word_level the mean of the other two."""
    rows = list(rows)
    numeric = numeric_accuracy(rows)
    unit = unit_accuracy(rows)
    return numeric, unit, (numeric + unit) / 2.0


@dataclass
class EvalReport:
    anls: float
    numeric_accuracy: float | None
    unit_accuracy: float | None
    word_level_accuracy: float | None
    n_items: int
    tau: float = DEFAULT_TAU
    per_device: dict = field(default_factory=dict)

    def to_json(self):
        return asdict(self)


def _summarize(rows, tau):
    numeric = unit = word = None
    try:
        numeric = numeric_accuracy(rows)
    except NoMeasurementRows:
        pass
    try:
        unit = unit_accuracy(rows)
    except NoUnitRows:
        pass
    if numeric is not None and unit is not None:
        word = (numeric + unit) / 2.0
    return EvalReport(anls=anls(rows, tau), numeric_accuracy=numeric, unit_accuracy=unit,
                      word_level_accuracy=word, n_items=len(rows), tau=tau)


def evaluate(rows, tau: float = DEFAULT_TAU) -> EvalReport:
    rows = list(rows)
    report = _summarize(rows, tau)
    devices = sorted({r.device for r in rows if r.device})
    for dev in devices:
        sub = _summarize([r for r in rows if r.device == dev], tau)
        report.per_device[dev] = {k: v for k, v in sub.to_json().items() if k != "per_device"}
    return report


def read_predictions(path, multi_truth=False) -> list:
    """Rows of a predictions CSV; with ``multi_truth`` the truth splits on ``|``."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames
            if not header:
                raise MalformedCsv(f"{path}: empty file")
            missing = [c for c in PREDICTION_COLUMNS if c not in header]
            if missing:
                raise MalformedCsv(f"{path}: missing column(s) {missing}")
            rows = []
            for line, raw in enumerate(reader, start=2):
                gt = raw["ground_truth"]
                if gt is None or not gt.strip():
                    raise MalformedCsv(f"{path}:{line}: empty ground_truth")
                truth = [g for g in gt.split("|") if g.strip()] if multi_truth else gt
                rows.append(PredictionRow(
                    image_id=raw["image"], question=raw["question"], prediction=raw["prediction"] or "",
                    ground_truth=truth, target=(raw["target"] or "other").strip(),
                    device=(raw.get("device") or "").strip(),
                ))
    except UnicodeDecodeError as exc:
        raise MalformedCsv(f"{path}: not UTF-8") from exc
    except csv.Error as exc:
        raise MalformedCsv(f"{path}: {exc}") from exc
    return rows


def run_benchmark(predictions_csv, out_report=None, tau=DEFAULT_TAU, multi_truth=False) -> EvalReport:
    rows = read_predictions(predictions_csv, multi_truth=multi_truth)
    report = evaluate(rows, tau)
    if out_report is not None:
        out_report = Path(out_report)
        out_report.parent.mkdir(parents=True, exist_ok=True)
        out_report.write_text(json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8")
    return report


def write_per_device_csv(report: EvalReport, path):
    cols = ["device", "n_items", "anls", "numeric_accuracy", "unit_accuracy", "word_level_accuracy"]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        overall = report.to_json()
        writer.writerow(["ALL"] + ["" if overall[c] is None else overall[c] for c in cols[1:]])
        for dev, stats in report.per_device.items():
            writer.writerow([dev] + ["" if stats[c] is None else stats[c] for c in cols[1:]])
