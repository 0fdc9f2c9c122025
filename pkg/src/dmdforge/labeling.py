"""VQA question-answer pairs for composite and annotated real images.

Two label formats are produced: full sentences, and one-word answers where
each question asks for exactly one measurement value or one unit.
"""
from __future__ import annotations

import csv
import json
import re
from dataclasses import asdict, dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DanglingForeground, IndexOutOfRange, LabelError, MissingField

FULL = "full"
ONE_WORD = "one_word"
FORMATS = (FULL, ONE_WORD)
FULL_TARGETS = ("measurement", "unit", "device_summary")
ONE_WORD_TARGETS = ("measurement", "unit")

ANNOTATION_COLUMNS = ["image", "device", "mode", "measurement_type", "value", "unit"]


@dataclass(frozen=True)
class Reading:
    measurement_type: str
    value: str
    unit: str


@dataclass(frozen=True)
class AnnotationRecord:
    image_id: str
    device: str
    mode: str
    readings: tuple

    def __post_init__(self):
        object.__setattr__(self, "readings", tuple(self.readings))
        if not self.readings:
            raise MissingField(f"{self.image_id}: no readings")


@dataclass(frozen=True)
class VQAPair:
    image_id: str
    question: str
    answer: str
    format: str
    target: str

    def to_json(self):
        return {"image": self.image_id, "question": self.question, "answer": self.answer,
                "format": self.format, "target": self.target}


@lru_cache(maxsize=None)
def _default_templates():
    text = resources.files("dmdforge").joinpath("data/question_templates.json").read_text(encoding="utf-8")
    return json.loads(text)


def load_templates(path=None):
    if path is None:
        return _default_templates()
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _with_article(noun):
    if not noun:
        return "a device"
    return ("an " if noun[0].lower() in "aeiou" else "a ") + noun


def _reading(annotation, reading_index):
    if not 0 <= reading_index < len(annotation.readings):
        raise IndexOutOfRange(f"{annotation.image_id}: reading {reading_index} of {len(annotation.readings)}")
    return annotation.readings[reading_index]


def make_full_pair(annotation: AnnotationRecord, reading_index: int, template_id=None, rng=None,
                   target="measurement", templates=None) -> VQAPair:
    """Full-sentence pair for one reading.

    ``template_id`` indexes the question pool for ``target``; when omitted the
    question is drawn with ``rng``. On multi-reading displays only questions
    naming the measurement type are eligible.
    """
    if target not in FULL_TARGETS:
        raise ValueError(f"unknown target {target!r}")
    templates = templates or _default_templates()
    r = _reading(annotation, reading_index)
    pool = templates["full"][target]
    if template_id is None:
        eligible = list(range(len(pool)))
        if len(annotation.readings) > 1:
            eligible = [i for i in eligible if "{measurement_type}" in pool[i]] or eligible
        if rng is None:
            raise ValueError("either template_id or rng is required")
        template_id = eligible[int(rng.integers(len(eligible)))]
    fields = {
        "measurement_type": r.measurement_type,
        "value": r.value,
        "unit": r.unit,
        "value_unit": f"{r.value} {r.unit}" if r.unit else r.value,
        "device": annotation.device,
        "device_article": _with_article(annotation.device),
        "measurement_article": _with_article(r.measurement_type),
    }
    question = pool[template_id].format(**fields)
    answer = templates["answers"][target].format(**fields)
    return VQAPair(annotation.image_id, question, answer, FULL, target)


def make_one_word_pair(annotation: AnnotationRecord, reading_index: int, target="measurement",
                       templates=None) -> VQAPair:
    if target not in ONE_WORD_TARGETS:
        raise ValueError(f"one-word target must be measurement or unit, got {target!r}")
    templates = templates or _default_templates()
    r = _reading(annotation, reading_index)
    one = templates["one_word"]
    question = one[target].format(measurement_type=r.measurement_type) + " " + one["instruction"]
    answer = r.value if target == "measurement" else r.unit
    if not answer or re.search(r"\s", answer):
        raise LabelError(f"{annotation.image_id}: {answer!r} is not a single word")
    return VQAPair(annotation.image_id, question, answer, ONE_WORD, target)


def pairs_for_annotation(annotation, fmt, rng, pairs_per_image=1, targets=None, templates=None) -> list:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    targets = tuple(targets or (FULL_TARGETS if fmt == FULL else ONE_WORD_TARGETS))
    out = []
    for _ in range(pairs_per_image):
        idx = int(rng.integers(len(annotation.readings)))
        target = targets[int(rng.integers(len(targets)))]
        if fmt == FULL:
            out.append(make_full_pair(annotation, idx, rng=rng, target=target, templates=templates))
        else:
            out.append(make_one_word_pair(annotation, idx, target, templates=templates))
    return out


def annotation_from_record(image_id, record) -> AnnotationRecord:
    readings = [Reading(m, v, u) for m, v, u in zip(record.measurement_types, record.values, record.units)]
    return AnnotationRecord(image_id=image_id, device=record.device, mode=record.mode, readings=readings)


def _record_index(records):
    index = {}
    for r in records:
        index[r.id] = r
        index[Path(r.rgb_path).stem] = r
    return index


def label_dataset(manifest_rows, render_records, fmt=FULL, seed=0, pairs_per_image=1, targets=None,
                  templates=None) -> list:
    """Pairs for every manifest row, built from the foreground's render record."""
    index = _record_index(render_records)
    pairs = []
    for i, row in enumerate(manifest_rows):
        fg_id = Path(row["foreground"]).stem
        record = index.get(fg_id)
        if record is None:
            raise DanglingForeground(f"manifest row {i}: foreground {row['foreground']!r} has no render record")
        annotation = annotation_from_record(row["composite"], record)
        rng = np.random.default_rng([seed, i])
        pairs.extend(pairs_for_annotation(annotation, fmt, rng, pairs_per_image, targets, templates))
    return pairs


def label_annotations(annotations, fmt=FULL, seed=0, pairs_per_image=1, targets=None, templates=None) -> list:
    pairs = []
    for i, ann in enumerate(annotations):
        rng = np.random.default_rng([seed, i])
        pairs.extend(pairs_for_annotation(ann, fmt, rng, pairs_per_image, targets, templates))
    return pairs


def annotate_real(csv_path) -> list:
    """Annotation records from a CSV with one row per reading."""
    with Path(csv_path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing_cols = [c for c in ANNOTATION_COLUMNS if c not in (reader.fieldnames or [])]
        if missing_cols:
            raise MissingField(f"{csv_path}: missing column(s) {missing_cols}")
        grouped = {}
        for line, row in enumerate(reader, start=2):
            for col in ANNOTATION_COLUMNS:
                if not (row.get(col) or "").strip():
                    raise MissingField(f"{csv_path}:{line}: empty {col!r}")
            entry = grouped.setdefault(row["image"].strip(), {"device": row["device"].strip(),
                                                              "mode": row["mode"].strip(), "readings": []})
            entry["readings"].append(Reading(row["measurement_type"].strip(), row["value"].strip(),
                                             row["unit"].strip()))
    return [AnnotationRecord(image, e["device"], e["mode"], e["readings"]) for image, e in grouped.items()]


def save_annotations(annotations, path):
    data = [
        {"image_id": a.image_id, "device": a.device, "mode": a.mode,
         "readings": [asdict(r) for r in a.readings]}
        for a in annotations
    ]
    Path(path).write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def load_annotations(path) -> list:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return [AnnotationRecord(d["image_id"], d["device"], d["mode"], [Reading(**r) for r in d["readings"]])
            for d in data]


def write_pairs(pairs, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            fh.write(json.dumps(p.to_json(), ensure_ascii=False) + "\n")


def read_pairs(path) -> list:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                out.append(VQAPair(d["image"], d["question"], d["answer"], d["format"], d["target"]))
    return out
