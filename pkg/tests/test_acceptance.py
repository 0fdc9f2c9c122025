"""Acceptance criteria; each test prints one PASS/FAIL verdict line."""
import json
import random
import time

import cv2
import numpy as np
import pytest

from conftest import record_verdict, write_project, write_templates
from dmdforge.compose import (
    DatasetComposer,
    RandomScorer,
    curate_backgrounds,
    load_foregrounds,
    mask_bbox,
    read_manifest,
)
from dmdforge.config import validate_config
from dmdforge.dictionaries import Dictionary
from dmdforge.display import generate_display_images, load_template, otsu_threshold
from dmdforge.evaluation import PredictionRow, anls, anls_item, levenshtein
from dmdforge.fonts import default_segment_faces
from dmdforge.images import read_gray, read_rgb
from dmdforge.labeling import AnnotationRecord, Reading, make_full_pair, make_one_word_pair
from dmdforge.pipeline import Layout, run_pipeline
from dmdforge.render import (
    RenderRanges,
    apply_motion_blur,
    load_device_registry,
    load_display_entries,
    make_motion_kernel,
    render_batch,
    resample_until_visible,
    rotated_corners,
)
from test_display import brute_otsu
from test_evaluation import lev_oracle
from test_render import DEVICE, brute_convolve, oracle_visible


def test_criterion_1_metric_oracles():
    t0 = time.perf_counter()
    rng = random.Random(42)
    alphabet = "0123456789.:- VABPMmHg%"
    pairs = [("".join(rng.choice(alphabet) for _ in range(rng.randint(0, 30))),
              "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 30)))) for _ in range(1000)]
    lev_ok = all(levenshtein(a, b) == lev_oracle(a, b) for a, b in pairs)
    item = anls_item("0.022 A", "0.022 V")
    item_ok = abs(item - 6 / 7) <= 1e-9
    all_correct = anls([PredictionRow("i", "q", gt, gt) for _, gt in pairs if gt])
    elapsed = time.perf_counter() - t0
    ok = lev_ok and item_ok and all_correct == 1.0 and elapsed < 5
    record_verdict(1, "metric oracle equivalence", ok,
                   f"lev 1000/1000={lev_ok}, anls_item={item:.12f}, anls(all correct)={all_correct}, {elapsed:.2f}s")
    assert ok


def test_criterion_2_otsu_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    matches = 0
    for _ in range(100):
        hist = rng.integers(0, 5000, 256) * (rng.random(256) < rng.uniform(0.05, 1.0))
        if np.count_nonzero(hist) < 2:
            hist[[0, 255]] = 1
        matches += otsu_threshold(hist) == brute_otsu(hist)
    elapsed = time.perf_counter() - t0
    ok = matches == 100 and elapsed < 5
    record_verdict(2, "Otsu oracle equivalence", ok, f"{matches}/100 exact, {elapsed:.2f}s")
    assert ok


def test_criterion_3_display_integrity(tmp_path):
    t0 = time.perf_counter()
    template = load_template(write_templates(tmp_path))
    dicts = {"spo2": Dictionary("spo2", "%", tuple(str(v) for v in range(80, 101))),
             "bpm": Dictionary("bpm", "BPM", tuple(str(v) for v in range(40, 181)))}
    displays = generate_display_images(template, dicts, 100, np.random.default_rng(7), default_segment_faces())
    outside = np.ones(template.image.shape[:2], bool)
    for r in template.metadata.rois:
        outside[r.y:r.y + r.height, r.x:r.x + r.width] = False
    pixels_ok = all(np.array_equal(d.image[outside], template.image[outside]) for d in displays)
    keys = [lab.dictionary_key for lab in template.metadata.labels]
    values_ok = all(v in dicts[k] for d in displays for v, k in zip(d.values, keys))
    elapsed = time.perf_counter() - t0
    ok = len(displays) == 100 and pixels_ok and values_ok and elapsed < 30
    record_verdict(3, "display integrity", ok,
                   f"{len(displays)} displays, outside-ROI identical={pixels_ok}, values in dictionary={values_ok}, "
                   f"{elapsed:.2f}s")
    assert ok


def test_criterion_4_geometry_suite():
    t0 = time.perf_counter()
    ranges = RenderRanges()
    rng = np.random.default_rng(4)
    n_ok_range = n_visible = 0
    total = 10_000
    for _ in range(total):
        scene = resample_until_visible(ranges, DEVICE, rng)
        s = scene.sample
        in_range = 8 <= s.distance / DEVICE.max_dim <= 10 and (s.rot_axis != "x" or -30 <= s.rot_deg <= 30)
        n_ok_range += in_range
        n_visible += oracle_visible(scene.pose, rotated_corners(DEVICE, s.rot_axis, s.rot_deg))
    elapsed = time.perf_counter() - t0
    ok = n_ok_range == total and n_visible == total and elapsed < 60
    record_verdict(4, "geometry suite", ok,
                   f"{n_ok_range}/{total} in range, {n_visible}/{total} pass reprojection, {elapsed:.1f}s")
    assert ok


def test_criterion_5_composer_audit(rendered_pool, tmp_path):
    fgs = load_foregrounds(Layout(rendered_pool.output).renders)
    bgs = curate_backgrounds(rendered_pool.backgrounds)
    out = tmp_path / "audit"
    t0 = time.perf_counter()
    DatasetComposer(fgs, bgs, RandomScorer(), out).run(500, seed=5)
    per_image = (time.perf_counter() - t0) / 500
    rows = read_manifest(out / "manifest.csv")
    triplets = {(r["foreground"], r["background"], r["x"], r["y"], r["w"], r["h"]) for r in rows}
    worst_aspect, area_bad, diff_bad, unclamped = 0.0, 0, 0, 0
    for row in rows:
        bg = read_rgb(out / row["background"])
        comp = read_rgb(out / row["composite"])
        mask = read_gray(out / row["mask"])
        x0, y0, mw, mh = mask_bbox(mask)
        x, y, w, h = row["x"], row["y"], row["w"], row["h"]
        worst_aspect = max(worst_aspect, abs(w / h - mw / mh) / (mw / mh))
        if not row["clamped"]:
            unclamped += 1
            area_bad += w * h < 0.10 * bg.shape[0] * bg.shape[1]
        allowed = np.zeros(bg.shape[:2], bool)
        crop = mask[y0:y0 + mh, x0:x0 + mw]
        allowed[y:y + h, x:x + w] = cv2.resize(crop, (w, h), interpolation=cv2.INTER_NEAREST) > 0
        diff_bad += bool((np.any(comp != bg, axis=-1) & ~allowed).any())
    ok = (len(rows) == 500 and len(triplets) == 500 and worst_aspect <= 0.02 and area_bad == 0
          and diff_bad == 0 and per_image <= 0.5)
    record_verdict(5, "composer audit", ok,
                   f"500 composites, {500 - len(triplets)} duplicate triplets, worst aspect error "
                   f"{100 * worst_aspect:.2f}%, {area_bad} of {unclamped} unclamped boxes under 10%, "
                   f"{diff_bad} composites with diffs outside the mask, {per_image:.3f} s/image")
    assert ok


def test_criterion_6_motion_blur(rendered_pool, tmp_path):
    layout = Layout(rendered_pool.output)
    devices = [d for d in load_device_registry(rendered_pool.devices) if d.name == "pulse oximeter"]
    ranges = RenderRanges(resolution=(48, 48), blur_probability=0.2)
    records = render_batch(devices, load_display_entries(layout.displays), ranges, 1000, seed=6,
                           out_dir=tmp_path / "r", base_dir=layout.root)
    blurred = sum(r.blur for r in records)
    rng = np.random.default_rng(6)
    kernel_err = max(abs(make_motion_kernel(int(rng.integers(1, 60)), float(rng.uniform(0, np.pi))).sum() - 1)
                     for _ in range(1000))
    conv_err = 0.0
    for length, angle in [(3, 0.0), (5, 0.4), (9, 1.3), (15, 2.7), (8, np.pi / 2)]:
        img = rng.random((32, 32))
        k = make_motion_kernel(length, angle)
        conv_err = max(conv_err, float(np.max(np.abs(apply_motion_blur(img, k) - brute_convolve(img, k)))))
    ok = len(records) == 1000 and 170 <= blurred <= 230 and kernel_err <= 1e-9 and conv_err <= 1e-6
    record_verdict(6, "motion-blur statistics", ok,
                   f"{blurred}/1000 blurred, max |kernel sum - 1| = {kernel_err:.1e}, "
                   f"max convolution error = {conv_err:.1e}")
    assert ok


def test_criterion_7_label_fidelity():
    cases = [
        ("TEMPO", "76", "BPM", "measurement", "76"),
        ("Temperature", "35.9", "°C", "measurement", "35.9"),
        ("Pulse Rate", "68", "BPM", "unit", "BPM"),
        ("Diastolic Blood Pressure", "80", "mmHg", "unit", "mmHg"),
        ("Time", "17:57", "h", "measurement", "17:57"),
        ("SpO2", "96", "%", "measurement", "96"),
        ("Voltage", "00.67", "V", "measurement", "00.67"),
    ]
    got = [make_one_word_pair(AnnotationRecord("x", "d", "m", [Reading(m, v, u)]), 0, t).answer
           for m, v, u, t, _ in cases]
    expected = [c[-1] for c in cases]
    full = make_full_pair(AnnotationRecord("m", "metronome", "tempo", [Reading("TEMPO", "30", "BPM")]), 0,
                          template_id=0).answer
    sentence = "The digital display conveys a TEMPO reading of 30 BPM."
    ok = got == expected and full == sentence
    record_verdict(7, "label fidelity", ok, f"one-word {got}, full {full!r}")
    assert ok


def _outputs(root):
    files = {"manifest": root / "dataset" / "manifest.csv", "vqa": root / "dataset" / "vqa.jsonl"}
    files.update({p.name: p for p in sorted((root / "renders" / "directives").glob("*.json"))})
    return {k: p.read_bytes() for k, p in files.items()}


def test_criterion_8_end_to_end_determinism(tmp_path):
    t0 = time.perf_counter()
    runs = []
    for name in ("first", "second"):
        cfg = validate_config(write_project(tmp_path / name, n=20))
        run_pipeline(cfg, echo=None)
        runs.append(_outputs(cfg.output))
    elapsed = time.perf_counter() - t0
    identical = runs[0] == runs[1]
    n_vqa = len(runs[0]["vqa"].splitlines())
    ok = identical and n_vqa == 20 and len(runs[0]) == 22 and elapsed < 120
    record_verdict(8, "end-to-end determinism", ok,
                   f"{len(runs[0])} files byte-identical={identical}, {n_vqa} VQA pairs, {elapsed:.1f}s for two runs")
    assert ok


@pytest.mark.slow
def test_criterion_9_scale_demonstration(tmp_path):
    cfg_path = write_project(tmp_path / "scale", n=10_000, resolution=(128, 128))
    data = json.loads(cfg_path.read_text())
    data["compose"]["image_format"] = "jpg"
    cfg_path.write_text(json.dumps(data))
    cfg = validate_config(cfg_path)
    t0 = time.perf_counter()
    summaries = run_pipeline(cfg, echo=None)
    elapsed = time.perf_counter() - t0
    layout = Layout(cfg.output)
    n_manifest = len(layout.manifest.read_text().splitlines()) - 1
    n_vqa = len(layout.vqa.read_text().splitlines())
    ok = n_manifest == 10_000 and n_vqa == 10_000 and elapsed < 7200
    timing = ", ".join(f"{s.stage} {s.count}" for s in summaries)
    record_verdict(9, "scale demonstration", ok,
                   f"{n_manifest} composites and {n_vqa} VQA pairs in {elapsed / 60:.1f} min ({timing})")
    assert ok
