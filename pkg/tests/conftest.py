"""Shared fixtures: a small synthetic project tree built with numpy only."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from dmdforge.images import write_rgb

LCD_BG = (196, 206, 180)
LCD_FG = (30, 34, 28)

TEMPLATE_META = {
    "image_filename": "oximeter_spo2.png",
    "roi_count": 2,
    "mode": "spo2",
    "device": "pulse oximeter",
    "labels": [
        {"measurement_type": "oxygen saturation", "unit": "%", "dictionary": "spo2"},
        {"measurement_type": "pulse rate", "unit": "BPM", "dictionary": "bpm"},
    ],
    "rois": [
        {"x": 8, "y": 10, "w": 70, "h": 40, "label_index": 0},
        {"x": 90, "y": 10, "w": 62, "h": 40, "label_index": 1},
    ],
}

DICT_SPECS = {
    "spo2": {"name": "spo2", "unit": "%", "min_value": 80, "max_value": 100, "step": 1},
    "bpm": {"name": "bpm", "unit": "BPM", "min_value": 40, "max_value": 180, "step": 1},
}

DEVICES = [
    {"name": "pulse oximeter", "mesh": "meshes/oximeter.obj", "face_index": 2, "display_rotation": 0,
     "bounds": [[-0.03, -0.015, -0.045], [0.03, 0.015, 0.045]]},
    {"name": "power supply", "mesh": "meshes/psu.obj", "face_index": 2, "display_rotation": 1,
     "bounds": [[-0.1, -0.12, -0.06], [0.1, 0.12, 0.06]]},
]


def template_image():
    """A 160x64 LCD photo stand-in: light panel, dark digits and an icon."""
    img = np.empty((64, 160, 3), dtype=np.uint8)
    img[:] = LCD_BG
    yy, xx = np.mgrid[0:64, 0:160]
    img = np.clip(img.astype(int) + ((xx + yy) % 7 - 3)[..., None], 0, 255).astype(np.uint8)
    img[20:40, 30:70] = LCD_FG  # old reading inside ROI 0
    img[20:40, 120:150] = LCD_FG  # old reading inside ROI 1
    img[54:60, 4:20] = LCD_FG  # icon outside every ROI
    return img


def background_image(rng, w=900, h=700):
    yy, xx = np.mgrid[0:h, 0:w]
    base = np.stack([xx * 255 // w, yy * 255 // h, (xx + yy) * 255 // (w + h)], axis=-1)
    noise = rng.integers(0, 40, size=(h, w, 3))
    return np.clip(base + noise, 0, 255).astype(np.uint8)


def write_templates(directory: Path) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    write_rgb(directory / TEMPLATE_META["image_filename"], template_image())
    meta_path = directory / "oximeter_spo2.json"
    meta_path.write_text(json.dumps(TEMPLATE_META, indent=2), encoding="utf-8")
    return meta_path


def write_dict_specs(directory: Path) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    for name, spec in DICT_SPECS.items():
        (directory / f"{name}.json").write_text(json.dumps(spec), encoding="utf-8")
    return directory


def write_backgrounds(directory: Path, count=3, seed=7) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for i in range(count):
        w, h = (900, 700) if i % 2 == 0 else (720, 960)
        write_rgb(directory / f"bg{i:02d}.jpg", background_image(rng, w, h))
    write_rgb(directory / "tiny.png", background_image(rng, 320, 240))  # too small to keep
    return directory


def write_project(root: Path, n=20, seed=1234, resolution=(192, 192), extra=None) -> Path:
    """Inputs plus a pipeline config; returns the config path."""
    root.mkdir(parents=True, exist_ok=True)
    write_templates(root / "templates")
    write_dict_specs(root / "dict_specs")
    write_backgrounds(root / "backgrounds")
    (root / "devices.json").write_text(json.dumps(DEVICES, indent=2), encoding="utf-8")
    config = {
        "seed": seed,
        "paths": {"devices": "devices.json", "templates": "templates", "dictionaries": "dict_specs",
                  "backgrounds": "backgrounds", "output": "output"},
        "display": {"count_per_template": 6},
        "render": {"count": n, "backend": "mock", "workers": 1,
                   "ranges": {"resolution": list(resolution)}},
        "compose": {"n": n, "scorer": "random", "workers": 1},
        "label": {"format": "full", "pairs_per_image": 1},
    }
    for key, value in (extra or {}).items():
        config[key] = value
    path = root / "config.json"
    path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return path


@pytest.fixture
def project(tmp_path):
    return write_project(tmp_path / "project")


@pytest.fixture(scope="session")
def rendered_pool(tmp_path_factory):
    """Mock renders (rgb/mask/records) shared by composer and labeling tests."""
    from dmdforge.config import validate_config
    from dmdforge.pipeline import run_pipeline

    cfg_path = write_project(tmp_path_factory.mktemp("pool") / "project", n=12)
    cfg = validate_config(cfg_path)
    run_pipeline(cfg, ["dict", "display", "render"], echo=None)
    return cfg


# acceptance verdicts, echoed in the terminal summary
ACCEPTANCE = []


def record_verdict(number, title, ok, detail):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
