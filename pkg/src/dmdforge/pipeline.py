"""Stage orchestration: dictionaries, displays, renders, composites, labels."""
from __future__ import annotations

import json
import logging
import os
import shutil
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .compose import DatasetComposer, curate_backgrounds, load_foregrounds, make_scorer, read_manifest
from .compose.composer import MANIFEST_FILENAME
from .config import PipelineConfig
from .dictionaries import generate_from_spec, load_dictionary, load_dictionary_dir, save_dictionary
from .display import DISPLAY_INDEX, generate_display_images, load_template, save_displays
from .errors import DependencyMissing, DmdForgeError, StageFailure
from .fonts import resolve_font_set
from .labeling import label_dataset, write_pairs
from .render import BatchRenderer, load_device_registry, load_display_entries, make_backend, read_records
from .render.records import RECORDS_FILENAME
from .render.scene import DEFAULT_PALETTE

log = logging.getLogger(__name__)

STAGES = ("dict", "display", "render", "compose", "label")
STAMP_DIR = ".stamps"
VQA_FILENAME = "vqa.jsonl"


@dataclass(frozen=True)
class StageSummary:
    stage: str
    count: int
    detail: str
    skipped: bool = False

    def line(self):
        state = "skipped (up to date)" if self.skipped else "done"
        return f"[{self.stage}] {state}: {self.count} {self.detail}"


class Layout:
    """Output directory layout of one pipeline run."""

    def __init__(self, root):
        self.root = Path(root)
        self.dictionaries = self.root / "dictionaries"
        self.displays = self.root / "displays"
        self.renders = self.root / "renders"
        self.dataset = self.root / "dataset"
        self.stamps = self.root / STAMP_DIR

    @property
    def manifest(self):
        return self.dataset / MANIFEST_FILENAME

    @property
    def records(self):
        return self.renders / RECORDS_FILENAME

    @property
    def vqa(self):
        return self.dataset / VQA_FILENAME

    def stage_dir(self, stage):
        return {"dict": self.dictionaries, "display": self.displays, "render": self.renders,
                "compose": self.dataset, "label": None}[stage]

    def marker(self, stage):
        """The file whose presence means the stage finished."""
        return {"dict": self.dictionaries, "display": self.displays / DISPLAY_INDEX, "render": self.records,
                "compose": self.manifest, "label": self.vqa}[stage]


def stage_seed(seed: int, stage: str) -> int:
    """Independent 64-bit seed per stage derived from the master seed."""
    state = np.random.SeedSequence([seed, STAGES.index(stage)]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def _stamp_path(layout, stage):
    return layout.stamps / f"{stage}.json"


def _read_stamp(layout, stage):
    try:
        return json.loads(_stamp_path(layout, stage).read_text(encoding="utf-8"))
    except (FileNotFoundError, json.JSONDecodeError):
        return None


def _write_stamp(layout, stage, digest, summary):
    layout.stamps.mkdir(parents=True, exist_ok=True)
    data = {"stage": stage, "config": digest, "count": summary.count, "detail": summary.detail}
    _stamp_path(layout, stage).write_text(json.dumps(data, sort_keys=True) + "\n", encoding="utf-8")


def _fresh_dir(path):
    if path.exists():
        shutil.rmtree(path)
    path.mkdir(parents=True)


def _require(path, stage, what):
    if not Path(path).exists():
        raise DependencyMissing(f"stage {stage!r} needs {what} at {path}; run the earlier stage first")


# stages


def run_dict_stage(cfg: PipelineConfig, layout: Layout) -> StageSummary:
    src = cfg.dictionaries
    if not src.is_dir():
        raise StageFailure("dict", f"{src} is not a directory")
    _fresh_dir(layout.dictionaries)
    total = 0
    names = []
    for spec_path in sorted(src.glob("*.json")):
        data = json.loads(spec_path.read_text(encoding="utf-8"))
        d = generate_from_spec(data)
        name = data.get("name") or spec_path.stem
        save_dictionary(d, layout.dictionaries / f"{name}.txt")
        total += len(d)
        names.append(name)
    for txt in sorted(src.glob("*.txt")):
        d = load_dictionary(txt)
        if d.name in names:
            raise StageFailure("dict", f"dictionary {d.name!r} defined twice")
        save_dictionary(d, layout.dictionaries / txt.name)
        total += len(d)
        names.append(d.name)
    if not names:
        raise StageFailure("dict", f"no *.json specs or *.txt dictionaries in {src}")
    return StageSummary("dict", len(names), f"dictionaries, {total} entries")


def run_display_stage(cfg: PipelineConfig, layout: Layout) -> StageSummary:
    _require(layout.dictionaries, "display", "dictionaries")
    dictionaries = load_dictionary_dir(layout.dictionaries)
    if not dictionaries:
        raise DependencyMissing(f"no dictionaries in {layout.dictionaries}")
    fonts = resolve_font_set(cfg.fonts)
    templates = sorted(cfg.templates.glob("*.json"))
    if not templates:
        raise StageFailure("display", f"no template metadata in {cfg.templates}")
    _fresh_dir(layout.displays)
    seed = stage_seed(cfg.seed, "display")
    count = 0
    for t_index, meta_path in enumerate(templates):
        template = load_template(meta_path)
        if not template.metadata.rois:
            raise StageFailure("display", f"{meta_path.name} has no ROIs; run `dmdforge display rois` first")
        rng = np.random.default_rng([seed, t_index])
        displays = generate_display_images(template, dictionaries, cfg.display.count_per_template, rng, fonts)
        save_displays(displays, template, layout.displays)
        count += len(displays)
    return StageSummary("display", count, f"display images from {len(templates)} templates")


def load_palette(path):
    if path is None:
        return DEFAULT_PALETTE
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    colors = [tuple(float(c) for c in rgb) for rgb in data]
    if not colors or any(len(c) != 3 for c in colors):
        raise ValueError(f"{path}: palette must be a non-empty list of RGB triples")
    if any(v > 1.0 for c in colors for v in c):
        colors = [tuple(v / 255.0 for v in c) for c in colors]
    return tuple(colors)


def _devices_for(cfg, layout):
    devices = load_device_registry(cfg.devices)
    registry_dir = cfg.devices.parent
    out = []
    for d in devices:
        mesh = Path(d.mesh_path)
        mesh = mesh if mesh.is_absolute() else registry_dir / mesh
        rel = os.path.relpath(mesh.resolve(), layout.root.resolve())
        out.append(replace(d, mesh_path=Path(rel).as_posix()))
    return out


def run_render_stage(cfg: PipelineConfig, layout: Layout) -> StageSummary:
    _require(layout.displays / DISPLAY_INDEX, "render", "display images")
    devices = _devices_for(cfg, layout)
    displays = load_display_entries(layout.displays)
    _fresh_dir(layout.renders)
    renderer = BatchRenderer(
        devices, displays, cfg.render.ranges, layout.renders,
        backend=make_backend(cfg.render.backend), base_dir=layout.root,
        palette=load_palette(cfg.palette), max_attempts=cfg.render.max_attempts,
        exclude=cfg.exclude_devices,
    )
    records = renderer.run(cfg.render.count, stage_seed(cfg.seed, "render"), cfg.render.workers)
    blurred = sum(r.blur for r in records)
    used = sorted({r.device for r in records})
    return StageSummary("render", len(records), f"renders ({blurred} blurred; devices: {', '.join(used)})")


def run_compose_stage(cfg: PipelineConfig, layout: Layout) -> StageSummary:
    _require(layout.records, "compose", "render records")
    foregrounds = load_foregrounds(layout.renders)
    backgrounds = curate_backgrounds(cfg.backgrounds, *cfg.compose.min_background)
    _fresh_dir(layout.dataset)
    composer = DatasetComposer(foregrounds, backgrounds, make_scorer(cfg.compose.scorer), layout.dataset,
                               min_fraction=cfg.compose.min_fraction, harmonize=cfg.compose.harmonize,
                               image_ext="." + cfg.compose.image_format)
    records = composer.run(cfg.compose.n, stage_seed(cfg.seed, "compose"), cfg.compose.workers)
    clamped = sum(r.box.clamped for r in records)
    return StageSummary("compose", len(records),
                        f"composites on {len(backgrounds)} backgrounds ({clamped} clamped boxes)")


def run_label_stage(cfg: PipelineConfig, layout: Layout) -> StageSummary:
    _require(layout.manifest, "label", "a composite manifest")
    _require(layout.records, "label", "render records")
    rows = read_manifest(layout.manifest)
    pairs = label_dataset(rows, read_records(layout.records), fmt=cfg.label.format,
                          seed=stage_seed(cfg.seed, "label"), pairs_per_image=cfg.label.pairs_per_image)
    write_pairs(pairs, layout.vqa)
    return StageSummary("label", len(pairs), f"{cfg.label.format} VQA pairs for {len(rows)} composites")


RUNNERS = {
    "dict": run_dict_stage,
    "display": run_display_stage,
    "render": run_render_stage,
    "compose": run_compose_stage,
    "label": run_label_stage,
}


def parse_stages(spec) -> list:
    """Stage names from a comma list or ``all``, returned in pipeline order."""
    if spec is None or spec == "all":
        return list(STAGES)
    names = [s.strip() for s in (spec.split(",") if isinstance(spec, str) else spec) if s.strip()]
    unknown = [s for s in names if s not in STAGES]
    if unknown:
        raise ValueError(f"unknown stage(s) {unknown}; choose from {list(STAGES)}")
    return [s for s in STAGES if s in names]


def run_pipeline(cfg: PipelineConfig, stages=None, resume=False, echo=print) -> list:
    """Run the selected stages in order; returns one summary per stage."""
    layout = Layout(cfg.output)
    layout.root.mkdir(parents=True, exist_ok=True)
    digest = cfg.digest()
    summaries = []
    for stage in parse_stages(stages):
        stamp = _read_stamp(layout, stage)
        if resume and stamp and stamp["config"] == digest and layout.marker(stage).exists():
            summary = StageSummary(stage, stamp["count"], stamp["detail"], skipped=True)
        else:
            try:
                summary = RUNNERS[stage](cfg, layout)
            except (StageFailure, DependencyMissing):
                raise
            except (DmdForgeError, OSError, ValueError, KeyError) as exc:
                raise StageFailure(stage, f"{type(exc).__name__}: {exc}") from exc
            _write_stamp(layout, stage, digest, summary)
            # later stages now describe stale inputs
            for later in STAGES[STAGES.index(stage) + 1:]:
                _stamp_path(layout, later).unlink(missing_ok=True)
        summaries.append(summary)
        if echo is not None:
            echo(summary.line())
    return summaries
