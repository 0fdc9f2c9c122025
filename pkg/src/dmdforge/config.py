"""Pipeline configuration file: loading, defaults and validation."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError
from .render.scene import RenderRanges

SEED_LIMIT = 2 ** 64
LABEL_FORMATS = ("full", "one_word")
SCORER_NAMES = ("random", "fopa")
IMAGE_FORMATS = ("png", "jpg")
BACKEND_NAMES = ("mock", "blender")

REQUIRED_PATHS = ("devices", "templates", "dictionaries", "backgrounds")
OPTIONAL_PATHS = ("fonts", "palette")


@dataclass(frozen=True)
class DisplaySettings:
    count_per_template: int = 10


@dataclass(frozen=True)
class RenderSettings:
    count: int = 20
    backend: str = "mock"
    workers: int = 1
    max_attempts: int = 100
    ranges: RenderRanges = field(default_factory=RenderRanges)


@dataclass(frozen=True)
class ComposeSettings:
    n: int = 20
    scorer: str = "random"
    workers: int = 1
    min_fraction: float = 0.10
    harmonize: bool = False
    min_background: tuple = (600, 800)
    image_format: str = "png"


@dataclass(frozen=True)
class LabelSettings:
    format: str = "full"
    pairs_per_image: int = 1


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    devices: Path
    templates: Path
    dictionaries: Path
    backgrounds: Path
    output: Path
    fonts: Path | None = None
    palette: Path | None = None
    exclude_devices: tuple = ()
    display: DisplaySettings = field(default_factory=DisplaySettings)
    render: RenderSettings = field(default_factory=RenderSettings)
    compose: ComposeSettings = field(default_factory=ComposeSettings)
    label: LabelSettings = field(default_factory=LabelSettings)
    tau: float = 0.5
    source: Path | None = None

    @property
    def blur_probability(self):
        return self.render.ranges.blur_probability

    @property
    def min_fraction(self):
        return self.compose.min_fraction

    def to_json(self):
        d = asdict(self)
        d["render"]["ranges"] = self.render.ranges.to_dict()
        d.pop("source")
        return json.loads(json.dumps(d, default=str))

    def digest(self, *sections) -> str:
        """Stable hash of the whole config, or of the named top-level sections."""
        data = self.to_json()
        if sections:
            data = {k: data[k] for k in sections}
        return hashlib.sha256(json.dumps(data, sort_keys=True).encode("utf-8")).hexdigest()


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _check_int(value, name, minimum=None):
    if not _is_int(value):
        raise ConfigError(name, f"must be an integer, got {type(value).__name__} {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(name, f"must be >= {minimum}, got {value}")
    return value


def _check_number(value, name, lo=None, hi=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(name, f"must be a number, got {value!r}")
    if (lo is not None and value < lo) or (hi is not None and value > hi):
        raise ConfigError(name, f"must lie in [{lo}, {hi}], got {value}")
    return float(value)


def _check_choice(value, name, choices):
    if value not in choices:
        raise ConfigError(name, f"must be one of {list(choices)}, got {value!r}")
    return value


def _section(data, name, allowed):
    sec = data.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(name, "must be an object")
    unknown = sorted(set(sec) - set(allowed))
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}", "unknown field")
    return sec


def _path(base, raw, name, must_exist=True):
    if not isinstance(raw, str) or not raw:
        raise ConfigError(name, "must be a non-empty path string")
    p = Path(raw)
    p = p if p.is_absolute() else (base / p)
    if must_exist and not p.exists():
        raise ConfigError(name, f"path does not exist: {p}")
    return p


def parse_config(data: dict, base_dir=".", source=None) -> PipelineConfig:
    """Validate a config mapping; relative paths resolve against ``base_dir``."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    top = {"seed", "paths", "exclude_devices", "display", "render", "compose", "label", "eval"}
    unknown = sorted(set(data) - top)
    if unknown:
        raise ConfigError(unknown[0], "unknown field")
    base = Path(base_dir)

    if "seed" not in data:
        raise ConfigError("seed", "required")
    seed = _check_int(data["seed"], "seed", 0)
    if seed >= SEED_LIMIT:
        raise ConfigError("seed", "must fit in 64 bits")

    paths = _section(data, "paths", REQUIRED_PATHS + OPTIONAL_PATHS + ("output",))
    resolved = {}
    for key in REQUIRED_PATHS:
        if key not in paths:
            raise ConfigError(f"paths.{key}", "required")
        resolved[key] = _path(base, paths[key], f"paths.{key}")
    for key in OPTIONAL_PATHS:
        resolved[key] = _path(base, paths[key], f"paths.{key}") if paths.get(key) else None
    resolved["output"] = _path(base, paths.get("output", "output"), "paths.output", must_exist=False)

    exclude = data.get("exclude_devices", [])
    if not isinstance(exclude, list) or not all(isinstance(e, str) for e in exclude):
        raise ConfigError("exclude_devices", "must be a list of device names")

    disp = _section(data, "display", ("count_per_template",))
    display = DisplaySettings(
        count_per_template=_check_int(disp.get("count_per_template", 10), "display.count_per_template", 1))

    rend = _section(data, "render", ("count", "backend", "workers", "max_attempts", "ranges"))
    ranges_raw = rend.get("ranges", {})
    if not isinstance(ranges_raw, dict):
        raise ConfigError("render.ranges", "must be an object")
    try:
        ranges = RenderRanges.from_dict(ranges_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError("render.ranges", str(exc)) from None
    render = RenderSettings(
        count=_check_int(rend.get("count", 20), "render.count", 1),
        backend=_check_choice(rend.get("backend", "mock"), "render.backend", BACKEND_NAMES),
        workers=_check_int(rend.get("workers", 1), "render.workers", 1),
        max_attempts=_check_int(rend.get("max_attempts", 100), "render.max_attempts", 1),
        ranges=ranges,
    )

    comp = _section(data, "compose", ("n", "scorer", "workers", "min_fraction", "harmonize", "min_background",
                                       "image_format"))
    min_bg = comp.get("min_background", [600, 800])
    if not (isinstance(min_bg, list) and len(min_bg) == 2 and all(_is_int(v) and v > 0 for v in min_bg)):
        raise ConfigError("compose.min_background", "must be [width, height] in pixels")
    harm = comp.get("harmonize", False)
    if not isinstance(harm, bool):
        raise ConfigError("compose.harmonize", "must be true or false")
    compose = ComposeSettings(
        n=_check_int(comp.get("n", 20), "compose.n", 1),
        scorer=_check_choice(comp.get("scorer", "random"), "compose.scorer", SCORER_NAMES),
        workers=_check_int(comp.get("workers", 1), "compose.workers", 1),
        min_fraction=_check_number(comp.get("min_fraction", 0.10), "compose.min_fraction", 0.0, 1.0),
        harmonize=harm,
        min_background=tuple(min_bg),
        image_format=_check_choice(comp.get("image_format", "png"), "compose.image_format", IMAGE_FORMATS),
    )

    lab = _section(data, "label", ("format", "pairs_per_image"))
    label = LabelSettings(
        format=_check_choice(lab.get("format", "full"), "label.format", LABEL_FORMATS),
        pairs_per_image=_check_int(lab.get("pairs_per_image", 1), "label.pairs_per_image", 1),
    )

    ev = _section(data, "eval", ("tau",))
    tau = _check_number(ev.get("tau", 0.5), "eval.tau", 0.0, 1.0)

    return PipelineConfig(seed=seed, exclude_devices=tuple(exclude), display=display, render=render,
                          compose=compose, label=label, tau=tau, source=source, **resolved)


def validate_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("<file>", f"config not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(data, base_dir=path.parent, source=path)
