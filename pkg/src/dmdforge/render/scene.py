"""Scene parameter sampling for device renders."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from ..errors import MissingFaceIndex, VisibilityExhausted
from .camera import CameraPose, check_full_visibility, compute_camera_pose

log = logging.getLogger(__name__)

AXES = ("x", "y", "z")

DEFAULT_PALETTE = (
    (0.18, 0.18, 0.19), (0.22, 0.22, 0.21), (0.30, 0.30, 0.31), (0.35, 0.34, 0.33),
    (0.42, 0.42, 0.44), (0.50, 0.50, 0.49), (0.58, 0.58, 0.60), (0.65, 0.64, 0.62),
    (0.72, 0.72, 0.74), (0.80, 0.80, 0.79), (0.86, 0.86, 0.88), (0.25, 0.26, 0.28),
)


@dataclass(frozen=True)
class DeviceModel:
    name: str
    mesh_path: str
    display_face_index: int
    initial_display_rotation: int = 0
    bounds_min: tuple = (-0.5, -0.5, -0.5)
    bounds_max: tuple = (0.5, 0.5, 0.5)

    def __post_init__(self):
        if self.display_face_index is None or self.display_face_index < 0:
            raise MissingFaceIndex(f"device {self.name!r} has no display face index")
        if self.initial_display_rotation not in (0, 1, 2, 3):
            raise ValueError(f"display rotation must be 0-3 quarter turns, got {self.initial_display_rotation}")
        if self.max_dim <= 0:
            raise ValueError(f"device {self.name!r} has empty bounds")

    @property
    def extents(self):
        return np.asarray(self.bounds_max, dtype=np.float64) - np.asarray(self.bounds_min, dtype=np.float64)

    @property
    def max_dim(self):
        return float(self.extents.max())

    @property
    def center(self):
        return (np.asarray(self.bounds_min, dtype=np.float64) + np.asarray(self.bounds_max, dtype=np.float64)) / 2

    def corners(self):
        lo, hi = self.bounds_min, self.bounds_max
        return np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])],
                        dtype=np.float64)


def obj_bounds(path):
    """Axis-aligned bounds of the ``v`` records of a Wavefront OBJ file."""
    pts = []
    with open(path, encoding="utf-8", errors="replace") as fh:
        for line in fh:
            if line.startswith("v "):
                pts.append([float(v) for v in line.split()[1:4]])
    if not pts:
        raise ValueError(f"no vertices in {path}")
    arr = np.asarray(pts)
    return tuple(arr.min(axis=0)), tuple(arr.max(axis=0))


def load_device_registry(path) -> list:
    """Read the device registry JSON (a list, or ``{"devices": [...]}``)."""
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    entries = data["devices"] if isinstance(data, dict) else data
    devices = []
    for e in entries:
        if "bounds" in e:
            lo, hi = (tuple(float(v) for v in b) for b in e["bounds"])
        else:
            mesh = path.parent / e["mesh"]
            if mesh.suffix.lower() != ".obj":
                raise ValueError(f"device {e['name']!r}: give explicit bounds for non-OBJ mesh {mesh}")
            lo, hi = obj_bounds(mesh)
        devices.append(DeviceModel(
            name=e["name"],
            mesh_path=e["mesh"],
            display_face_index=e.get("face_index"),
            initial_display_rotation=int(e.get("display_rotation", 0)),
            bounds_min=lo,
            bounds_max=hi,
        ))
    return devices


def _interval(v):
    lo, hi = (float(x) for x in v)
    if lo > hi:
        raise ValueError(f"interval lower bound {lo} exceeds upper bound {hi}")
    return (lo, hi)


@dataclass(frozen=True)
class RenderRanges:
    distance_multiplier: tuple = (8.0, 10.0)
    rotation_x: tuple = (-30.0, 30.0)
    rotation_y: tuple = (-30.0, 30.0)
    rotation_z: tuple = (-30.0, 30.0)
    focal_length: tuple = (50.0, 100.0)
    light_offset_x: tuple = (-2.0, 2.0)
    light_offset_y: tuple = (-3.0, -1.0)
    light_offset_z: tuple = (1.0, 3.0)
    light_color: tuple = (0.85, 1.0)
    light_energy: tuple = (200.0, 1000.0)
    light_falloff: tuple = (0.0, 1.0)
    light_radius: tuple = (0.05, 0.5)
    blur_probability: float = 0.2
    blur_length: tuple = (5, 25)
    depth_bounds: tuple = (0.0, 20.0)  # in units of the device's max_dim
    camera_direction: tuple = (0.0, -1.0, 0.0)
    resolution: tuple = (1024, 1024)
    sensor_width: float = 36.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("camera_direction", "resolution"):
                object.__setattr__(self, f.name, tuple(v))
            elif isinstance(v, (list, tuple)):
                object.__setattr__(self, f.name, _interval(v))
        if not 0.0 <= self.blur_probability <= 1.0:
            raise ValueError(f"blur_probability must lie in [0, 1], got {self.blur_probability}")
        if self.blur_length[0] < 1:
            raise ValueError("blur_length must be at least 1 px")
        if self.distance_multiplier[0] <= 0:
            raise ValueError("distance_multiplier must be positive")
        if self.focal_length[0] <= 0 or self.sensor_width <= 0:
            raise ValueError("focal length and sensor width must be positive")
        if self.depth_bounds[0] >= self.depth_bounds[1]:
            raise ValueError("depth_bounds must have near < far")
        if any(v <= 0 for v in self.resolution) or len(self.resolution) != 2:
            raise ValueError("resolution must be two positive integers")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown render range(s): {sorted(unknown)}")
        return cls(**data)

    def to_dict(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    def rotation(self, axis):
        return getattr(self, f"rotation_{axis}")


@dataclass(frozen=True)
class SceneSample:
    dist_mult: float
    distance: float
    rot_axis: str
    rot_deg: float
    focal_mm: float
    light_offset: tuple  # relative, in units of max_dim
    light_rgb: tuple
    light_energy: float
    falloff: float
    radius: float
    body_rgb: tuple

    def light_position(self, device: DeviceModel):
        return tuple(float(c) for c in device.center + np.asarray(self.light_offset) * device.max_dim)


def rotation_matrix(axis: str, degrees: float) -> np.ndarray:
    a = np.deg2rad(degrees)
    c, s = np.cos(a), np.sin(a)
    if axis == "x":
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    if axis == "y":
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
    if axis == "z":
        return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    raise ValueError(f"unknown axis {axis!r}")


def rotated_corners(device: DeviceModel, axis: str, degrees: float) -> np.ndarray:
    """Bounding-box corners after rotating the device about its center."""
    center = device.center
    return (device.corners() - center) @ rotation_matrix(axis, degrees).T + center


def sample_scene(ranges: RenderRanges, device: DeviceModel, rng: np.random.Generator, palette=DEFAULT_PALETTE):
    """Draw one scene. The draw order is fixed so a seed reproduces the sample."""
    dist_mult = float(rng.uniform(*ranges.distance_multiplier))
    axis = AXES[int(rng.integers(3))]
    rot_deg = float(rng.uniform(*ranges.rotation(axis)))
    focal = float(rng.uniform(*ranges.focal_length))
    offset = tuple(float(rng.uniform(*r)) for r in (ranges.light_offset_x, ranges.light_offset_y, ranges.light_offset_z))
    light_rgb = tuple(float(rng.uniform(*ranges.light_color)) for _ in range(3))
    energy = float(rng.uniform(*ranges.light_energy))
    falloff = float(rng.uniform(*ranges.light_falloff))
    radius = float(rng.uniform(*ranges.light_radius))
    body = tuple(float(c) for c in palette[int(rng.integers(len(palette)))])
    sample = SceneSample(
        dist_mult=dist_mult,
        distance=dist_mult * device.max_dim,
        rot_axis=axis,
        rot_deg=rot_deg,
        focal_mm=focal,
        light_offset=offset,
        light_rgb=light_rgb,
        light_energy=energy,
        falloff=falloff,
        radius=radius,
        body_rgb=body,
    )
    return sample


def pose_for(sample: SceneSample, device: DeviceModel, ranges: RenderRanges) -> CameraPose:
    return compute_camera_pose(device.center, ranges.camera_direction, sample.distance,
                               sample.focal_mm, ranges.resolution, ranges.sensor_width)


@dataclass
class AcceptedScene:
    sample: SceneSample
    pose: CameraPose
    attempts: int
    corners: np.ndarray = field(repr=False, default=None)


def resample_until_visible(ranges, device, rng, max_attempts=100, palette=DEFAULT_PALETTE) -> AcceptedScene:
    if max_attempts < 1:
        raise ValueError("max_attempts must be at least 1")
    for attempt in range(1, max_attempts + 1):
        sample = sample_scene(ranges, device, rng, palette)
        pose = pose_for(sample, device, ranges)
        corners = rotated_corners(device, sample.rot_axis, sample.rot_deg)
        if check_full_visibility(pose, corners):
            log.debug("device %s visible after %d attempt(s)", device.name, attempt)
            return AcceptedScene(sample, pose, attempt, corners)
    raise VisibilityExhausted(
        f"device {device.name!r} never fully visible in {max_attempts} attempts; check render ranges"
    )
