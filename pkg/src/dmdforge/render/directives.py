"""Engine-agnostic scene directive documents.

A directive is plain JSON that any backend can turn into a render. It is a
pure function of its inputs: the same sample, device and display always
serialize to the same bytes.
"""
from __future__ import annotations

import json

import jsonschema

from ..errors import MissingFaceIndex
from .scene import DeviceModel, RenderRanges, SceneSample, pose_for

SCHEMA_ID = "dmdforge.scene/1"

# display-image corners, counter-clockwise from bottom-left, in UV space
UV_CORNERS = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))

OPTIONAL_PASSES = ("albedo", "shading", "normal")

_vec3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_interval = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

DIRECTIVE_SCHEMA = {
    "type": "object",
    "required": ["schema", "id", "device", "display", "body_color", "camera", "object_rotation",
                 "light", "passes", "resolution", "depth_bounds"],
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "id": {"type": "string"},
        "device": {
            "type": "object",
            "required": ["name", "mesh", "face_index", "display_rotation", "bounds_min", "bounds_max"],
            "properties": {
                "name": {"type": "string"},
                "mesh": {"type": "string"},
                "face_index": {"type": "integer", "minimum": 0},
                "display_rotation": {"type": "integer", "minimum": 0, "maximum": 3},
                "bounds_min": _vec3,
                "bounds_max": _vec3,
            },
        },
        "display": {
            "type": "object",
            "required": ["texture", "uv_corners"],
            "properties": {
                "texture": {"type": "string"},
                "uv_corners": {"type": "array", "items": {"type": "array", "items": {"type": "number"},
                                                          "minItems": 2, "maxItems": 2},
                               "minItems": 4, "maxItems": 4},
            },
        },
        "body_color": _vec3,
        "camera": {
            "type": "object",
            "required": ["position", "look_dir", "up", "focal_length", "sensor_width", "image_dims"],
            "properties": {
                "position": _vec3, "look_dir": _vec3, "up": _vec3,
                "focal_length": {"type": "number", "exclusiveMinimum": 0},
                "sensor_width": {"type": "number", "exclusiveMinimum": 0},
                "image_dims": {"type": "array", "items": {"type": "integer", "minimum": 1},
                               "minItems": 2, "maxItems": 2},
            },
        },
        "object_rotation": {
            "type": "object",
            "required": ["axis", "degrees", "pivot"],
            "properties": {"axis": {"enum": ["x", "y", "z"]}, "degrees": {"type": "number"}, "pivot": _vec3},
        },
        "light": {
            "type": "object",
            "required": ["type", "position", "color", "energy", "falloff", "radius"],
            "properties": {
                "type": {"const": "point"},
                "position": _vec3,
                "color": _vec3,
                "energy": {"type": "number", "minimum": 0},
                "falloff": {"type": "number", "minimum": 0},
                "radius": {"type": "number", "minimum": 0},
            },
        },
        "passes": {"type": "array", "items": {"enum": ["rgb", "depth", *OPTIONAL_PASSES]},
                   "contains": {"const": "depth"}},
        "resolution": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2},
        "depth_bounds": _interval,
    },
}


def compute_uv_transform(rotation: int) -> tuple:
    """Display corner ``i`` maps to UV corner ``(i + rotation) % 4``."""
    if rotation not in (0, 1, 2, 3):
        raise ValueError(f"rotation must be 0-3 quarter turns, got {rotation}")
    return tuple((i + rotation) % 4 for i in range(4))


def apply_uv_transform(corners, transform):
    """Re-index four corner entries through a corner mapping."""
    return tuple(corners[j] for j in transform)


def build_scene_directives(sample: SceneSample, device: DeviceModel, display_texture: str,
                           ranges: RenderRanges, render_id: str = "", extra_passes=()) -> dict:
    if device.display_face_index is None or device.display_face_index < 0:
        raise MissingFaceIndex(f"device {device.name!r} has no display face index")
    pose = pose_for(sample, device, ranges)
    uv = apply_uv_transform(UV_CORNERS, compute_uv_transform(device.initial_display_rotation))
    near, far = ranges.depth_bounds
    passes = ["rgb", "depth"] + [p for p in OPTIONAL_PASSES if p in extra_passes]
    return {
        "schema": SCHEMA_ID,
        "id": render_id,
        "device": {
            "name": device.name,
            "mesh": str(device.mesh_path),
            "face_index": int(device.display_face_index),
            "display_rotation": int(device.initial_display_rotation),
            "bounds_min": [float(v) for v in device.bounds_min],
            "bounds_max": [float(v) for v in device.bounds_max],
        },
        "display": {"texture": str(display_texture), "uv_corners": [list(c) for c in uv]},
        "body_color": list(sample.body_rgb),
        "camera": pose.to_json(),
        "object_rotation": {
            "axis": sample.rot_axis,
            "degrees": sample.rot_deg,
            "pivot": [float(c) for c in device.center],
        },
        "light": {
            "type": "point",
            "position": list(sample.light_position(device)),
            "color": list(sample.light_rgb),
            "energy": sample.light_energy,
            "falloff": sample.falloff,
            "radius": sample.radius,
        },
        "passes": passes,
        "resolution": [int(v) for v in ranges.resolution],
        "depth_bounds": [near * device.max_dim, far * device.max_dim],
    }


def dump_directives(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def parse_directives(text: str) -> dict:
    doc = json.loads(text)
    jsonschema.validate(doc, DIRECTIVE_SCHEMA)
    return doc
