"""Render backends: the mock ray-caster and the Blender bridge."""
from __future__ import annotations

import json
import logging
import os
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import BackendFailure, BackendUnavailable
from ..images import read_depth, read_rgb
from .scene import rotation_matrix

log = logging.getLogger(__name__)

BLENDER_ENV = "DMDFORGE_BLENDER"
DRIVER_SCRIPT = Path(__file__).with_name("blender_driver.py")

# box faces in face_index order: -x, +x, -y, +y, -z, +z
_FACE_AXES = ((0, -1), (0, 1), (1, -1), (1, 1), (2, -1), (2, 1))
# in-face (s, t) axes per normal axis
_FACE_ST = {0: (1, 2), 1: (0, 2), 2: (0, 1)}
# display inset within its face, as (s0, s1, t0, t1) fractions
DISPLAY_INSET = (0.12, 0.88, 0.42, 0.9)
WORLD_BACKGROUND = (0.05, 0.05, 0.05)


@dataclass
class RenderOutput:
    rgb: np.ndarray
    depth: np.ndarray
    extra: dict = field(default_factory=dict)


class RenderBackend:
    name = "abstract"

    def render(self, directives: dict, base_dir=".") -> RenderOutput:
        raise NotImplementedError


class MockBackend(RenderBackend):
    """Ray-casts the device's bounding box as a flat-shaded solid.

    The display texture is UV-mapped onto an inset of the box face chosen by
    ``face_index % 6``, so UV rotation and texture choice stay visible in the
    output. Depth is exact z-depth normalized between the depth bounds.
    """

    name = "mock"

    def __init__(self):
        self._textures = {}

    def _texture(self, path):
        key = str(path)
        tex = self._textures.get(key)
        if tex is None:
            tex = read_rgb(path)
            if len(self._textures) > 256:
                self._textures.clear()
            self._textures[key] = tex
        return tex

    def render(self, directives, base_dir="."):
        d = directives
        w, h = d["resolution"]
        cam = d["camera"]
        pos = np.asarray(cam["position"], dtype=np.float64)
        look = np.asarray(cam["look_dir"], dtype=np.float64)
        up = np.asarray(cam["up"], dtype=np.float64)
        right = np.cross(look, up)
        f = cam["focal_length"] / cam["sensor_width"] * w

        us = (np.arange(w) + 0.5 - w / 2.0) / f
        vs = -(np.arange(h) + 0.5 - h / 2.0) / f
        xs, ys = np.meshgrid(us, vs)
        dirs = look[None, None, :] + xs[..., None] * right + ys[..., None] * up

        rot = d["object_rotation"]
        r = rotation_matrix(rot["axis"], rot["degrees"])
        pivot = np.asarray(rot["pivot"], dtype=np.float64)
        # object-local ray (rotation is orthonormal: inverse = transpose)
        o_l = (pos - pivot) @ r + pivot
        d_l = dirs @ r
        lo = np.asarray(d["device"]["bounds_min"], dtype=np.float64)
        hi = np.asarray(d["device"]["bounds_max"], dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / d_l
            t1 = (lo - o_l) * inv
            t2 = (hi - o_l) * inv
        t1 = np.nan_to_num(t1, nan=-np.inf)
        t2 = np.nan_to_num(t2, nan=np.inf)
        tnear = np.minimum(t1, t2)
        tfar = np.maximum(t1, t2)
        t_enter = tnear.max(axis=-1)
        t_exit = tfar.min(axis=-1)
        hit = (t_exit >= t_enter) & (t_enter > 0)

        axis = tnear.argmax(axis=-1)
        sign = np.where(np.take_along_axis(t1 < t2, axis[..., None], -1)[..., 0], -1.0, 1.0)
        normal_l = np.zeros(dirs.shape)
        np.put_along_axis(normal_l, axis[..., None], sign[..., None], -1)
        normal_w = normal_l @ r.T

        t = np.where(hit, t_enter, 0.0)
        p_w = pos + dirs * t[..., None]
        light = d["light"]
        to_light = np.asarray(light["position"]) - p_w
        to_light /= np.linalg.norm(to_light, axis=-1, keepdims=True) + 1e-12
        lambert = np.clip((normal_w * to_light).sum(-1), 0.0, 1.0)
        shade = 0.3 + 0.7 * lambert
        light_rgb = np.asarray(light["color"], dtype=np.float64)

        body = np.asarray(d["body_color"], dtype=np.float64)
        color = body[None, None, :] * light_rgb * shade[..., None]

        face_axis, face_sign = _FACE_AXES[d["device"]["face_index"] % 6]
        p_l = o_l + d_l * t[..., None]
        on_face = hit & (axis == face_axis) & (sign == face_sign)
        s_ax, t_ax = _FACE_ST[face_axis]
        ext = hi - lo
        s = (p_l[..., s_ax] - lo[s_ax]) / ext[s_ax]
        tt = (p_l[..., t_ax] - lo[t_ax]) / ext[t_ax]
        s0, s1, q0, q1 = DISPLAY_INSET
        a = (s - s0) / (s1 - s0)
        b = (tt - q0) / (q1 - q0)
        on_display = on_face & (a >= 0) & (a <= 1) & (b >= 0) & (b <= 1)
        if on_display.any():
            tex = self._texture(Path(base_dir) / d["display"]["texture"]).astype(np.float64) / 255.0
            uvc = np.asarray(d["display"]["uv_corners"], dtype=np.float64)
            aa, bb = a[on_display][:, None], b[on_display][:, None]
            uv = ((1 - aa) * (1 - bb) * uvc[0] + aa * (1 - bb) * uvc[1]
                  + aa * bb * uvc[2] + (1 - aa) * bb * uvc[3])
            th, tw = tex.shape[:2]
            px = np.clip(np.floor(uv[:, 0] * tw), 0, tw - 1).astype(int)
            py = np.clip(np.floor((1.0 - uv[:, 1]) * th), 0, th - 1).astype(int)
            color[on_display] = tex[py, px] * (0.75 + 0.25 * shade[on_display][:, None])

        color[~hit] = WORLD_BACKGROUND
        rgb = np.clip(np.floor(color * 255.0 + 0.5), 0, 255).astype(np.uint8)

        near, far = d["depth_bounds"]
        depth = np.ones((h, w), dtype=np.float64)
        depth[hit] = np.clip((t[hit] - near) / (far - near), 0.0, 1.0)
        return RenderOutput(rgb=rgb, depth=depth)


class BlenderBackend(RenderBackend):
    """Runs Blender headlessly with ``blender_driver.py`` on one directive."""

    name = "blender"

    def __init__(self, executable=None, timeout=600):
        self.executable = executable or os.environ.get(BLENDER_ENV) or "blender"
        self.timeout = timeout

    def available(self):
        return shutil.which(self.executable) is not None or Path(self.executable).is_file()

    def render(self, directives, base_dir="."):
        if not self.available():
            raise BackendUnavailable(
                f"Blender executable {self.executable!r} not found; set {BLENDER_ENV} or use --backend mock"
            )
        with tempfile.TemporaryDirectory(prefix="dmdforge-") as tmp:
            tmp = Path(tmp)
            directive_path = tmp / "scene.json"
            directive_path.write_text(json.dumps(directives), encoding="utf-8")
            cmd = [self.executable, "-b", "--factory-startup", "-P", str(DRIVER_SCRIPT), "--",
                   str(directive_path), str(tmp), str(Path(base_dir).resolve())]
            try:
                proc = subprocess.run(cmd, capture_output=True, text=True, timeout=self.timeout)
            except (OSError, subprocess.TimeoutExpired) as exc:
                raise BackendFailure(f"Blender did not complete: {exc}") from exc
            engine_log = proc.stdout + proc.stderr
            if proc.returncode != 0 or not (tmp / "rgb.png").exists() or not (tmp / "depth.png").exists():
                raise BackendFailure(f"Blender exited with status {proc.returncode}", log=engine_log)
            extra = {}
            for name in ("albedo", "shading", "normal"):
                p = tmp / f"{name}.png"
                if p.exists():
                    extra[name] = read_rgb(p)
            return RenderOutput(rgb=read_rgb(tmp / "rgb.png"), depth=read_depth(tmp / "depth.png"), extra=extra)


BACKENDS = {"mock": MockBackend, "blender": BlenderBackend}


def make_backend(name, **kwargs) -> RenderBackend:
    try:
        return BACKENDS[name](**kwargs)
    except KeyError:
        raise BackendUnavailable(f"unknown backend {name!r}; choose from {sorted(BACKENDS)}") from None
