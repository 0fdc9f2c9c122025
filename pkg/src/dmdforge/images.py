"""Raster I/O. Arrays are RGB ``uint8`` (H, W, 3) in memory; OpenCV's BGR
order is confined to this module."""
from pathlib import Path

import cv2
import numpy as np

PNG_PARAMS = [cv2.IMWRITE_PNG_COMPRESSION, 1]


def read_rgb(path):
    img = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if img is None:
        raise FileNotFoundError(f"cannot read image {path}")
    return cv2.cvtColor(img, cv2.COLOR_BGR2RGB)


def write_rgb(path, image):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    params = PNG_PARAMS if path.suffix.lower() == ".png" else [cv2.IMWRITE_JPEG_QUALITY, 95]
    if not cv2.imwrite(str(path), cv2.cvtColor(np.ascontiguousarray(image), cv2.COLOR_RGB2BGR), params):
        raise OSError(f"cannot write image {path}")


def read_gray(path):
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise FileNotFoundError(f"cannot read image {path}")
    if img.ndim == 3:
        img = img[..., 0]
    return img


def write_gray(path, image):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), np.ascontiguousarray(image), PNG_PARAMS):
        raise OSError(f"cannot write image {path}")


def write_depth(path, depth):
    """Store a [0, 1] depth raster as 16-bit PNG."""
    q = np.round(np.clip(depth, 0.0, 1.0) * 65535.0).astype(np.uint16)
    write_gray(path, q)


def read_depth(path):
    raw = read_gray(path)
    if raw.dtype == np.uint16:
        return raw.astype(np.float64) / 65535.0
    return raw.astype(np.float64) / 255.0


def image_size(path):
    """(width, height) without decoding the pixel data."""
    from PIL import Image

    with Image.open(path) as im:
        return im.size
