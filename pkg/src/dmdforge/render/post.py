"""Render post-processing: depth-derived masks and linear motion blur."""
import math

import cv2
import numpy as np

MASK_EPSILON = 1e-3


def depth_to_mask(depth, background_level=1.0, epsilon=MASK_EPSILON):
    """255 where the normalized depth is strictly nearer than the background."""
    depth = np.asarray(depth, dtype=np.float64)
    return np.where(depth < background_level - epsilon, 255, 0).astype(np.uint8)


def make_motion_kernel(length: int, angle: float) -> np.ndarray:
    """Normalized kernel holding a ``length``-pixel line through its center.

    ``angle`` is in radians, counter-clockwise from the +x axis (image rows
    grow downward, so positive angles rise to the right). Kernel dimensions
    are odd and as small as the line allows.
    """
    length = int(length)
    if length < 1:
        raise ValueError(f"kernel length must be >= 1, got {length}")
    t = np.arange(length, dtype=np.float64) - (length - 1) / 2.0
    dx = np.floor(t * math.cos(angle) + 0.5).astype(int)
    dy = np.floor(-t * math.sin(angle) + 0.5).astype(int)
    rx, ry = int(np.abs(dx).max()), int(np.abs(dy).max())
    kernel = np.zeros((2 * ry + 1, 2 * rx + 1), dtype=np.float64)
    kernel[dy + ry, dx + rx] = 1.0
    return kernel / kernel.sum()


def apply_motion_blur(image, kernel) -> np.ndarray:
    """2D convolution with edge-replicate padding; dtype and shape preserved."""
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.shape == (1, 1) and kernel[0, 0] == 1.0:
        return np.array(image, copy=True)
    flipped = np.ascontiguousarray(kernel[::-1, ::-1])
    src = np.asarray(image)
    if src.dtype == np.uint8:
        work = src.astype(np.float32)
        out = cv2.filter2D(work, -1, flipped.astype(np.float32), borderType=cv2.BORDER_REPLICATE)
        return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
    work = src.astype(np.float64)
    return cv2.filter2D(work, -1, flipped, borderType=cv2.BORDER_REPLICATE)
