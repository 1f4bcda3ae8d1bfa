"""Contrast normalization and resizing applied before synthesis or inference.

CLAHE follows the classic tile scheme: per-tile histograms are clipped, the
excess is redistributed, and each pixel blends the CDF remaps of its four
surrounding tile centers bilinearly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from PIL import Image


@dataclass(frozen=True)
class ClaheParams:
    tiles: tuple[int, int] = (8, 8)     # rows, cols
    clip_limit: float = 2.0             # multiple of the uniform bin height
    bins: int = 256

    def __post_init__(self):
        if self.tiles[0] < 1 or self.tiles[1] < 1:
            raise ValueError("tile grid must be at least 1x1")
        if self.bins < 2:
            raise ValueError("need at least 2 histogram bins")
        if self.clip_limit <= 1.0:
            raise ValueError("clip_limit must exceed 1 (1 flattens everything)")


def _clipped_cdf_lut(values: np.ndarray, bins: int, clip_limit: float) -> np.ndarray:
    """Equalization LUT for one tile; identity ramp for a constant tile."""
    if values.size == 0 or values.min() == values.max():
        return (np.arange(bins) + 0.5) / bins
    hist = np.bincount(values, minlength=bins).astype(np.float64)
    n = values.size
    clip = clip_limit * n / bins
    # clip and redistribute until the excess is gone (a few rounds suffice)
    for _ in range(8):
        excess = np.maximum(hist - clip, 0.0).sum()
        if excess <= 1e-9 * n:
            break
        hist = np.minimum(hist, clip) + excess / bins
    cdf = np.cumsum(hist)
    cdf_min = cdf[np.nonzero(hist)[0][0]]
    denom = cdf[-1] - cdf_min
    if denom <= 0:
        return (np.arange(bins) + 0.5) / bins
    return (cdf - cdf_min) / denom


def clahe(image: np.ndarray, params: ClaheParams = ClaheParams()) -> np.ndarray:
    """Contrast-limited adaptive histogram equalization of a [0, 1] image."""
    img = np.asarray(image, dtype=np.float64)
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("image values must lie in [0, 1]")
    h, w = img.shape
    rows, cols = params.tiles
    bins = params.bins
    idx = np.minimum((img * bins).astype(np.int64), bins - 1)

    y_edges = np.linspace(0, h, rows + 1).astype(int)
    x_edges = np.linspace(0, w, cols + 1).astype(int)
    luts = np.empty((rows, cols, bins))
    for r in range(rows):
        for c in range(cols):
            tile = idx[y_edges[r]:y_edges[r + 1], x_edges[c]:x_edges[c + 1]]
            luts[r, c] = _clipped_cdf_lut(tile.ravel(), bins, params.clip_limit)

    cy = (y_edges[:-1] + y_edges[1:]) / 2.0 - 0.5
    cx = (x_edges[:-1] + x_edges[1:]) / 2.0 - 0.5
    fy = np.interp(np.arange(h), cy, np.arange(rows)) if rows > 1 else np.zeros(h)
    fx = np.interp(np.arange(w), cx, np.arange(cols)) if cols > 1 else np.zeros(w)
    r0 = np.minimum(fy.astype(int), rows - 1 if rows > 1 else 0)
    c0 = np.minimum(fx.astype(int), cols - 1 if cols > 1 else 0)
    r1 = np.minimum(r0 + 1, rows - 1)
    c1 = np.minimum(c0 + 1, cols - 1)
    wy = (fy - r0)[:, None]
    wx = (fx - c0)[None, :]

    R0 = r0[:, None]
    R1 = r1[:, None]
    C0 = c0[None, :]
    C1 = c1[None, :]
    v00 = luts[R0, C0, idx]
    v01 = luts[R0, C1, idx]
    v10 = luts[R1, C0, idx]
    v11 = luts[R1, C1, idx]
    out = ((1 - wy) * ((1 - wx) * v00 + wx * v01)
           + wy * ((1 - wx) * v10 + wx * v11))
    if img.min() == img.max():
        return img.copy()
    return np.clip(out, 0.0, 1.0)


def resize_width(image: np.ndarray, target_width: int) -> np.ndarray:
    """Aspect-preserving bilinear resample to the requested width."""
    if target_width < 16:
        raise ValueError("target_width must be >= 16")
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape
    if w == target_width:
        return img.copy()
    target_height = max(1, round(h * target_width / w))
    pil = Image.fromarray(img.astype(np.float32), mode="F")
    out = pil.resize((target_width, target_height), Image.BILINEAR)
    return np.asarray(out, dtype=np.float64)


DenoiseHook = Callable[[np.ndarray], np.ndarray]


def identity_hook(image: np.ndarray) -> np.ndarray:
    return image


def file_substitution_hook(directory: str | Path,
                           name_for: Callable[[np.ndarray], str]) -> DenoiseHook:
    """Hook replacing each image with a pre-denoised file from ``directory``."""
    directory = Path(directory)

    def hook(image: np.ndarray) -> np.ndarray:
        return load_grayscale(directory / name_for(image))

    return hook


def denoise_hook(image: np.ndarray, hook: DenoiseHook = identity_hook) -> np.ndarray:
    """Apply an external denoising stage; the default is a pass-through."""
    return hook(image)


def load_grayscale(path: str | Path) -> np.ndarray:
    """Read an 8- or 16-bit grayscale PNG as floats in [0, 1]."""
    img = Image.open(path)
    arr = np.asarray(img)
    if arr.ndim == 3:
        arr = arr[..., :3].mean(axis=2)
    if arr.dtype == np.uint16:
        return arr.astype(np.float64) / 65535.0
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    return np.clip(arr.astype(np.float64), 0.0, 1.0)


def save_grayscale(path: str | Path, image: np.ndarray) -> None:
    """Write a [0, 1] image as 8-bit grayscale PNG."""
    arr = np.clip(np.asarray(image), 0.0, 1.0)
    Image.fromarray(np.round(arr * 255.0).astype(np.uint8), mode="L").save(path)
