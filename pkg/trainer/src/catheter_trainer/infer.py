"""Inference: per-scale likelihood maps written as 8-bit PNGs.

Each scale gets its own directory; the catheter channel is written under the
image's own stem so the generator toolkit's ``evaluate`` verb can score it
directly, with the other channels alongside.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .data import crop_to_multiple, load_image, pyramid
from .network import ScaleRecurrentNet

CHANNEL_NAMES = ("bg", "catheter", "text")


def predict(model: ScaleRecurrentNet, image: torch.Tensor) -> list[torch.Tensor]:
    """Softmax maps for one (1, H, W) image at every scale, ascending."""
    model.eval()
    with torch.no_grad():
        batched = crop_to_multiple(image)[None]
        images, _ = pyramid(batched, None, model.config.scale_count)
        return [p[0] for p in model(images)]


def write_maps(maps: list[torch.Tensor], stem: str, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    for scale_index, pred in enumerate(maps, start=1):
        scale_dir = out_dir / f"scale{scale_index}"
        scale_dir.mkdir(parents=True, exist_ok=True)
        arr = (pred.numpy() * 255.0).round().astype(np.uint8)
        for channel, name in enumerate(CHANNEL_NAMES):
            suffix = "" if name == "catheter" else f"_{name}"
            path = scale_dir / f"{stem}{suffix}.png"
            Image.fromarray(arr[channel], mode="L").save(path)
            written.append(path)
    return written


def infer_file(model: ScaleRecurrentNet, image_path: str | Path,
               out_dir: str | Path) -> list[Path]:
    image_path = Path(image_path)
    maps = predict(model, load_image(image_path))
    return write_maps(maps, image_path.stem, out_dir)
