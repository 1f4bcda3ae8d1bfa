"""Dataset access: reads the generator's images/ + labels/ PNG layout."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image


@dataclass
class Sample:
    name: str
    image: torch.Tensor     # (1, H, W) float32 in [0, 1]
    labels: torch.Tensor    # (H, W) int64 in {0, 1, 2}


def load_image(path: str | Path) -> torch.Tensor:
    arr = np.asarray(Image.open(path).convert("L"), dtype=np.float32) / 255.0
    return torch.from_numpy(arr)[None]


def load_labels(path: str | Path) -> torch.Tensor:
    img = Image.open(path)
    if img.mode != "P":
        img = img.convert("L")
    return torch.from_numpy(np.asarray(img, dtype=np.int64))


def load_dataset(root: str | Path) -> list[Sample]:
    root = Path(root)
    samples = []
    for img_path in sorted((root / "images").glob("*.png")):
        lab_path = root / "labels" / (img_path.stem + "_labels.png")
        if not lab_path.exists():
            continue
        samples.append(Sample(name=img_path.stem, image=load_image(img_path),
                              labels=load_labels(lab_path)))
    if not samples:
        raise FileNotFoundError(f"no paired images/labels under {root}")
    return samples


def crop_to_multiple(t: torch.Tensor, multiple: int = 4) -> torch.Tensor:
    h, w = t.shape[-2], t.shape[-1]
    return t[..., :h - h % multiple, :w - w % multiple]


def pyramid(image: torch.Tensor, labels: torch.Tensor | None,
            scale_count: int) -> tuple[list[torch.Tensor], list[torch.Tensor]]:
    """Ascending x2 input pyramid with matching nearest-neighbor labels.

    ``image`` is (B, 1, H, W); the finest scale is the input itself.
    """
    images, truths = [], []
    for i in range(scale_count):
        factor = 2 ** (scale_count - 1 - i)
        if factor == 1:
            img = image
            lab = labels
        else:
            img = F.interpolate(image, scale_factor=1.0 / factor,
                                mode="bilinear", align_corners=False,
                                recompute_scale_factor=False)
            lab = None if labels is None else F.interpolate(
                labels[:, None].float(), size=img.shape[-2:],
                mode="nearest")[:, 0].long()
        images.append(img)
        truths.append(lab)
    return images, truths


def batches(samples: list[Sample], batch_size: int,
            rng: np.random.Generator | None = None):
    order = np.arange(len(samples))
    if rng is not None:
        rng.shuffle(order)
    for start in range(0, len(order), batch_size):
        chunk = [samples[i] for i in order[start:start + batch_size]]
        image = torch.stack([crop_to_multiple(s.image) for s in chunk])
        labels = torch.stack([crop_to_multiple(s.labels) for s in chunk])
        yield image, labels
