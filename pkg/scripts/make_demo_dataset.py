"""End-to-end demo: synthesize backgrounds, generate a labeled dataset,
score oracle predictions, and dump the tube profile diagnostics.

Run from the repo root:  python scripts/make_demo_dataset.py --out demo/
"""

import argparse
from pathlib import Path

import numpy as np

from cathsynth import cli
from cathsynth.preprocess import save_grayscale


def make_backgrounds(out: Path, count: int = 4, seed: int = 0) -> None:
    out.mkdir(parents=True, exist_ok=True)
    gen = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:560, 0:512]
    for i in range(count):
        lungs = 0.35 + 0.22 * np.exp(-((xx - 160 - 20 * i) ** 2) / 9000.0
                                     - ((yy - 240) ** 2) / 26000.0)
        lungs += 0.22 * np.exp(-((xx - 352 + 20 * i) ** 2) / 9000.0
                               - ((yy - 240) ** 2) / 26000.0)
        ribs = 0.05 * np.sin(yy / 22.0 + 0.3 * i)
        noise = gen.normal(0.0, 0.015, lungs.shape)
        save_grayscale(out / f"synthetic_bg_{i}.png",
                       np.clip(lungs + ribs + noise, 0.0, 1.0))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo")
    parser.add_argument("--count", type=int, default=8)
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args()

    root = Path(args.out)
    make_backgrounds(root / "backgrounds", seed=args.seed)
    rc = cli.main(["generate", "--backgrounds", str(root / "backgrounds"),
                   "--out", str(root / "dataset"), "--count", str(args.count),
                   "--seed", str(args.seed)])
    if rc:
        return rc
    return cli.main(["show-profile", "--out", str(root / "profile_dumps")])


if __name__ == "__main__":
    raise SystemExit(main())
