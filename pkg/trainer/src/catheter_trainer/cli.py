"""CLI verbs: train, infer."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catheter-trainer")
    sub = parser.add_subparsers(dest="verb", required=True)

    t = sub.add_parser("train", help="train on a generated dataset directory")
    t.add_argument("--dataset", required=True,
                   help="directory with images/ and labels/")
    t.add_argument("--out", required=True, help="run directory")
    t.add_argument("--epochs", type=int, default=5)
    t.add_argument("--batch-size", type=int, default=2)
    t.add_argument("--lr", type=float, default=1e-4)
    t.add_argument("--base-channels", type=int, default=8)
    t.add_argument("--seed", type=int, default=0)

    i = sub.add_parser("infer", help="write per-scale likelihood maps")
    i.add_argument("--checkpoint", required=True)
    i.add_argument("--image", action="append", required=True,
                   help="input PNG; repeatable")
    i.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "train":
        from .data import load_dataset
        from .network import NetworkConfig
        from .train import TrainConfig, save_checkpoint, train

        samples = load_dataset(args.dataset)
        net_config = NetworkConfig(base_channels=args.base_channels,
                                   lstm_channels=4 * args.base_channels)
        config = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                             learning_rate=args.lr, seed=args.seed)
        model, history = train(samples, net_config, config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(out / "checkpoint.pt", model, config, history)
        print(f"saved {out / 'checkpoint.pt'} "
              f"(loss {history[0]:.3f} -> {history[-1]:.3f})")
        return 0

    from .infer import infer_file
    from .train import load_checkpoint

    model = load_checkpoint(args.checkpoint)
    count = 0
    for image in args.image:
        count += len(infer_file(model, image, args.out))
    print(f"wrote {count} likelihood maps to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
