#!/usr/bin/env python3
"""Overfit the toy preset on a small synthetic corpus, end to end.

Runs the full staged pipeline (rgb -> thermal -> gcm -> full) on a freshly
synthesized corpus and reports final training/validation mIoU plus wall
time. With the defaults this is the standing sanity experiment: the model
has enough capacity to overfit 64 synthetic scenes, and the staged loop,
loss stack, and metrics all have to cooperate for the numbers to move.

    python3 scripts/overfit_toy.py --out runs/overfit
"""

import argparse
import sys
import time

from cainet.data import Corpus
from cainet.train import TrainConfig, evaluate_split, staged_train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/overfit")
    ap.add_argument("--train", type=int, default=64)
    ap.add_argument("--val", type=int, default=16)
    ap.add_argument("--size", type=int, default=32, help="square image size")
    ap.add_argument("--classes", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--darken", type=float, default=1.0)
    args = ap.parse_args()

    corpus = Corpus.synthetic(args.classes, (args.size, args.size),
                              {"train": args.train, "val": args.val},
                              seed=args.seed, darken_rgb=args.darken)
    cfg = TrainConfig(out_dir=args.out, seed=args.seed)

    t0 = time.time()
    res = staged_train(cfg, corpus)
    elapsed = time.time() - t0

    model = res["model"]
    _, _, train_miou = evaluate_split(model, corpus.split("train"), "full")
    _, _, val_miou = evaluate_split(model, corpus.split("val"), "full")
    for stage, info in res["stages"].items():
        print(f"stage={stage} last_step={info['last_step']} "
              f"val_miou={info['val_miou']:.4f}")
    print(f"final train_miou={train_miou:.4f} val_miou={val_miou:.4f} "
          f"elapsed={elapsed:.0f}s")
    print(f"artifacts in {res['out_dir']}")
    return 0 if (train_miou >= 0.90 and val_miou >= 0.75) else 1


if __name__ == "__main__":
    sys.exit(main())
