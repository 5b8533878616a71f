#!/usr/bin/env python3
"""Sweep single-module ablations and tabulate validation mIoU.

Trains the full model once, then each variant with one fusion module
switched off (its slot bridged by a 1x1 conv), all under identical seeds
and step budgets, and prints a small comparison table. The interesting
property is ordering, not the absolute numbers: the full model should not
lose to any single ablation by more than noise.

    python3 scripts/ablation_table.py --steps 40
"""

import argparse

from cainet.data import Corpus
from cainet.train import TrainConfig, evaluate_split, staged_train

ABLATIONS = ("enable_cacr", "enable_gcm", "enable_da")


def train_variant(corpus, out_dir, seed, steps, batch_size, **flags):
    cfg = TrainConfig(out_dir=out_dir, seed=seed, batch_size=batch_size,
                      steps_rgb=steps, steps_thermal=steps, steps_gcm=steps,
                      steps_full=3 * steps, patience=1000, **flags)
    res = staged_train(cfg, corpus)
    _, _, val_miou = evaluate_split(res["model"], corpus.split("val"),
                                    "full")
    return val_miou


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/ablations")
    ap.add_argument("--train", type=int, default=24)
    ap.add_argument("--val", type=int, default=8)
    ap.add_argument("--size", type=int, default=16)
    ap.add_argument("--steps", type=int, default=40)
    ap.add_argument("--batch_size", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    corpus = Corpus.synthetic(3, (args.size, args.size),
                              {"train": args.train, "val": args.val},
                              seed=args.seed)
    rows = [("full", train_variant(corpus, f"{args.out}/full", args.seed,
                                   args.steps, args.batch_size))]
    for flag in ABLATIONS:
        name = "no_" + flag[len("enable_"):]
        rows.append((name, train_variant(corpus, f"{args.out}/{name}",
                                         args.seed, args.steps,
                                         args.batch_size, **{flag: False})))
    full = rows[0][1]
    print(f"{'variant':<10} {'val_miou':>9}  {'vs full':>8}")
    for name, v in rows:
        print(f"{name:<10} {v:9.4f}  {v - full:+8.4f}")


if __name__ == "__main__":
    main()
