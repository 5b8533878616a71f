#!/usr/bin/env python3
"""Print per-component parameter counts for a model preset.

    python3 scripts/param_report.py --preset paper --classes 9
"""

import argparse

from cainet.model import CaiNet, config_for_preset, parameter_report


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="paper", choices=("toy", "paper"))
    ap.add_argument("--classes", type=int, default=9)
    ap.add_argument("--width_multiplier", type=float, default=1.0)
    args = ap.parse_args()

    cfg = config_for_preset(args.preset, args.classes)
    if args.width_multiplier != 1.0:
        import dataclasses
        cfg = dataclasses.replace(
            cfg, backbone=dataclasses.replace(
                cfg.backbone, width_multiplier=args.width_multiplier))
    model = CaiNet(cfg, seed=0)
    report = parameter_report(model)
    total = report.pop("total")
    for group, n in sorted(report.items(), key=lambda kv: -kv[1]):
        print(f"{group:<18} {n:>12,}  ({100.0 * n / total:5.1f}%)")
    print(f"{'total':<18} {total:>12,}  ({total / 1e6:.2f} M)")


if __name__ == "__main__":
    main()
