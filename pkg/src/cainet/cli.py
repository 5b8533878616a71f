"""Command-line front end: train / eval / infer / gradcheck / auxmaps / synth.

Configuration is a flat key=value namespace shared by every subcommand:
values come from an optional plain-text config file (``--config``) and any
key can be overridden with a ``--<key>=<value>`` flag.
"""

import argparse
import dataclasses
import os
import sys

import numpy as np
from PIL import Image

from .checkpoint import CheckpointError, assign_parameters, load_checkpoint
from .data import (Corpus, DataError, colorize, load_corpus, make_palette,
                   save_corpus)
from .gradcheck import gradcheck_report
from .metrics import report_text
from .model import CaiNet
from .targets import aux_targets
from .tensor import ConfigError
from .train import (TrainConfig, config_from_mapping, evaluate_split,
                    parse_config_text, staged_train)


def _add_config_flags(p):
    p.add_argument("--config", metavar="FILE",
                   help="plain-text key=value config file")
    for f in dataclasses.fields(TrainConfig):
        p.add_argument(f"--{f.name}", metavar="V", default=None,
                       help=f"override config key {f.name}")


def _build_config(args) -> TrainConfig:
    mapping = {}
    if args.config:
        with open(args.config) as fh:
            mapping.update(parse_config_text(fh.read()))
    for f in dataclasses.fields(TrainConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            mapping[f.name] = v
    return config_from_mapping(mapping)


def _load_model(cfg: TrainConfig, ckpt_path, num_classes) -> CaiNet:
    state = load_checkpoint(ckpt_path)
    head = state.get("arlm.stage4.target.w")
    if head is not None and head.shape[0] != num_classes:
        raise ConfigError(
            f"checkpoint was trained for {head.shape[0]} classes but the "
            f"corpus declares {num_classes}")
    model = CaiNet(cfg.model_config(num_classes), seed=cfg.seed)
    assign_parameters(model.params, state)
    return model


def _write_gray(path, array_01):
    img = np.round(np.clip(array_01, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(img, mode="L").save(path)


def _find_sample(corpus: Corpus, sample_id):
    for split in ("train", "val", "test"):
        for s in corpus.split(split):
            if s.id == sample_id:
                return s
    raise ConfigError(f"sample id {sample_id!r} not present in any split")


def _open_corpus(cfg: TrainConfig, command):
    if not cfg.data_root:
        raise ConfigError(f"{command} needs data_root (flag or config file)")
    return load_corpus(cfg.data_root)


# ---------------------------------------------------------------------------
# subcommands


def cmd_train(args):
    cfg = _build_config(args)
    if not cfg.data_root:
        raise ConfigError("train needs data_root (flag or config file)")
    summary = staged_train(cfg)
    for stage, info in summary["stages"].items():
        print(f"stage={stage} last_step={info['last_step']} "
              f"val_miou={info['val_miou']:.6f}")
    print(f"checkpoints and train.log written to {summary['out_dir']}")
    return 0


def cmd_eval(args):
    cfg = _build_config(args)
    corpus = _open_corpus(cfg, "eval")
    model = _load_model(cfg, args.checkpoint, corpus.num_classes)
    samples = corpus.split(args.split)
    if not samples:
        raise ConfigError(f"split {args.split!r} is empty")
    cm, _, _ = evaluate_split(model, samples, args.head,
                              cfg.metrics_zero_class)
    print(report_text(cm, corpus.manifest.class_names,
                      cfg.metrics_zero_class))
    return 0


def cmd_infer(args):
    cfg = _build_config(args)
    corpus = _open_corpus(cfg, "infer")
    model = _load_model(cfg, args.checkpoint, corpus.num_classes)
    os.makedirs(args.out, exist_ok=True)
    palette = make_palette(corpus.num_classes)
    for sample_id in args.ids:
        s = _find_sample(corpus, sample_id)
        pred = model.infer(s)
        pred_path = os.path.join(args.out, f"{sample_id}_pred.png")
        color_path = os.path.join(args.out, f"{sample_id}_color.png")
        Image.fromarray(pred.astype(np.uint8), mode="L").save(pred_path)
        rgb = colorize(pred, palette).transpose(1, 2, 0)
        Image.fromarray(rgb, mode="RGB").save(color_path)
        print(f"id={sample_id} pred={pred_path} color={color_path}")
    return 0


def cmd_gradcheck(args):
    _build_config(args)                # validates flags; harness is preset-free
    seeds = tuple(range(args.seeds))
    results = gradcheck_report(seeds=seeds)
    failed = False
    for r in results:
        print(r.line())
        failed = failed or not r.passed
    print("gradcheck: " + ("FAIL" if failed else "pass"))
    return 1 if failed else 0


def cmd_auxmaps(args):
    cfg = _build_config(args)
    corpus = _open_corpus(cfg, "auxmaps")
    os.makedirs(args.out, exist_ok=True)
    for sample_id in args.ids:
        s = _find_sample(corpus, sample_id)
        aux = aux_targets(s.labels, cfg.dilation_k, cfg.attention_sigma)
        for name, arr in (("binary", aux.binary),
                          ("boundary", aux.boundary),
                          ("attention", aux.attention_q)):
            path = os.path.join(args.out, f"{sample_id}_{name}.png")
            _write_gray(path, arr.astype(np.float64))
            print(f"id={sample_id} {name}={path}")
    return 0


def cmd_synth(args):
    counts = {"train": args.train, "val": args.val, "test": args.test}
    corpus = Corpus.synthetic(args.classes, (args.height, args.width),
                              counts, seed=args.seed,
                              darken_rgb=args.darken, layout=args.layout)
    save_corpus(corpus, args.out)
    total = sum(counts.values())
    print(f"wrote {total} samples ({args.classes} classes, "
          f"{args.height}x{args.width}, layout={args.layout}) to {args.out}")
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cainet",
        description="RGB-thermal semantic segmentation: staged training, "
                    "evaluation, inference, and corpus tooling.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run one training stage or the "
                                     "rgb→thermal→gcm→full pipeline")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="per-class metrics for a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", default="val",
                   choices=("train", "val", "test"))
    p.add_argument("--head", default="full",
                   choices=("rgb", "thermal", "gcm", "full"),
                   help="which prediction head to evaluate")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("infer", help="write predicted label map + "
                                     "colorized image")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("ids", nargs="+", metavar="ID")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_infer)

    p = sub.add_parser("gradcheck", help="finite-difference check of every "
                                         "composite forward")
    p.add_argument("--seeds", type=int, default=5)
    _add_config_flags(p)
    p.set_defaults(fn=cmd_gradcheck)

    p = sub.add_parser("auxmaps", help="export binary/boundary/attention "
                                       "training targets as images")
    p.add_argument("--out", required=True)
    p.add_argument("ids", nargs="+", metavar="ID")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_auxmaps)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--train", type=int, default=64)
    p.add_argument("--val", type=int, default=16)
    p.add_argument("--test", type=int, default=8)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--height", type=int, default=32)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--darken", type=float, default=1.0,
                   help="RGB intensity multiplier in (0,1]")
    p.add_argument("--layout", default="paired",
                   choices=("paired", "rgbt"))
    p.set_defaults(fn=cmd_synth)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, DataError, CheckpointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
