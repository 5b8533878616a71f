"""Staged training orchestration, evaluation, and run configuration.

The model trains in four stages mirroring its structure: the two
single-modality branches first (plain CE on their coarse decoders), then
the fusion/global-context branch with encoders frozen, then the whole
network under the full loss stack. Each later stage requires the earlier
stages' checkpoints and refuses to start without them.

Early stopping watches validation mIoU once per epoch: no improvement of
at least ``min_delta`` for ``patience`` evaluations ends the stage early.

Everything is seeded; two runs with the same config produce bit-identical
logs and checkpoints.
"""

import dataclasses
import os
from dataclasses import dataclass

import numpy as np

from .checkpoint import (assign_parameters, load_checkpoint, save_checkpoint)
from .data import Corpus
from .losses import (LossReport, LossToggles, LossWeights, cross_entropy,
                     enet_class_weights, total_loss)
from .metrics import ConfusionMatrix, macc, miou
from .model import CaiNet, ModelConfig, config_for_preset
from .targets import aux_targets
from .tensor import ConfigError, adam_step, backward, mul, no_grad

STAGES = ("rgb", "thermal", "gcm", "full")


@dataclass
class TrainConfig:
    preset: str = "toy"
    data_root: str = ""
    out_dir: str = "runs/run0"
    stage: str = "pipeline"          # one stage name or the whole pipeline
    lr: float = 5e-4
    batch_size: int = 8
    seed: int = 0
    steps_rgb: int = 240
    steps_thermal: int = 240
    steps_gcm: int = 240
    steps_full: int = 1280
    patience: int = 10
    min_delta: float = 1e-4
    augment: bool = True
    enable_cacr: bool = True
    enable_gcm: bool = True
    enable_da: bool = True
    enable_thermal: bool = True
    loss_target: bool = True
    loss_att: bool = True
    loss_binary: bool = True
    loss_boundary: bool = True
    loss_decoder: bool = True
    modality_order: str = "rgb_first"
    lovasz_classes: str = "present"
    metrics_zero_class: str = "skip"
    dilation_k: int = 5
    attention_sigma: float = 2.0
    width_multiplier: float = 1.0

    def steps_for(self, stage):
        return getattr(self, f"steps_{stage}")

    def model_config(self, num_classes) -> ModelConfig:
        base = config_for_preset(self.preset, num_classes,
                                 enable_cacr=self.enable_cacr,
                                 enable_gcm=self.enable_gcm,
                                 enable_da=self.enable_da,
                                 enable_thermal=self.enable_thermal,
                                 modality_order=self.modality_order)
        if self.width_multiplier != 1.0:
            bb = dataclasses.replace(base.backbone,
                                     width_multiplier=self.width_multiplier)
            base = dataclasses.replace(base, backbone=bb)
        return base

    def toggles(self) -> LossToggles:
        return LossToggles(target=self.loss_target, att=self.loss_att,
                           binary=self.loss_binary,
                           boundary=self.loss_boundary,
                           decoder=self.loss_decoder)


_BOOL_WORDS = {"true": True, "1": True, "yes": True, "on": True,
               "false": False, "0": False, "no": False, "off": False}


def _coerce(field_type, key, raw):
    if field_type is bool:
        word = raw.strip().lower()
        if word not in _BOOL_WORDS:
            raise ConfigError(f"config key {key!r} wants a boolean, got "
                              f"{raw!r}")
        return _BOOL_WORDS[word]
    try:
        return field_type(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r} wants {field_type.__name__}, "
                          f"got {raw!r}")


def config_from_mapping(mapping) -> TrainConfig:
    fields = {f.name: f.type for f in dataclasses.fields(TrainConfig)}
    types = {"str": str, "float": float, "int": int, "bool": bool}
    kwargs = {}
    for key, raw in mapping.items():
        if key not in fields:
            valid = ", ".join(sorted(fields))
            raise ConfigError(f"unknown config key {key!r}; valid keys: "
                              f"{valid}")
        ftype = fields[key]
        if isinstance(ftype, str):
            ftype = types[ftype]
        kwargs[key] = _coerce(ftype, key, str(raw))
    return TrainConfig(**kwargs)


def parse_config_text(text):
    """key=value lines; '#' starts a comment; later keys win."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno} is not key=value: "
                              f"{raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


# ---------------------------------------------------------------------------
# loss statistics


def corpus_weights(train_samples, num_classes, dilation_k=5,
                   sigma=2.0) -> LossWeights:
    """Frequency-balanced weights measured on the training split."""
    counts = np.zeros(num_classes, dtype=np.int64)
    boundary_pixels = 0
    total = 0
    for s in train_samples:
        counts += np.bincount(s.labels.reshape(-1), minlength=num_classes)
        aux = aux_targets(s.labels, dilation_k, sigma)
        boundary_pixels += int(aux.boundary.sum())
        total += s.labels.size
    freqs = counts / max(total, 1)
    fg = float(freqs[1:].sum())
    edge = boundary_pixels / max(total, 1)
    return LossWeights(
        seg=enet_class_weights(freqs),
        binary=enet_class_weights(np.array([1.0 - fg, fg])),
        boundary=enet_class_weights(np.array([1.0 - edge, edge])))


# ---------------------------------------------------------------------------
# evaluation


def stage_prediction(model: CaiNet, sample, stage):
    """Argmax labels from the head the given stage is training."""
    with no_grad():
        if stage == "rgb" or stage == "thermal":
            logits = model.forward_coarse(sample, stage)
        elif stage == "gcm":
            logits = model.forward_global(sample)
        else:
            return model.infer(sample)
    return np.argmax(logits.data, axis=0).astype(np.int32)


def evaluate_split(model: CaiNet, samples, stage="full",
                   zero_class="skip"):
    """Confusion matrix + metrics over a sample list."""
    cm = ConfusionMatrix(model.cfg.num_classes)
    for s in samples:
        cm.accumulate(stage_prediction(model, s, stage), s.labels)
    return cm, macc(cm, zero_class), miou(cm, zero_class)


# ---------------------------------------------------------------------------
# training


def _stage_loss(model: CaiNet, sample, stage, weights, cfg: TrainConfig):
    """Forward + loss for one sample; returns (report, scalar tensor)."""
    if stage in ("rgb", "thermal"):
        logits = model.forward_coarse(sample, stage)
        loss = cross_entropy(logits, sample.labels)
        return LossReport(l_decoder=loss.item(), l_total=loss.item()), loss
    if stage == "gcm":
        logits = model.forward_global(sample)
        loss = cross_entropy(logits, sample.labels)
        return LossReport(l_decoder=loss.item(), l_total=loss.item()), loss
    model.counters.aux_target_builds += 1
    aux = aux_targets(sample.labels, cfg.dilation_k, cfg.attention_sigma)
    outs = model.forward_full(sample, with_decoders=cfg.loss_decoder)
    return total_loss(outs, sample.labels, aux, weights,
                      toggles=cfg.toggles(),
                      lovasz_classes=cfg.lovasz_classes)


def _mean_report(reports):
    mean = LossReport()
    n = len(reports)
    for f in dataclasses.fields(LossReport):
        setattr(mean, f.name,
                sum(getattr(r, f.name) for r in reports) / n)
    return mean


def run_stage(model: CaiNet, corpus: Corpus, stage, cfg: TrainConfig,
              log_lines, start_step=0):
    """Train one stage; returns (final_step, last_val_miou)."""
    train = corpus.split("train")
    val = corpus.split("val")
    if not train:
        raise ConfigError("training split is empty")
    params = model.stage_parameters(stage)
    weights = corpus_weights(train, corpus.num_classes, cfg.dilation_k,
                             cfg.attention_sigma)
    rng = np.random.default_rng(
        np.random.SeedSequence([cfg.seed, STAGES.index(stage)]))
    max_steps = cfg.steps_for(stage)
    step = start_step
    taken = 0
    best = -1.0
    patience_left = cfg.patience
    last_val = 0.0
    stop = False
    while taken < max_steps and not stop:
        order = rng.permutation(len(train))
        for lo in range(0, len(order), cfg.batch_size):
            batch_idx = order[lo:lo + cfg.batch_size]
            reports = []
            loss_sum = None
            for j in batch_idx:
                s = train[j]
                if cfg.augment and rng.random() < 0.5:
                    s = s.flipped()
                rep, loss = _stage_loss(model, s, stage, weights, cfg)
                reports.append(rep)
                loss_sum = loss if loss_sum is None else loss_sum + loss
            backward(mul(loss_sum, 1.0 / len(batch_idx)))
            adam_step(params, cfg.lr)
            step += 1
            taken += 1
            log_lines.append(_mean_report(reports).log_line(step))
            if taken >= max_steps:
                break
        if val:
            _, _, val_miou = evaluate_split(model, val, stage,
                                            cfg.metrics_zero_class)
            last_val = val_miou
            log_lines.append(f"eval stage={stage} step={step} "
                             f"val_miou={val_miou:.6f}")
            if val_miou > best + cfg.min_delta:
                best = val_miou
                patience_left = cfg.patience
            else:
                patience_left -= 1
                if patience_left <= 0:
                    log_lines.append(f"early-stop stage={stage} step={step}")
                    stop = True
    return step, last_val


def _checkpoint_path(out_dir, stage):
    return os.path.join(out_dir, f"{stage}.ckpt")


def _require_checkpoints(cfg: TrainConfig, stages):
    for st in stages:
        path = _checkpoint_path(cfg.out_dir, st)
        if not os.path.exists(path):
            raise ConfigError(
                f"stage prerequisites missing: no {st!r} checkpoint at "
                f"{path}; train stage {st!r} first")


def _stage_prerequisites(cfg: TrainConfig, stage):
    want = {"rgb": (), "thermal": (),
            "gcm": ("rgb",) + (("thermal",) if cfg.enable_thermal else ()),
            "full": ("rgb", "gcm") + (("thermal",) if cfg.enable_thermal
                                      else ())}
    return want[stage]


def _load_prerequisites(model: CaiNet, cfg: TrainConfig, stage):
    for st in _stage_prerequisites(cfg, stage):
        state = load_checkpoint(_checkpoint_path(cfg.out_dir, st))
        assign_parameters(model.params, state, strict=False)


def staged_train(cfg: TrainConfig, corpus: Corpus = None):
    """Run one stage or the whole pipeline; returns a result summary."""
    if corpus is None:
        from .data import load_corpus
        corpus = load_corpus(cfg.data_root)
    os.makedirs(cfg.out_dir, exist_ok=True)
    stages = ([s for s in STAGES
               if s != "thermal" or cfg.enable_thermal]
              if cfg.stage == "pipeline" else (cfg.stage,))
    if cfg.stage != "pipeline" and cfg.stage not in STAGES:
        raise ConfigError(f"unknown stage {cfg.stage!r}; choose one of "
                          f"{STAGES + ('pipeline',)}")

    model = CaiNet(cfg.model_config(corpus.num_classes), seed=cfg.seed)
    log_lines = []
    summary = {"stages": {}, "out_dir": cfg.out_dir}
    step = 0
    if cfg.stage != "pipeline":
        _require_checkpoints(cfg, _stage_prerequisites(cfg, cfg.stage))
        _load_prerequisites(model, cfg, cfg.stage)
    for stage in stages:
        step, val_miou = run_stage(model, corpus, stage, cfg, log_lines,
                                   start_step=step)
        save_checkpoint(_checkpoint_path(cfg.out_dir, stage), model.params)
        summary["stages"][stage] = {"last_step": step, "val_miou": val_miou}
    log_path = os.path.join(cfg.out_dir, "train.log")
    with open(log_path, "w") as fh:
        fh.write("\n".join(log_lines) + "\n")
    summary["log_path"] = log_path
    summary["model"] = model
    return summary
