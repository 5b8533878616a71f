"""Full two-stream segmentation model: encoders, cross-modal fusion,
global context, detail aggregation, the upsample stream, and the three
coarse decoders.

Ablation behavior: each fusion module can be disabled, in which case a
channel-matched 1x1 conv bridge stands in (the minimal replacement that
keeps every downstream shape identical). Disabling the thermal stream
reuses the RGB pyramid for both modality slots and drops the thermal
decoder, giving the RGB-only variant the same structure and parameter
shapes everywhere else.

Instrumentation counters record decoder-head evaluations and auxiliary-
target builds so tests can assert the inference path touches neither.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .arlm import ArlmStream, StreamOutputs
from .backbone import (BackboneConfig, CoarseDecoder, Encoder, paper_backbone,
                       toy_backbone)
from .cacr import CACR
from .detail import DetailAggregation
from .gcm import GCM, aggregate_complementary
from .tensor import (ConfigError, ParamFactory, Tensor, add, concat, conv2d,
                     no_grad)


@dataclass(frozen=True)
class ModelConfig:
    preset: str
    num_classes: int
    backbone: BackboneConfig
    gcm_channels: int
    stream_width: int
    ca_reduction: int
    enable_cacr: bool = True
    enable_gcm: bool = True
    enable_da: bool = True
    enable_thermal: bool = True
    modality_order: str = "rgb_first"
    # The reference training recipe fine-tunes encoders pretrained on a
    # large photo corpus; this implementation trains from scratch. The flag
    # only records the fact for reports.
    pretrained_encoders: bool = False

    def __post_init__(self):
        if self.num_classes < 2:
            raise ConfigError("need at least 2 classes")
        if self.modality_order not in ("rgb_first", "thermal_first"):
            raise ConfigError(f"bad modality_order {self.modality_order!r}")


def toy_config(num_classes=3, **overrides) -> ModelConfig:
    cfg = ModelConfig(preset="toy", num_classes=num_classes,
                      backbone=toy_backbone(num_classes),
                      gcm_channels=16, stream_width=32, ca_reduction=4)
    return replace(cfg, **overrides) if overrides else cfg


def paper_config(num_classes=9, **overrides) -> ModelConfig:
    cfg = ModelConfig(preset="paper", num_classes=num_classes,
                      backbone=paper_backbone(num_classes),
                      gcm_channels=64, stream_width=320, ca_reduction=16)
    return replace(cfg, **overrides) if overrides else cfg


def config_for_preset(preset, num_classes, **overrides) -> ModelConfig:
    if preset == "toy":
        return toy_config(num_classes, **overrides)
    if preset == "paper":
        return paper_config(num_classes, **overrides)
    raise ConfigError(f"unknown preset {preset!r}")


@dataclass
class Counters:
    decoder_evals: int = 0
    aux_target_builds: int = 0


class CaiNet:
    def __init__(self, cfg: ModelConfig, seed=0):
        self.cfg = cfg
        factory = ParamFactory(np.random.default_rng(seed))
        bb = cfg.backbone
        widths = bb.stage_widths
        k = cfg.num_classes

        self.enc_rgb = Encoder(factory, "encoder.rgb", bb, 3, "rgb")
        self.enc_thermal = (Encoder(factory, "encoder.thermal", bb, 1,
                                    "thermal")
                            if cfg.enable_thermal else None)

        self.cacr = {}
        self.cacr_bridge = {}
        for i in (3, 4, 5):
            c = widths[i - 1]
            if cfg.enable_cacr:
                self.cacr[i] = CACR(factory, f"cacr.stage{i}", c)
            else:
                self.cacr_bridge[i] = factory.conv(f"cacr_bridge.stage{i}",
                                                   c, c, 1)

        crc_channels = widths[2] + widths[3] + widths[4]
        if cfg.enable_gcm:
            self.gcm = GCM(factory, "gcm", crc_channels, cfg.gcm_channels)
            self.gcm_bridge = None
        else:
            self.gcm = None
            self.gcm_bridge = factory.conv("gcm_bridge", cfg.gcm_channels,
                                           crc_channels, 1)

        self.da = {}
        self.da_bridge = {}
        for i in (1, 2):
            c = widths[i - 1]
            if cfg.enable_da:
                self.da[i] = DetailAggregation(factory, f"da.stage{i}", c,
                                               cfg.ca_reduction)
            else:
                self.da_bridge[i] = factory.conv(f"da_bridge.stage{i}", c,
                                                 2 * c, 1)

        self.stream = ArlmStream(
            factory, "arlm", cfg.gcm_channels,
            (widths[4], widths[3], widths[2], widths[1], widths[0]),
            cfg.stream_width, k)

        self.dec_rgb = CoarseDecoder(factory, "decoder.rgb", widths[4], k)
        self.dec_thermal = (CoarseDecoder(factory, "decoder.thermal",
                                          widths[4], k)
                            if cfg.enable_thermal else None)
        self.dec_global = CoarseDecoder(factory, "decoder.global",
                                        cfg.gcm_channels, k)

        self.params = factory.registry
        self.counters = Counters()

    # -- pieces ------------------------------------------------------------

    def _tensor(self, arr):
        return Tensor(np.asarray(arr))

    def encode_both(self, rgb, thermal):
        fr = self.enc_rgb.encode(self._tensor(rgb))
        if self.enc_thermal is not None:
            ft = self.enc_thermal.encode(self._tensor(thermal))
        else:
            ft = fr
        return fr, ft

    def _complementary(self, fr, ft, i):
        a, b = fr.stage(i), ft.stage(i)
        if self.cfg.enable_cacr:
            return self.cacr[i].forward(a, b, self.cfg.modality_order)
        w, bias = self.cacr_bridge[i]
        return conv2d(add(a, b), w, bias)

    def _global_feature(self, fr, ft):
        cr3 = self._complementary(fr, ft, 3)
        cr4 = self._complementary(fr, ft, 4)
        cr5 = self._complementary(fr, ft, 5)
        crc = aggregate_complementary(cr3, cr4, cr5)
        if self.cfg.enable_gcm:
            g = self.gcm.forward(crc)
        else:
            w, bias = self.gcm_bridge
            g = conv2d(crc, w, bias)
        return cr3, cr4, cr5, g

    def _detail(self, fr, ft, i):
        a, b = fr.stage(i), ft.stage(i)
        if self.cfg.enable_da:
            return self.da[i].forward(a, b)
        w, bias = self.da_bridge[i]
        return conv2d(concat([a, b], axis=0), w, bias)

    def _decode(self, decoder, feature, label_hw):
        self.counters.decoder_evals += 1
        return decoder.decode(feature, label_hw)

    # -- stage forwards ----------------------------------------------------

    def forward_coarse(self, sample, modality):
        """Single-stream coarse logits (the rgb / thermal warmup stages)."""
        label_hw = sample.labels.shape
        if modality == "rgb":
            f = self.enc_rgb.encode(self._tensor(sample.rgb))
            return self._decode(self.dec_rgb, f.f5, label_hw)
        if self.enc_thermal is None:
            raise ConfigError("thermal stream is disabled in this config")
        f = self.enc_thermal.encode(self._tensor(sample.thermal))
        return self._decode(self.dec_thermal, f.f5, label_hw)

    def forward_global(self, sample):
        """Fusion + global context head with frozen encoders (gcm stage)."""
        label_hw = sample.labels.shape
        with no_grad():
            fr, ft = self.encode_both(sample.rgb, sample.thermal)
        _, _, _, g = self._global_feature(fr, ft)
        return self._decode(self.dec_global, g, label_hw)

    def forward_full(self, sample, with_decoders=True) -> StreamOutputs:
        """The whole network; decoders optional (inference skips them)."""
        label_hw = sample.labels.shape
        fr, ft = self.encode_both(sample.rgb, sample.thermal)
        cr3, cr4, cr5, g = self._global_feature(fr, ft)
        d1 = self._detail(fr, ft, 1)
        d2 = self._detail(fr, ft, 2)
        outs = self.stream.run(g, cr5, cr4, cr3, d2, d1, label_hw)
        if with_decoders:
            outs.s_rgb = self._decode(self.dec_rgb, fr.f5, label_hw)
            if self.dec_thermal is not None:
                outs.s_thermal = self._decode(self.dec_thermal, ft.f5,
                                              label_hw)
            outs.s_global = self._decode(self.dec_global, g, label_hw)
        return outs

    def infer(self, sample):
        """Argmax class map from the final target head only."""
        with no_grad():
            outs = self.forward_full(sample, with_decoders=False)
        return np.argmax(outs.p4.data, axis=0).astype(np.int32)

    # -- parameter handling --------------------------------------------------

    _STAGE_PREFIXES = {
        "rgb": ("encoder.rgb.", "decoder.rgb."),
        "thermal": ("encoder.thermal.", "decoder.thermal."),
        "gcm": ("cacr.", "cacr_bridge.", "gcm.", "gcm_bridge.",
                "decoder.global."),
        "full": ("",),
    }

    def stage_parameters(self, stage):
        if stage not in self._STAGE_PREFIXES:
            raise ConfigError(f"unknown training stage {stage!r}")
        prefixes = self._STAGE_PREFIXES[stage]
        return [p for name, p in sorted(self.params.items())
                if any(name.startswith(pre) for pre in prefixes)]

    def parameter_count(self, prefix=""):
        return sum(p.tensor.data.size for name, p in self.params.items()
                   if name.startswith(prefix))


def parameter_report(model: CaiNet):
    """Per-component parameter counts for the build report."""
    groups = ("encoder.rgb", "encoder.thermal", "cacr", "gcm", "da", "arlm",
              "decoder")
    report = {g: model.parameter_count(g) for g in groups}
    report["total"] = model.parameter_count()
    return report
