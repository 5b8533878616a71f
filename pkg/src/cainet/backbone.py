"""Lightweight five-stage encoder and the coarse per-modality decoder.

Each stage is a run of inverted-residual blocks: 1x1 expand -> depthwise
3x3 -> 1x1 linear project, with an identity skip when the block keeps both
stride and width. The final downsample of the classic mobile plan is
removed, so the deepest features sit at 1/16 scale in the paper-size preset
(1/8 in the toy preset) and the last two stages share spatial extents.

No normalization layers: at desk scale plain conv+bias trains fine and
keeps the arithmetic easy to verify.
"""

from dataclasses import dataclass

import numpy as np

from .tensor import (ConfigError, ShapeError, Tensor, add, bilinear_resize,
                     conv2d, depthwise_conv2d, relu, relu6)


@dataclass(frozen=True)
class BackboneConfig:
    stem_channels: int
    stage_channels: tuple           # width of each of the 5 stages
    stage_strides: tuple            # cumulative downsample of each stage
    blocks_per_stage: tuple
    expansion: int
    num_classes: int
    width_multiplier: float = 1.0

    def __post_init__(self):
        if not (len(self.stage_channels) == len(self.stage_strides)
                == len(self.blocks_per_stage) == 5):
            raise ConfigError("backbone needs exactly 5 stage entries")
        if self.num_classes < 1:
            raise ConfigError("num_classes must be >= 1")
        if any(c < 1 for c in self.stage_channels) or self.stem_channels < 1:
            raise ConfigError("channel counts must be >= 1")
        if any(b < 1 for b in self.blocks_per_stage):
            raise ConfigError("blocks_per_stage entries must be >= 1")
        if self.expansion < 1:
            raise ConfigError("expansion must be >= 1")
        if self.width_multiplier <= 0:
            raise ConfigError("width_multiplier must be positive")
        prev = 1
        for s in self.stage_strides:
            if s % prev != 0 or s // prev not in (1, 2):
                raise ConfigError(
                    f"stage stride plan {self.stage_strides} must grow by "
                    "factors of 1 or 2")
            prev = s
        if self.stage_strides[4] != self.stage_strides[3]:
            raise ConfigError("the last two stages must share extents "
                              "(final downsample removed)")

    def scaled(self, c):
        return max(1, int(round(c * self.width_multiplier)))

    @property
    def output_stride(self):
        return self.stage_strides[-1]

    @property
    def stage_widths(self):
        return tuple(self.scaled(c) for c in self.stage_channels)


@dataclass
class FeaturePyramid:
    """Per-stage feature maps; f4 and f5 share spatial extents."""
    modality: str
    f1: Tensor
    f2: Tensor
    f3: Tensor
    f4: Tensor
    f5: Tensor

    def stage(self, i):
        return (self.f1, self.f2, self.f3, self.f4, self.f5)[i - 1]


class _Block:
    """Parameters of one inverted-residual block."""

    def __init__(self, factory, name, cin, cout, expansion, stride):
        hidden = cin * expansion
        self.stride = stride
        self.cin = cin
        self.cout = cout
        self.expand_w, self.expand_b = factory.conv(
            name + ".expand", hidden, cin, 1)
        self.dw_w, self.dw_b = factory.dwconv(name + ".dw", hidden, 3)
        self.proj_w, self.proj_b = factory.conv(
            name + ".project", cout, hidden, 1)

    def forward(self, x):
        h = relu6(conv2d(x, self.expand_w, self.expand_b))
        h = relu6(depthwise_conv2d(h, self.dw_w, self.dw_b,
                                   stride=self.stride, padding=1))
        h = conv2d(h, self.proj_w, self.proj_b)
        if self.stride == 1 and self.cin == self.cout:
            h = add(h, x)
        return h


class Encoder:
    """Five-stage feature extractor for one modality."""

    def __init__(self, factory, prefix, cfg: BackboneConfig, in_channels,
                 modality):
        self.cfg = cfg
        self.in_channels = in_channels
        self.modality = modality
        widths = cfg.stage_widths
        stem_c = cfg.scaled(cfg.stem_channels)
        self.stem_w, self.stem_b = factory.conv(
            prefix + ".stem", stem_c, in_channels, 3)
        self.stem_stride = cfg.stage_strides[0]
        self.stages = []
        cin = stem_c
        prev_stride = cfg.stage_strides[0]
        for i in range(5):
            blocks = []
            first_stride = cfg.stage_strides[i] // prev_stride if i else 1
            for j in range(cfg.blocks_per_stage[i]):
                stride = first_stride if j == 0 else 1
                blocks.append(_Block(
                    factory, f"{prefix}.stage{i + 1}.block{j}",
                    cin, widths[i], cfg.expansion, stride))
                cin = widths[i]
            self.stages.append(blocks)
            prev_stride = cfg.stage_strides[i]

    def encode(self, image) -> FeaturePyramid:
        """image: (in_channels, H, W) with H, W divisible by the deepest stride."""
        c, h, w = image.shape
        if c != self.in_channels:
            raise ShapeError(f"{self.modality} encoder expects "
                             f"{self.in_channels} channels, got {c}")
        s = self.cfg.output_stride
        if h % s or w % s:
            raise ShapeError(f"input extents {(h, w)} must be divisible by "
                             f"the output stride {s}")
        x = relu6(conv2d(image, self.stem_w, self.stem_b,
                         stride=self.stem_stride))
        feats = []
        for blocks in self.stages:
            for blk in blocks:
                x = blk.forward(x)
            feats.append(x)
        return FeaturePyramid(self.modality, *feats)


class CoarseDecoder:
    """3x3 conv + relu + 1x1 classifier, bilinearly resized to label extents."""

    def __init__(self, factory, prefix, channels, num_classes):
        self.w1, self.b1 = factory.conv(prefix + ".mix", channels, channels, 3)
        self.w2, self.b2 = factory.conv(prefix + ".cls", num_classes,
                                        channels, 1)

    def decode(self, feature, out_hw):
        h = relu(conv2d(feature, self.w1, self.b1))
        z = conv2d(h, self.w2, self.b2)
        return bilinear_resize(z, out_hw[0], out_hw[1])


def toy_backbone(num_classes):
    return BackboneConfig(
        stem_channels=8,
        stage_channels=(8, 16, 24, 32, 32),
        stage_strides=(1, 2, 4, 8, 8),
        blocks_per_stage=(1, 1, 1, 1, 1),
        expansion=2,
        num_classes=num_classes,
    )


def paper_backbone(num_classes):
    return BackboneConfig(
        stem_channels=32,
        stage_channels=(16, 24, 32, 96, 320),
        stage_strides=(2, 4, 8, 16, 16),
        blocks_per_stage=(1, 2, 3, 4, 3),
        expansion=6,
        num_classes=num_classes,
    )
