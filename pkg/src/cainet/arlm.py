"""Attention-residual upsample stream with parallel target and aux heads.

Four stages walk back up the pyramid. Each stage mixes its guide features
with one level feature, gates the mix with a single-channel sigmoid head
(which doubles as the stage's auxiliary map), and applies an attention-
gated residual:

    h       = conv3x3(concat(guide, level))
    a       = sigmoid(conv1x1(h))
    refined = guide + a * h
    target  = conv1x1(refined) + upsampled(prior_target)   # logit residual
    refined is upsampled x2 on exit (stage 4: to label extents)

Stage pairing: 1 consumes the global context against merged deep
complementary features (emitting the first attention map), 2 consumes the
mid-level complementary features (second attention map), 3 and 4 consume
the two detail-aggregated shallow stages (binary and boundary maps).

The internal structure of a stage is this package's own definition — a
deliberately small attention-residual variant kept behind this interface
so an alternative refinement block can be swapped in wholesale. It is the
largest invented surface in the package.
"""

from dataclasses import dataclass
from typing import Optional

from .tensor import (ConfigError, Tensor, add, bilinear_resize, concat,
                     conv2d, mul, sigmoid)


@dataclass
class StreamOutputs:
    p1: Tensor
    p2: Tensor
    p3: Tensor
    p4: Tensor
    att1: Tensor
    att2: Tensor
    binary_map: Tensor
    boundary_map: Tensor
    s_rgb: Optional[Tensor] = None
    s_thermal: Optional[Tensor] = None
    s_global: Optional[Tensor] = None


class _StageParams:
    def __init__(self, factory, name, stream_width, level_channels,
                 num_classes):
        self.stream_width = stream_width
        self.level_channels = level_channels
        self.mix_w, self.mix_b = factory.conv(
            name + ".mix", stream_width, stream_width + level_channels, 3)
        self.gate_w, self.gate_b = factory.conv(name + ".gate", 1,
                                                stream_width, 1)
        self.target_w, self.target_b = factory.conv(name + ".target",
                                                    num_classes,
                                                    stream_width, 1)


def arlm_stage(params, guide, level, prior_logits=None, exit_hw=None):
    """One refinement stage; returns (refined, target_logits, aux_map)."""
    gh, gw = guide.shape[1], guide.shape[2]
    lh, lw = level.shape[1], level.shape[2]
    if (gh, gw) != (lh, lw):
        th, tw = max(gh, lh), max(gw, lw)
        guide = bilinear_resize(guide, th, tw)
        level = bilinear_resize(level, th, tw)
    if guide.shape[0] + level.shape[0] != params.mix_w.tensor.shape[1]:
        raise ConfigError(
            f"stage expects {params.mix_w.tensor.shape[1]} concat channels, "
            f"got {guide.shape[0]} + {level.shape[0]}")
    h = conv2d(concat([guide, level], axis=0), params.mix_w, params.mix_b)
    a = sigmoid(conv2d(h, params.gate_w, params.gate_b))      # (1, H, W)
    refined = add(guide, mul(a, h))
    target = conv2d(refined, params.target_w, params.target_b)
    if prior_logits is not None:
        target = add(target, bilinear_resize(prior_logits, target.shape[1],
                                             target.shape[2]))
    if exit_hw is not None:
        refined = bilinear_resize(refined, exit_hw[0], exit_hw[1])
    return refined, target, a


class ArlmStream:
    """The full four-stage stream.

    level_channels: (c5, c4, c3, c2, c1) — widths of the deep complementary
    features, the mid complementary feature, and the two detail stages.
    """

    def __init__(self, factory, prefix, gcm_channels, level_channels,
                 stream_width, num_classes):
        c5, c4, c3, c2, c1 = level_channels
        self.stream_width = stream_width
        self.proj_w, self.proj_b = factory.conv(
            prefix + ".stage1.input_proj", stream_width, gcm_channels, 1)
        if c4 != c5:
            self.merge_w, self.merge_b = factory.conv(
                prefix + ".stage1.merge", c5, c4, 1)
        else:
            self.merge_w = self.merge_b = None
        self.stages = [
            _StageParams(factory, f"{prefix}.stage1", stream_width, c5,
                         num_classes),
            _StageParams(factory, f"{prefix}.stage2", stream_width, c3,
                         num_classes),
            _StageParams(factory, f"{prefix}.stage3", stream_width, c2,
                         num_classes),
            _StageParams(factory, f"{prefix}.stage4", stream_width, c1,
                         num_classes),
        ]

    def run(self, g, cr5, cr4, cr3, d2, d1, label_hw) -> StreamOutputs:
        guide = conv2d(g, self.proj_w, self.proj_b)
        if self.merge_w is not None:
            cr4 = conv2d(cr4, self.merge_w, self.merge_b)
        if cr4.shape[1:] != cr5.shape[1:]:
            cr4 = bilinear_resize(cr4, cr5.shape[1], cr5.shape[2])
        level1 = add(cr5, cr4)

        def doubled(t):
            return (2 * t.shape[1], 2 * t.shape[2])

        r1, p1, att1 = arlm_stage(self.stages[0], guide, level1,
                                  None, doubled(guide))
        r2, p2, att2 = arlm_stage(self.stages[1], r1, cr3, p1, doubled(r1))
        r3, p3, binary = arlm_stage(self.stages[2], r2, d2, p2, doubled(r2))
        _, p4, boundary = arlm_stage(self.stages[3], r3, d1, p3, label_hw)
        p4 = bilinear_resize(p4, label_hw[0], label_hw[1])
        return StreamOutputs(p1=p1, p2=p2, p3=p3, p4=p4, att1=att1,
                             att2=att2, binary_map=binary,
                             boundary_map=boundary)
