"""Detail aggregation over the two shallow stages.

Low-level features of both modalities are combined by a depthwise-separable
conv, a thermal spatial cue (channel-axis max pool -> 7x7 conv) gates the
combination, and a squeeze-excitation style channel attention rescales the
thermal-anchored result:

    fc = dwsep_conv(concat(f_rgb, f_thermal))          # (C, H, W)
    ts = conv7x7(max_over_channels(f_thermal))         # (1, H, W)
    d  = CA( fc * relu(fc + ts) + f_thermal )

"Global max pooling" is read as channel-axis pooling: it produces a spatial
map a 7x7 conv can meaningfully see (a spatially pooled scalar would make
that kernel vacuous). The fc(.) juxtaposition is read as elementwise gating.
With the combine path zeroed the module reduces exactly to
channel_attention(f_thermal) — the thermal passthrough the tests pin down.
"""

from .tensor import (ConfigError, ShapeError, add, conv2d,
                     depthwise_separable_conv, matmul, max_channel,
                     mean_spatial, mul, relu, reshape, sigmoid)


class DetailAggregation:
    """Parameters for one shallow stage of width C, reduction ratio r."""

    def __init__(self, factory, prefix, channels, reduction):
        if reduction < 1:
            raise ConfigError(f"channel-attention reduction must be >= 1, "
                              f"got {reduction}")
        self.channels = channels
        hidden = max(1, channels // reduction)
        self.dw_w, self.dw_b = factory.dwconv(prefix + ".combine_dw",
                                              2 * channels, 3)
        self.pw_w, self.pw_b = factory.conv(prefix + ".combine_pw",
                                            channels, 2 * channels, 1)
        self.spatial_w, self.spatial_b = factory.conv(prefix + ".spatial7",
                                                      1, 1, 7)
        self.ca_fc1, self.ca_b1 = factory.matrix(prefix + ".ca_fc1", hidden,
                                                 channels, bias=True)
        self.ca_fc2, self.ca_b2 = factory.matrix(prefix + ".ca_fc2", channels,
                                                 hidden, bias=True)

    def combine(self, f_rgb, f_thermal):
        from .tensor import concat
        both = concat([f_rgb, f_thermal], axis=0)          # (2C, H, W)
        return depthwise_separable_conv(both, self.dw_w, self.pw_w,
                                        self.dw_b, self.pw_b)

    def spatial_cue(self, f_thermal):
        pooled = max_channel(f_thermal)                    # (1, H, W)
        return conv2d(pooled, self.spatial_w, self.spatial_b, padding=3)

    def channel_attention(self, x):
        c = x.shape[0]
        gap = reshape(mean_spatial(x), (c, 1))             # (C, 1)
        h = relu(add(matmul(self.ca_fc1, gap), self.ca_b1))
        s = sigmoid(add(matmul(self.ca_fc2, h), self.ca_b2))
        return mul(x, reshape(s, (c, 1, 1)))               # per-channel scale

    def forward(self, f_rgb, f_thermal):
        if f_rgb.shape != f_thermal.shape:
            raise ShapeError(f"modality features differ: {f_rgb.shape} vs "
                             f"{f_thermal.shape}")
        if f_rgb.shape[0] != self.channels:
            raise ShapeError(f"detail stage built for {self.channels} "
                             f"channels, got {f_rgb.shape}")
        fc = self.combine(f_rgb, f_thermal)
        ts = self.spatial_cue(f_thermal)
        gated = mul(fc, relu(add(fc, ts)))                 # ts broadcasts
        return self.channel_attention(add(gated, f_thermal))
