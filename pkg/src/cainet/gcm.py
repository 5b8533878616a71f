"""Global context modeling over the aggregated complementary features.

The three deep complementary maps are concatenated at stage-4 extents
(only the shallower one needs resizing since the two deepest stages share
extents), reduced to c channels three times, and a channel affinity drives
a relationship-modeling mix of the value branch:

    p, q, v = flatten(conv1x1_i(crc))       i in {1,2,3}       # (c, D)
    a       = p @ q^T                                          # (c, c)
    rm      = conv1d_a(softmax_rows(a)) + exp(a)/sum(exp(a))   # (c, c)
    g       = reshape(conv1d_b(rm) @ v, (c, H4, W4))

The 1-D convs have kernel size 1 over the row axis, i.e. they are square
channel mixes applied from the left. The literal row-major transpose
orientation for g would produce a D-by-c matrix; it is emitted here in the
(c, H, W) orientation so g can flow into the upsample stream as a feature
map — documented deviation. All projections are bias-free, the two reduce
branches of the affinity are distinct parameter sets (so symmetry of `a`
is not guaranteed), and the second rm term is one softmax over all c^2
entries, which therefore sums to 1.
"""

from .tensor import (ShapeError, add, bilinear_resize, concat, conv2d,
                     flatten2d, matmul, reshape, softmax_axis, transpose2d)


class GCM:
    def __init__(self, factory, prefix, crc_channels, channels):
        self.crc_channels = crc_channels
        self.channels = channels
        self.reduce1 = factory.conv_weight(prefix + ".reduce1", channels,
                                           crc_channels, 1)
        self.reduce2 = factory.conv_weight(prefix + ".reduce2", channels,
                                           crc_channels, 1)
        self.reduce3 = factory.conv_weight(prefix + ".reduce3", channels,
                                           crc_channels, 1)
        self.conv1d_a = factory.matrix(prefix + ".conv1d_a", channels,
                                       channels)[0]
        self.conv1d_b = factory.matrix(prefix + ".conv1d_b", channels,
                                       channels)[0]

    def forward(self, crc):
        if crc.shape[0] != self.crc_channels:
            raise ShapeError(f"gcm expects {self.crc_channels} aggregated "
                             f"channels, got {crc.shape}")
        a = channel_affinity(crc, self.reduce1, self.reduce2)
        rm = relationship_modeling(a, self.conv1d_a)
        return global_context(crc, rm, self.reduce3, self.conv1d_b)


def aggregate_complementary(cr3, cr4, cr5):
    """Channel-concat (cr3, cr4, cr5) at cr4's spatial extents."""
    h4, w4 = cr4.shape[1], cr4.shape[2]
    cr3r = bilinear_resize(cr3, h4, w4)
    if cr5.shape[1:] != (h4, w4):
        raise ShapeError(f"deepest stages must share extents, got "
                         f"{cr5.shape} vs {cr4.shape}")
    return concat([cr3r, cr4, cr5], axis=0)


def channel_affinity(crc, reduce1, reduce2):
    p = flatten2d(conv2d(crc, reduce1))          # (c, D)
    q = flatten2d(conv2d(crc, reduce2))          # (c, D)
    return matmul(p, transpose2d(q))             # (c, c)


def relationship_modeling(a, conv1d_a):
    rows = softmax_axis(a, axis=1)               # each row sums to 1
    mixed = matmul(conv1d_a, rows)               # (c, c)
    c = a.shape[0]
    flat = reshape(a, (1, c * c))
    global_term = reshape(softmax_axis(flat, axis=1), (c, c))
    return add(mixed, global_term)


def global_context(crc, rm, reduce3, conv1d_b):
    c, h4, w4 = reduce3.tensor.shape[0], crc.shape[1], crc.shape[2]
    v = flatten2d(conv2d(crc, reduce3))          # (c, D)
    g = matmul(matmul(conv1d_b, rm), v)          # (c, D)
    return reshape(g, (c, h4, w4))
