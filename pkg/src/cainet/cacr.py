"""Context-aware complementary reasoning between the two modality streams.

Both stage features are projected into a flattened interaction space
(t1 with N=C rows, t2 with M=C/2 rows), correlated into an M-by-N
similarity map, mixed by two learned square maps with an inner residual,
and the result is expanded back over t2 and added to the modality sum:

    t1     = flatten(conv1x1(x1; w1))                 # (N=C, D)
    t2     = flatten(conv1x1(x2; w2))                 # (M=C/2, D)
    i_corr = (t2 @ t1^T) / (N*M)                      # (M, N)
    cr'    = relu(fc2 @ relu(i_corr @ fc1 + i_corr))  # (M, N)
    out    = (x1 + x2) + reshape(cr'^T @ t2, C,H,W)

The expansion is written as transpose(cr') @ t2 — the one parameter-free
contraction that lands back on C channels for the residual add (the purely
row-wise alternative is not dimensionally closed once M = C/2). Everything
here is bias-free so that a zeroed reasoning path degenerates exactly to
modality summation.

Which modality feeds t1 versus t2 is a config choice (``rgb_first`` by
default); the ablation harness can swap it.
"""

from .tensor import (ConfigError, ShapeError, add, conv2d, flatten2d, matmul,
                     mul, relu, reshape, transpose2d)


class CACR:
    """Parameters and forward pass for one fusion stage of width C."""

    def __init__(self, factory, prefix, channels):
        if channels % 2:
            raise ConfigError(f"cacr needs an even channel count, got "
                              f"{channels}")
        self.channels = channels
        n, m = channels, channels // 2
        self.w1 = factory.conv_weight(prefix + ".w1", n, channels, 1)
        self.w2 = factory.conv_weight(prefix + ".w2", m, channels, 1)
        self.fc1 = factory.matrix(prefix + ".fc1", n, n)[0]
        self.fc2 = factory.matrix(prefix + ".fc2", m, m)[0]

    def project(self, x1, x2):
        """Map both modality features into the interaction space."""
        t1 = flatten2d(conv2d(x1, self.w1))        # (N, D)
        t2 = flatten2d(conv2d(x2, self.w2))        # (M, D)
        return t1, t2

    def forward(self, f_rgb, f_thermal, order="rgb_first"):
        if f_rgb.shape != f_thermal.shape:
            raise ShapeError(f"modality features differ: {f_rgb.shape} vs "
                             f"{f_thermal.shape}")
        if f_rgb.shape[0] != self.channels:
            raise ShapeError(f"cacr built for {self.channels} channels, got "
                             f"{f_rgb.shape}")
        x1, x2 = (f_rgb, f_thermal) if order == "rgb_first" else \
            (f_thermal, f_rgb)
        t1, t2 = self.project(x1, x2)
        i_corr = interaction_correlation(t1, t2)
        cr_prime = complementary_reasoning(i_corr, self.fc1, self.fc2)
        x_sum = add(f_rgb, f_thermal)
        return reconstruct(x_sum, t2, cr_prime)


def interaction_correlation(t1, t2):
    """Similarity map between interaction rows, normalized by its own size."""
    n = t1.shape[0]
    m = t2.shape[0]
    if t1.shape[1] != t2.shape[1]:
        raise ShapeError(f"interaction spaces differ in D: {t1.shape} vs "
                         f"{t2.shape}")
    return mul(matmul(t2, transpose2d(t1)), 1.0 / (n * m))   # (M, N)


def complementary_reasoning(i_corr, fc1, fc2):
    # fc1 mixes along the N axis (right multiply), fc2 along M (left),
    # with a residual join before the inner nonlinearity.
    h = relu(add(matmul(i_corr, fc1), i_corr))               # (M, N)
    return relu(matmul(fc2, h))                              # (M, N)


def reconstruct(x_sum, t2, cr_prime):
    """Expand the reasoned map over t2 and add it to the modality sum."""
    c, hh, ww = x_sum.shape
    complement = matmul(transpose2d(cr_prime), t2)           # (N=C, D)
    if complement.shape != (c, hh * ww):
        raise ShapeError(f"complement {complement.shape} cannot expand to "
                         f"{x_sum.shape}")
    return add(x_sum, reshape(complement, (c, hh, ww)))
