"""Detail aggregation: modality combining, thermal cues, channel attention."""

import numpy as np
import pytest

from cainet.detail import DetailAggregation
from cainet.tensor import (ConfigError, ParamFactory, ShapeError, Tensor,
                           concat, conv2d, depthwise_conv2d)


def _factory(seed=0):
    return ParamFactory(np.random.default_rng(seed))


def _feat(shape, seed):
    return Tensor(np.random.default_rng(seed).standard_normal(shape)
                  .astype(np.float32))


def _zeros(shape):
    return Tensor(np.zeros(shape, dtype=np.float32))


def test_reduction_must_be_positive():
    with pytest.raises(ConfigError, match="reduction"):
        DetailAggregation(_factory(), "da", 4, 0)


# -- combine ---------------------------------------------------------------------

def test_combine_zero_convs():
    f = _factory()
    da = DetailAggregation(f, "da", 4, 2)
    da.dw_w.tensor.data[:] = 0
    da.dw_b.tensor.data[:] = 0
    out = da.combine(_feat((4, 5, 5), 0), _feat((4, 5, 5), 1))
    assert out.shape == (4, 5, 5)
    assert not out.data.any()


def test_combine_equals_sequential_convs():
    da = DetailAggregation(_factory(3), "da", 4, 2)
    a, b = _feat((4, 5, 5), 2), _feat((4, 5, 5), 3)
    fused = da.combine(a, b).data
    both = concat([a, b], axis=0)
    step = depthwise_conv2d(both, da.dw_w, da.dw_b, padding=1)
    ref = conv2d(step, da.pw_w, da.pw_b).data
    assert np.allclose(fused, ref, atol=1e-6)


# -- spatial cue ------------------------------------------------------------------

def test_spatial_cue_constant_input():
    da = DetailAggregation(_factory(4), "da", 4, 2)
    k = 2.5
    out = da.spatial_cue(Tensor(np.full((4, 9, 9), k, dtype=np.float32)))
    s = float(da.spatial_w.tensor.data.sum())
    # Interior positions see the full 7x7 support of the constant map.
    assert out.data[0, 4, 4] == pytest.approx(k * s, rel=1e-4)


def test_spatial_cue_receptive_field():
    da = DetailAggregation(_factory(5), "da", 2, 2)
    x = np.full((2, 15, 15), -1.0, dtype=np.float32)
    x[0, 7, 7] = 5.0                   # the channel max carries one hot pixel
    da.spatial_b.tensor.data[:] = 0
    out = da.spatial_cue(Tensor(x)).data[0]
    base = da.spatial_cue(Tensor(np.full((2, 15, 15), -1.0,
                                         dtype=np.float32))).data[0]
    delta = np.abs(out - base) > 1e-6
    ys, xs = np.nonzero(delta)
    assert ys.size                      # the pixel is visible somewhere
    assert ys.min() >= 4 and ys.max() <= 10
    assert xs.min() >= 4 and xs.max() <= 10


def test_spatial_cue_extents_preserved():
    da = DetailAggregation(_factory(6), "da", 3, 2)
    out = da.spatial_cue(_feat((3, 6, 11), 7))
    assert out.shape == (1, 6, 11)


# -- channel attention ---------------------------------------------------------------

def test_channel_attention_zero_weights_halves_input():
    f = _factory(7)
    da = DetailAggregation(f, "da", 4, 2)
    for name in ("ca_fc1", "ca_b1", "ca_fc2", "ca_b2"):
        getattr(da, name).tensor.data[:] = 0
    x = _feat((4, 5, 5), 8)
    out = da.channel_attention(x)
    assert np.allclose(out.data, x.data / 2.0, atol=1e-6)


def test_channel_attention_zero_input():
    da = DetailAggregation(_factory(8), "da", 4, 2)
    assert not da.channel_attention(_zeros((4, 5, 5))).data.any()


def test_channel_attention_scales_strictly_inside_unit_interval():
    da = DetailAggregation(_factory(9), "da", 6, 3)
    x = _feat((6, 4, 4), 10)
    out = da.channel_attention(x)
    # recover the per-channel scale from any nonzero pixel
    scale = out.data.reshape(6, -1) / x.data.reshape(6, -1)
    for c in range(6):
        s = scale[c][np.abs(x.data.reshape(6, -1)[c]) > 1e-3]
        assert ((s > 0) & (s < 1)).all()


# -- full stage ------------------------------------------------------------------------

def test_forward_zero_combine_is_thermal_passthrough():
    f = _factory(11)
    da = DetailAggregation(f, "da", 4, 2)
    da.dw_w.tensor.data[:] = 0
    da.dw_b.tensor.data[:] = 0
    da.pw_w.tensor.data[:] = 0
    da.pw_b.tensor.data[:] = 0
    rgb, thermal = _feat((4, 6, 6), 12), _feat((4, 6, 6), 13)
    out = da.forward(rgb, thermal).data
    ref = da.channel_attention(thermal).data
    assert np.array_equal(out, ref)
    # and the rgb input is genuinely ignored on this path
    out2 = da.forward(_feat((4, 6, 6), 14), thermal).data
    assert np.array_equal(out, out2)


def test_forward_shape_preserved():
    da = DetailAggregation(_factory(12), "da", 8, 4)
    out = da.forward(_feat((8, 16, 16), 15), _feat((8, 16, 16), 16))
    assert out.shape == (8, 16, 16)


def test_forward_shape_mismatch():
    da = DetailAggregation(_factory(13), "da", 4, 2)
    with pytest.raises(ShapeError, match="differ"):
        da.forward(_feat((4, 6, 6), 0), _feat((4, 5, 5), 1))


def test_forward_wrong_width():
    da = DetailAggregation(_factory(14), "da", 4, 2)
    with pytest.raises(ShapeError, match="built for"):
        da.forward(_feat((6, 5, 5), 0), _feat((6, 5, 5), 1))
