"""Global context modeling: aggregation, affinity, relationship mixing."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cainet.gcm import (GCM, aggregate_complementary, channel_affinity,
                        global_context, relationship_modeling)
from cainet.tensor import ParamFactory, ShapeError, Tensor, no_grad


def _factory(seed=0):
    return ParamFactory(np.random.default_rng(seed))


def _t(data):
    return Tensor(np.asarray(data, dtype=np.float32))


def _feat(shape, seed):
    return Tensor(np.random.default_rng(seed).standard_normal(shape)
                  .astype(np.float32))


# -- aggregation -----------------------------------------------------------------

def test_aggregate_toy_shapes():
    crc = aggregate_complementary(_feat((24, 8, 8), 0), _feat((32, 4, 4), 1),
                                  _feat((32, 4, 4), 2))
    assert crc.shape == (88, 4, 4)


def test_aggregate_zero_inputs():
    crc = aggregate_complementary(_t(np.zeros((4, 8, 8))),
                                  _t(np.zeros((6, 4, 4))),
                                  _t(np.zeros((6, 4, 4))))
    assert crc.shape == (16, 4, 4)
    assert not crc.data.any()


def test_aggregate_follows_middle_extents():
    crc = aggregate_complementary(_feat((2, 12, 12), 0), _feat((2, 6, 6), 1),
                                  _feat((2, 6, 6), 2))
    assert crc.shape[1:] == (6, 6)


def test_aggregate_rejects_mismatched_deep_stages():
    with pytest.raises(ShapeError, match="share extents"):
        aggregate_complementary(_feat((2, 8, 8), 0), _feat((2, 4, 4), 1),
                                _feat((2, 2, 2), 2))


def test_aggregate_preserves_channel_order():
    cr3 = _t(np.full((1, 4, 4), 3.0))
    cr4 = _t(np.full((1, 4, 4), 4.0))
    cr5 = _t(np.full((1, 4, 4), 5.0))
    crc = aggregate_complementary(cr3, cr4, cr5)
    assert np.allclose(crc.data[0], 3.0)   # constant maps survive resizing
    assert np.allclose(crc.data[1], 4.0)
    assert np.allclose(crc.data[2], 5.0)


# -- channel affinity ---------------------------------------------------------------

def test_affinity_zero_input():
    f = _factory()
    r1 = f.conv_weight("r1", 3, 5, 1)
    r2 = f.conv_weight("r2", 3, 5, 1)
    a = channel_affinity(_t(np.zeros((5, 4, 4))), r1, r2)
    assert a.shape == (3, 3)
    assert not a.data.any()


def test_affinity_single_channel_dot_product():
    f = _factory()
    r1 = f.conv_weight("r1", 1, 2, 1)
    r2 = f.conv_weight("r2", 1, 2, 1)
    crc = _feat((2, 3, 3), 5)
    a = channel_affinity(crc, r1, r2)
    p = np.tensordot(r1.tensor.data[:, :, 0, 0], crc.data, axes=1).reshape(-1)
    q = np.tensordot(r2.tensor.data[:, :, 0, 0], crc.data, axes=1).reshape(-1)
    assert a.data[0, 0] == pytest.approx(float(p @ q), rel=1e-5)


@pytest.mark.parametrize("hw", [(1, 1), (2, 5), (4, 4)])
def test_affinity_shape_contract(hw):
    f = _factory()
    r1 = f.conv_weight("r1", 4, 6, 1)
    r2 = f.conv_weight("r2", 4, 6, 1)
    a = channel_affinity(_feat((6,) + hw, 0), r1, r2)
    assert a.shape == (4, 4)


# -- relationship modeling -------------------------------------------------------------

def test_rm_uniform_input_identity_mix():
    # Constant affinity: row softmax is uniform 1/c, the global softmax is
    # uniform 1/c^2, and an identity channel mix keeps both terms intact.
    c = 4
    eye = Tensor(np.eye(c, dtype=np.float32))
    rm = relationship_modeling(_t(np.full((c, c), 2.5)), eye)
    expected = np.full((c, c), 1.0 / c + 1.0 / c ** 2)
    assert np.allclose(rm.data, expected, atol=1e-6)


def test_rm_global_term_mass():
    f = _factory(2)
    c = 5
    conv1d = f.matrix("m", c, c)[0].tensor
    a_data = np.random.default_rng(3).standard_normal((c, c)) * 4
    rm = relationship_modeling(_t(a_data), conv1d)
    rows = np.exp(a_data - a_data.max(axis=1, keepdims=True))
    rows = rows / rows.sum(axis=1, keepdims=True)
    flat = np.exp(a_data - a_data.max())
    global_term = flat / flat.sum()
    assert global_term.sum() == pytest.approx(1.0, abs=1e-9)
    expected = conv1d.data @ rows.astype(np.float32) + global_term
    assert np.allclose(rm.data, expected, atol=1e-5)


def test_rm_row_softmax_rows_sum_to_one():
    c = 6
    eye = Tensor(np.eye(c, dtype=np.float32))
    a_data = np.random.default_rng(4).standard_normal((c, c)) * 3
    rm = relationship_modeling(_t(a_data), eye)
    flat = np.exp(a_data - a_data.max())
    global_term = flat / flat.sum()
    rows = rm.data - global_term          # identity mix → rows term alone
    assert np.allclose(rows.sum(axis=1), 1.0, atol=1e-5)


# -- global context ----------------------------------------------------------------------

def test_global_context_identity_passthrough():
    f = _factory()
    c = 3
    reduce3 = f.conv_weight("r3", c, 5, 1)
    eye = Tensor(np.eye(c, dtype=np.float32))
    crc = _feat((5, 4, 4), 6)
    g = global_context(crc, eye, reduce3, eye)
    v = np.einsum("oi,ihw->ohw", reduce3.tensor.data[:, :, 0, 0], crc.data)
    assert g.shape == (c, 4, 4)
    assert np.allclose(g.data, v, atol=1e-5)


def test_global_context_zero_rm():
    f = _factory()
    c = 3
    reduce3 = f.conv_weight("r3", c, 5, 1)
    conv1d_b = f.matrix("b", c, c)[0].tensor
    g = global_context(_feat((5, 4, 4), 7), _t(np.zeros((c, c))), reduce3,
                       conv1d_b)
    assert not g.data.any()


def test_global_context_hand_two_channel():
    # c=2, D=1: g = (conv1d_b @ rm) @ v with v = reduce3 applied at the
    # single position.
    f = _factory()
    reduce3 = f.conv_weight("r3", 2, 2, 1)
    reduce3.tensor.data[:] = np.eye(2, dtype=np.float32).reshape(2, 2, 1, 1)
    rm = _t([[1.0, 2.0], [3.0, 4.0]])
    conv1d_b = _t([[1.0, 0.0], [1.0, 1.0]])
    crc = _t(np.array([5.0, 7.0]).reshape(2, 1, 1))
    g = global_context(crc, rm, reduce3, conv1d_b)
    mixed = conv1d_b.data @ rm.data                     # [[1,2],[4,6]]
    expected = (mixed @ np.array([[5.0], [7.0]])).reshape(2, 1, 1)
    assert np.allclose(g.data, expected, atol=1e-5)    # [[19],[62]]


# -- module forward -----------------------------------------------------------------------

def test_gcm_forward_shape_and_finiteness():
    mod = GCM(_factory(), "gcm", 10, 4)
    g = mod.forward(_feat((10, 4, 4), 8))
    assert g.shape == (4, 4, 4)
    assert np.isfinite(g.data).all()


def test_gcm_forward_rejects_wrong_channels():
    mod = GCM(_factory(), "gcm", 10, 4)
    with pytest.raises(ShapeError, match="aggregated"):
        mod.forward(_feat((12, 4, 4), 9))


@settings(max_examples=15, deadline=None)
@given(scale=st.floats(min_value=0.1, max_value=10.0), seed=st.integers(0, 99))
def test_global_softmax_mass_invariant(scale, seed):
    c = 4
    eye = Tensor(np.eye(c, dtype=np.float32))
    a_data = (np.random.default_rng(seed).standard_normal((c, c))
              * scale).astype(np.float32)
    with no_grad():
        rm = relationship_modeling(_t(a_data), eye)
    rows = np.exp(a_data.astype(np.float64)
                  - a_data.max(axis=1, keepdims=True))
    rows = rows / rows.sum(axis=1, keepdims=True)
    global_term = rm.data - rows
    assert global_term.sum() == pytest.approx(1.0, abs=1e-5)
