"""Attention-residual upsample stream: stage algebra and the full walk."""

import numpy as np
import pytest

from cainet.arlm import ArlmStream, _StageParams, arlm_stage
from cainet.tensor import (ConfigError, ParamFactory, Tensor, bilinear_resize,
                           conv2d, no_grad, sigmoid)


def _factory(seed=0):
    return ParamFactory(np.random.default_rng(seed))


def _feat(shape, seed):
    return Tensor(np.random.default_rng(seed).standard_normal(shape)
                  .astype(np.float32))


def _stage(factory, width=4, level=3, classes=2):
    return _StageParams(factory, "stage", width, level, classes)


# -- single stage ----------------------------------------------------------------

def test_zero_gate_gives_half_attention():
    f = _factory(1)
    st = _stage(f)
    st.gate_w.tensor.data[:] = 0
    st.gate_b.tensor.data[:] = 0
    guide, level = _feat((4, 5, 5), 0), _feat((3, 5, 5), 1)
    refined, _, a = arlm_stage(st, guide, level)
    assert np.allclose(a.data, 0.5, atol=1e-7)
    from cainet.tensor import concat
    h = conv2d(concat([guide, level], axis=0), st.mix_w, st.mix_b)
    assert np.allclose(refined.data, guide.data + 0.5 * h.data, atol=1e-6)


def test_zero_mix_is_pure_residual():
    f = _factory(2)
    st = _stage(f)
    st.mix_w.tensor.data[:] = 0
    st.mix_b.tensor.data[:] = 0
    guide = _feat((4, 5, 5), 2)
    refined, _, a = arlm_stage(st, guide, _feat((3, 5, 5), 3))
    # h == 0 so the attention-gated term vanishes entirely.
    assert np.array_equal(refined.data, guide.data)
    assert np.allclose(a.data, sigmoid(Tensor(st.gate_b.tensor.data)).data,
                       atol=1e-7)


def test_prior_logits_enter_as_residual():
    f = _factory(3)
    st = _stage(f)
    guide, level = _feat((4, 6, 6), 4), _feat((3, 6, 6), 5)
    prior = _feat((2, 3, 3), 6)
    _, bare, _ = arlm_stage(st, guide, level)
    _, with_prior, _ = arlm_stage(st, guide, level, prior_logits=prior)
    lifted = bilinear_resize(prior, 6, 6)
    assert np.allclose(with_prior.data, bare.data + lifted.data, atol=1e-6)


def test_stage_aligns_to_larger_extents():
    st = _stage(_factory(4))
    refined, target, a = arlm_stage(st, _feat((4, 3, 3), 7),
                                    _feat((3, 6, 6), 8))
    assert refined.shape == (4, 6, 6)
    assert target.shape == (2, 6, 6)
    assert a.shape == (1, 6, 6)


def test_stage_exit_resize():
    st = _stage(_factory(5))
    refined, _, _ = arlm_stage(st, _feat((4, 4, 4), 9), _feat((3, 4, 4), 10),
                               exit_hw=(8, 8))
    assert refined.shape == (4, 8, 8)


def test_stage_channel_mismatch_rejected():
    st = _stage(_factory(6))
    with pytest.raises(ConfigError, match="concat channels"):
        arlm_stage(st, _feat((4, 4, 4), 0), _feat((5, 4, 4), 1))


def test_aux_map_strictly_inside_unit_interval():
    st = _stage(_factory(7))
    _, _, a = arlm_stage(st, _feat((4, 8, 8), 11), _feat((3, 8, 8), 12))
    assert (a.data > 0).all() and (a.data < 1).all()


# -- full stream -----------------------------------------------------------------

def _toy_stream(seed=0, widths=(32, 32, 24, 16, 8), gcm_c=16, k=3):
    return ArlmStream(_factory(seed), "arlm", gcm_c, widths, 32, k)


def _toy_inputs(widths=(32, 32, 24, 16, 8), gcm_c=16):
    c5, c4, c3, c2, c1 = widths
    return dict(g=_feat((gcm_c, 4, 4), 0), cr5=_feat((c5, 4, 4), 1),
                cr4=_feat((c4, 4, 4), 2), cr3=_feat((c3, 8, 8), 3),
                d2=_feat((c2, 16, 16), 4), d1=_feat((c1, 32, 32), 5))


def test_stream_resolution_ladder():
    outs = _toy_stream().run(label_hw=(32, 32), **_toy_inputs())
    assert outs.p1.shape == (3, 4, 4)          # 1/8 of the 32x32 labels
    assert outs.p2.shape == (3, 8, 8)          # 1/4
    assert outs.p3.shape == (3, 16, 16)        # 1/2
    assert outs.p4.shape == (3, 32, 32)        # full label extents
    assert outs.att1.shape == (1, 4, 4)
    assert outs.att2.shape == (1, 8, 8)
    assert outs.binary_map.shape == (1, 16, 16)
    assert outs.boundary_map.shape == (1, 32, 32)
    for m in (outs.att1, outs.att2, outs.binary_map, outs.boundary_map):
        assert (m.data > 0).all() and (m.data < 1).all()


def test_stream_telescopes_first_logits():
    stream = _toy_stream(seed=8)
    for st in stream.stages[1:]:
        st.target_w.tensor.data[:] = 0
        st.target_b.tensor.data[:] = 0
    with no_grad():
        outs = stream.run(label_hw=(32, 32), **_toy_inputs())
    # With the later heads silenced, each P is the lifted previous P, so
    # P4 is exactly P1 pushed through the upsample chain.
    lifted = bilinear_resize(outs.p1, 8, 8)
    lifted = bilinear_resize(lifted, 16, 16)
    lifted = bilinear_resize(lifted, 32, 32)
    assert np.array_equal(outs.p4.data, lifted.data)


def test_stream_zero_heads_zero_final_logits():
    stream = _toy_stream(seed=9)
    for st in stream.stages:
        st.target_w.tensor.data[:] = 0
        st.target_b.tensor.data[:] = 0
    with no_grad():
        outs = stream.run(label_hw=(32, 32), **_toy_inputs())
    assert not outs.p4.data.any()              # argmax would be uniform


def test_stream_merges_unequal_deep_widths():
    widths = (32, 24, 24, 16, 8)               # c4 != c5 forces a projection
    stream = _toy_stream(seed=10, widths=widths)
    assert stream.merge_w is not None
    outs = stream.run(label_hw=(32, 32), **_toy_inputs(widths=widths))
    assert outs.p4.shape == (3, 32, 32)


def test_stream_skips_merge_for_equal_widths():
    assert _toy_stream(seed=11).merge_w is None


def test_stream_coarse_slots_default_empty():
    outs = _toy_stream(seed=12).run(label_hw=(32, 32), **_toy_inputs())
    assert outs.s_rgb is None and outs.s_thermal is None
    assert outs.s_global is None
