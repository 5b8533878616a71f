"""Confusion-matrix metrics against hand values and set-based brute force."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cainet.metrics import (ConfusionMatrix, macc, miou, per_class_accuracy,
                            per_class_iou, report_text)
from cainet.tensor import ConfigError

label_maps = arrays(np.int64, (8, 8), elements=st.integers(0, 3))


def _brute_metrics(pred, true, k):
    """mAcc / mIoU from explicit per-class pixel sets, skip rule."""
    pred = np.asarray(pred).reshape(-1)
    true = np.asarray(true).reshape(-1)
    accs, ious = [], []
    for c in range(k):
        t = {i for i in range(true.size) if true[i] == c}
        p = {i for i in range(pred.size) if pred[i] == c}
        if t:
            accs.append(len(t & p) / len(t))
        if t | p:
            ious.append(len(t & p) / len(t | p))
    return (sum(accs) / len(accs) if accs else 0.0,
            sum(ious) / len(ious) if ious else 0.0)


def test_perfect_prediction_scores_one():
    labels = np.random.default_rng(0).integers(0, 3, (6, 6))
    cm = ConfusionMatrix(3).accumulate(labels, labels)
    assert macc(cm) == 1.0
    assert miou(cm) == 1.0


def test_hand_case_macc_five_sixths():
    cm = ConfusionMatrix(2, np.array([[2, 1], [0, 1]], dtype=np.int64))
    assert macc(cm) == pytest.approx(5.0 / 6.0, abs=1e-12)


def test_hand_case_miou_seven_twelfths():
    cm = ConfusionMatrix(2, np.array([[2, 1], [0, 1]], dtype=np.int64))
    assert miou(cm) == pytest.approx(7.0 / 12.0, abs=1e-12)


def test_accumulate_counts_by_true_then_pred():
    pred = np.array([[2, 2], [0, 1]])
    true = np.array([[2, 2], [1, 1]])
    cm = ConfusionMatrix(3).accumulate(pred, true)
    assert cm.counts[2, 2] == 2          # ten-pixel version of the same law
    assert cm.counts[1, 0] == 1
    assert cm.counts[1, 1] == 1
    assert cm.total == 4


def test_accumulate_empty_image_is_noop():
    cm = ConfusionMatrix(3)
    cm.accumulate(np.zeros((0,)), np.zeros((0,)))
    assert cm.total == 0


def test_accumulate_validates_range_and_size():
    cm = ConfusionMatrix(3)
    with pytest.raises(ValueError, match="prediction"):
        cm.accumulate(np.array([3]), np.array([0]))
    with pytest.raises(ValueError, match="truth"):
        cm.accumulate(np.array([0]), np.array([-1]))
    with pytest.raises(ValueError, match="differ in size"):
        cm.accumulate(np.zeros(3), np.zeros(4))


def test_merge_equals_sequential_accumulation():
    rng = np.random.default_rng(1)
    a_pred, a_true = rng.integers(0, 4, (2, 5, 5))
    b_pred, b_true = rng.integers(0, 4, (2, 5, 5))
    seq = ConfusionMatrix(4).accumulate(a_pred, a_true) \
                            .accumulate(b_pred, b_true)
    merged = ConfusionMatrix(4).accumulate(a_pred, a_true).merge(
        ConfusionMatrix(4).accumulate(b_pred, b_true))
    assert np.array_equal(seq.counts, merged.counts)
    assert macc(seq) == macc(merged)
    assert miou(seq) == miou(merged)


def test_merge_rejects_different_widths():
    with pytest.raises(ValueError, match="merge"):
        ConfusionMatrix(3).merge(ConfusionMatrix(4))


@settings(max_examples=40, deadline=None)
@given(label_maps, label_maps)
def test_metrics_match_set_brute_force(pred, true):
    cm = ConfusionMatrix(4).accumulate(pred, true)
    want_acc, want_iou = _brute_metrics(pred, true, 4)
    assert macc(cm) == pytest.approx(want_acc, abs=1e-12)
    assert miou(cm) == pytest.approx(want_iou, abs=1e-12)
    assert 0.0 <= macc(cm) <= 1.0
    assert 0.0 <= miou(cm) <= 1.0


@settings(max_examples=20, deadline=None)
@given(label_maps, label_maps, st.integers(0, 2 ** 31 - 1))
def test_metrics_ignore_pixel_order(pred, true, seed):
    perm = np.random.default_rng(seed).permutation(pred.size)
    cm1 = ConfusionMatrix(4).accumulate(pred, true)
    cm2 = ConfusionMatrix(4).accumulate(pred.reshape(-1)[perm],
                                        true.reshape(-1)[perm])
    assert np.array_equal(cm1.counts, cm2.counts)


def test_zero_class_rules():
    # class 2 never occurs in truth or prediction -> undefined everywhere
    cm = ConfusionMatrix(3, np.array([[4, 0, 0], [1, 1, 0], [0, 0, 0]],
                                     dtype=np.int64))
    acc = per_class_accuracy(cm)
    iou = per_class_iou(cm)
    assert np.isnan(acc[2]) and np.isnan(iou[2])
    assert macc(cm, "skip") == pytest.approx((1.0 + 0.5) / 2)
    assert macc(cm, "zero") == pytest.approx((1.0 + 0.5 + 0.0) / 3)
    assert miou(cm, "skip") == pytest.approx((4 / 5 + 1 / 2) / 2)
    assert miou(cm, "zero") == pytest.approx((4 / 5 + 1 / 2 + 0.0) / 3)
    with pytest.raises(ConfigError, match="zero-class"):
        macc(cm, "sometimes")


def test_iou_defined_for_prediction_only_class():
    # class 1 never true but predicted once: recall undefined, IoU = 0
    cm = ConfusionMatrix(2, np.array([[3, 1], [0, 0]], dtype=np.int64))
    assert np.isnan(per_class_accuracy(cm)[1])
    assert per_class_iou(cm)[1] == 0.0
    assert miou(cm, "skip") == pytest.approx((3 / 4 + 0.0) / 2)


def test_report_text_layout():
    cm = ConfusionMatrix(2, np.array([[2, 1], [0, 1]], dtype=np.int64))
    text = report_text(cm, class_names=["background", "object"])
    lines = text.splitlines()
    assert lines[0].split() == ["class", "acc", "iou"]
    assert lines[1].startswith("background")
    assert "0.6667" in lines[1]
    assert lines[-2] == f"macc={5 / 6:.6f}"
    assert lines[-1] == f"miou={7 / 12:.6f}"
