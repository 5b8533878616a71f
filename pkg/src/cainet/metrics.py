"""Confusion-matrix accumulation and the two evaluation metrics.

mAcc is the mean per-class recall; mIoU the mean per-class intersection
over union. Classes whose denominator is zero (no true pixels; for IoU
additionally no predictions) are skipped from the mean by default and the
effective class count shrinks — the ``zero`` mode counts them as 0.0
instead. Per-class tables always display 0.0 for undefined entries.

The matrix is a mergeable accumulator: accumulate per shard, sum, score.
"""

from dataclasses import dataclass, field

import numpy as np

from .tensor import ConfigError


@dataclass
class ConfusionMatrix:
    num_classes: int
    counts: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros((self.num_classes, self.num_classes),
                                   dtype=np.int64)

    def accumulate(self, pred_labels, true_labels):
        pred = np.asarray(pred_labels).reshape(-1)
        true = np.asarray(true_labels).reshape(-1)
        if pred.size != true.size:
            raise ValueError(f"prediction and truth differ in size: "
                             f"{pred.size} vs {true.size}")
        k = self.num_classes
        for name, arr in (("prediction", pred), ("truth", true)):
            if arr.size and (arr.min() < 0 or arr.max() >= k):
                raise ValueError(f"{name} labels outside [0, {k - 1}]")
        if pred.size:
            flat = true.astype(np.int64) * k + pred.astype(np.int64)
            self.counts += np.bincount(flat, minlength=k * k).reshape(k, k)
        return self

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.num_classes != self.num_classes:
            raise ValueError("cannot merge matrices of different class counts")
        return ConfusionMatrix(self.num_classes, self.counts + other.counts)

    @property
    def total(self):
        return int(self.counts.sum())


def per_class_accuracy(cm: ConfusionMatrix):
    """Recall per class; nan where the class has no true pixels."""
    diag = np.diag(cm.counts).astype(np.float64)
    row = cm.counts.sum(axis=1).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(row > 0, diag / row, np.nan)


def per_class_iou(cm: ConfusionMatrix):
    """IoU per class; nan where the class never occurs in truth or prediction."""
    diag = np.diag(cm.counts).astype(np.float64)
    row = cm.counts.sum(axis=1).astype(np.float64)
    col = cm.counts.sum(axis=0).astype(np.float64)
    denom = row + col - diag
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(denom > 0, diag / denom, np.nan)


def _mean_with_rule(values, zero_class):
    if zero_class == "skip":
        kept = values[~np.isnan(values)]
        return float(kept.mean()) if kept.size else 0.0
    if zero_class == "zero":
        return float(np.nan_to_num(values, nan=0.0).mean())
    raise ConfigError(f"unknown zero-class rule {zero_class!r}")


def macc(cm: ConfusionMatrix, zero_class="skip"):
    return _mean_with_rule(per_class_accuracy(cm), zero_class)


def miou(cm: ConfusionMatrix, zero_class="skip"):
    return _mean_with_rule(per_class_iou(cm), zero_class)


def report_text(cm: ConfusionMatrix, class_names=None, zero_class="skip"):
    """Fixed-width per-class table plus machine-readable key=value lines."""
    acc = per_class_accuracy(cm)
    iou = per_class_iou(cm)
    names = class_names or [f"class{i}" for i in range(cm.num_classes)]
    lines = [f"{'class':<16}{'acc':>8}{'iou':>8}"]
    for i in range(cm.num_classes):
        a = 0.0 if np.isnan(acc[i]) else acc[i]
        j = 0.0 if np.isnan(iou[i]) else iou[i]
        lines.append(f"{names[i]:<16}{a:>8.4f}{j:>8.4f}")
    lines.append(f"macc={macc(cm, zero_class):.6f}")
    lines.append(f"miou={miou(cm, zero_class):.6f}")
    return "\n".join(lines)
