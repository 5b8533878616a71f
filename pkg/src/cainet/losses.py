"""Training objectives: frequency-balanced CE/BCE, the Jaccard surrogate,
the attention-map loss, and the combined multi-head total.

Class balancing follows the inverse-log rule w = 1/ln(1.02 + p) over pixel
proportions p. The attention loss is mean squared error minus a linear
correlation coefficient (population variance, epsilon-guarded so constant
maps degrade to plain MSE instead of dividing by zero). The Jaccard
surrogate sorts per-class prediction errors and dots them with the
discrete gradient of the Jaccard set function's convex extension.

The categorical and binary cross-entropies are tape primitives (forward in
float64 with a 1e-7 clamp, hand-written adjoints); everything else is
composed from tensor ops and differentiated automatically.
"""

from dataclasses import dataclass

import numpy as np

from .tensor import (ConfigError, ShapeError, Tensor, _accum, _result, _t,
                     add, bilinear_resize, div, mean_all, mul, permute1d,
                     reshape, softmax_axis, sqrt, sub, sum_all, take_axis0,
                     tape)

CLAMP = 1e-7


@dataclass
class ClassWeights:
    """Per-class loss weights and the pixel proportions they came from."""
    w: np.ndarray
    source_frequencies: np.ndarray


def enet_class_weights(freqs) -> ClassWeights:
    freqs = np.asarray(freqs, dtype=np.float64)
    if (freqs < 0).any():
        raise ConfigError("class frequencies must be non-negative")
    if freqs.sum() > 1.0 + 1e-6:
        raise ConfigError(f"class frequencies sum to {freqs.sum():.6f} > 1")
    return ClassWeights(w=1.0 / np.log(1.02 + freqs),
                        source_frequencies=freqs)


def _label_guard(labels, num_classes):
    bad = (labels < 0) | (labels >= num_classes)
    if bad.any():
        idx = np.argwhere(bad)[0]
        raise ValueError(
            f"label {labels[tuple(idx)]} at pixel {tuple(int(v) for v in idx)} "
            f"out of range [0, {num_classes - 1}]")


def weighted_cross_entropy(logits, labels, weights):
    """-(1/N) * sum_i w[y_i] * log softmax(logits)_i[y_i], clamped at 1e-7."""
    logits = _t(logits)
    k1 = logits.shape[0]
    labels = np.asarray(labels)
    _label_guard(labels, k1)
    lab = labels.reshape(-1)
    z = logits.data.reshape(k1, -1).astype(np.float64)     # (K, N)
    n = z.shape[1]
    if lab.size != n:
        raise ShapeError(f"labels {labels.shape} do not match logits "
                         f"{logits.shape}")
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.size != k1:
        raise ShapeError(f"need {k1} class weights, got {w.size}")
    m = z.max(axis=0)
    lse = m + np.log(np.exp(z - m).sum(axis=0))            # (N,)
    logp = z[lab, np.arange(n)] - lse
    clamped = logp < np.log(CLAMP)
    wi = w[lab]
    val = -(wi * np.maximum(logp, np.log(CLAMP))).sum() / n
    out, needs = _result(np.asarray(val, dtype=logits.data.dtype), logits)
    if needs:
        def bw():
            g = out.grad
            if g is None:
                return
            probs = np.exp(z - lse)                        # (K, N) softmax
            gz = probs * wi
            gz[lab, np.arange(n)] -= wi
            gz[:, clamped] = 0.0
            gz *= float(g) / n
            _accum(logits, gz.astype(logits.data.dtype).reshape(logits.shape))
        tape().record(bw)
    return out


def cross_entropy(logits, labels):
    """Unweighted CE — identical to all-ones class weights."""
    return weighted_cross_entropy(logits, labels,
                                  np.ones(_t(logits).shape[0]))


def weighted_binary_cross_entropy(pred, target, w0, w1):
    """BCE with weight w1 on positive pixels and w0 on negatives."""
    pred = _t(pred)
    t = np.asarray(target, dtype=np.float64).reshape(-1)
    p_raw = pred.data.reshape(-1).astype(np.float64)
    if t.size != p_raw.size:
        raise ShapeError(f"target size {t.size} does not match prediction "
                         f"{pred.shape}")
    p = np.clip(p_raw, CLAMP, 1.0 - CLAMP)
    wmap = np.where(t == 1.0, float(w1), float(w0))
    val = -(wmap * (t * np.log(p) + (1.0 - t) * np.log1p(-p))).sum() / t.size
    out, needs = _result(np.asarray(val, dtype=pred.data.dtype), pred)
    if needs:
        inside = (p_raw > CLAMP) & (p_raw < 1.0 - CLAMP)
        def bw():
            g = out.grad
            if g is None:
                return
            gp = -(wmap * (t / p - (1.0 - t) / (1.0 - p))) / t.size
            gp *= inside * float(g)
            _accum(pred, gp.astype(pred.data.dtype).reshape(pred.shape))
        tape().record(bw)
    return out


def attention_loss(pred, q, eps=1e-8):
    """MSE minus the linear correlation coefficient between pred and q."""
    pred = _t(pred)
    qa = np.asarray(q, dtype=pred.data.dtype)
    if pred.data.size != qa.size:
        raise ShapeError(f"attention maps differ: {pred.shape} vs {qa.shape}")
    n = qa.size
    p = reshape(pred, (n,))
    qf = qa.reshape(n)
    d = sub(p, Tensor(qf))
    mse = mean_all(mul(d, d))
    pc = sub(p, mean_all(p))                       # centered prediction
    qc = qf - qf.mean(dtype=np.float64)
    cov = mean_all(mul(pc, Tensor(qc)))
    var_p = mean_all(mul(pc, pc))
    sd_q = float(np.sqrt((qc.astype(np.float64) ** 2).mean()))
    denom = add(mul(sqrt(var_p), sd_q), eps)
    return sub(mse, div(cov, denom))


def _jaccard_grad(fg_sorted):
    """Discrete gradient of the Jaccard-loss extension along sorted errors."""
    fg = fg_sorted.astype(np.float64)
    gts = fg.sum()
    intersection = gts - np.cumsum(fg)
    union = gts + np.cumsum(1.0 - fg)
    jaccard = 1.0 - intersection / union
    if fg.size > 1:
        jaccard[1:] = jaccard[1:] - jaccard[:-1]
    return jaccard


def lovasz_softmax(logits, labels, classes="present"):
    """Jaccard-surrogate loss over softmax probabilities.

    Per class: error vector |fg - p_c|, sorted descending, dotted with the
    Jaccard-extension gradient; averaged over the chosen class set.
    """
    logits = _t(logits)
    k1 = logits.shape[0]
    labels = np.asarray(labels)
    _label_guard(labels, k1)
    lab = labels.reshape(-1)
    n = lab.size
    probs = reshape(softmax_axis(logits, axis=0), (k1, n))
    if classes == "present":
        class_ids = np.unique(lab)
    elif classes == "all":
        class_ids = np.arange(k1)
    else:
        raise ConfigError(f"unknown class-set rule {classes!r}")
    terms = []
    for c in class_ids:
        fg = (lab == c).astype(logits.data.dtype)
        pc = take_axis0(probs, int(c))                        # (N,)
        # |fg - p| == fg + (1 - 2 fg) * p for fg in {0,1}
        errors = add(Tensor(fg), mul(pc, Tensor(1.0 - 2.0 * fg)))
        order = np.argsort(-errors.data, kind="stable")
        grad = _jaccard_grad(fg[order]).astype(logits.data.dtype)
        terms.append(sum_all(mul(permute1d(errors, order), Tensor(grad))))
    total = terms[0]
    for t in terms[1:]:
        total = add(total, t)
    return mul(total, 1.0 / len(terms))


@dataclass
class LossToggles:
    target: bool = True
    att: bool = True
    binary: bool = True
    boundary: bool = True
    decoder: bool = True


@dataclass
class LossWeights:
    """Balanced weights for the segmentation, binary, and boundary heads."""
    seg: ClassWeights
    binary: ClassWeights       # 2 entries: background, foreground
    boundary: ClassWeights     # 2 entries: off-edge, on-edge


@dataclass
class LossReport:
    l_target: float = 0.0
    l_att1: float = 0.0
    l_att2: float = 0.0
    l_binary: float = 0.0
    l_boundary: float = 0.0
    l_decoder: float = 0.0
    l_total: float = 0.0

    def log_line(self, step):
        return (f"step={step} l_total={self.l_total:.6f} "
                f"l_target={self.l_target:.6f} l_att1={self.l_att1:.6f} "
                f"l_att2={self.l_att2:.6f} l_binary={self.l_binary:.6f} "
                f"l_boundary={self.l_boundary:.6f} "
                f"l_decoder={self.l_decoder:.6f}")


def total_loss(outputs, labels, aux, weights: LossWeights,
               toggles: LossToggles = None, lovasz_classes="present"):
    """Combine all supervised heads; returns (LossReport, scalar Tensor).

    Every map is bilinearly resized to label extents before its loss;
    targets are used as-is.
    """
    toggles = toggles or LossToggles()
    hh, ww = labels.shape
    parts = []
    report = LossReport()

    def at_labels(t):
        return bilinear_resize(t, hh, ww)

    if toggles.target:
        seg = add(
            add(lovasz_softmax(at_labels(outputs.p1), labels, lovasz_classes),
                lovasz_softmax(at_labels(outputs.p2), labels, lovasz_classes)),
            add(weighted_cross_entropy(at_labels(outputs.p3), labels,
                                       weights.seg.w),
                weighted_cross_entropy(at_labels(outputs.p4), labels,
                                       weights.seg.w)))
        report.l_target = seg.item()
        parts.append(seg)
    if toggles.att:
        a1 = attention_loss(at_labels(outputs.att1), aux.attention_q)
        a2 = attention_loss(at_labels(outputs.att2), aux.attention_q)
        report.l_att1 = a1.item()
        report.l_att2 = a2.item()
        parts.extend([a1, a2])
    if toggles.binary:
        lb = weighted_binary_cross_entropy(
            at_labels(outputs.binary_map), aux.binary,
            weights.binary.w[0], weights.binary.w[1])
        report.l_binary = lb.item()
        parts.append(lb)
    if toggles.boundary:
        le = weighted_binary_cross_entropy(
            at_labels(outputs.boundary_map), aux.boundary,
            weights.boundary.w[0], weights.boundary.w[1])
        report.l_boundary = le.item()
        parts.append(le)
    if toggles.decoder:
        dec = None
        for s in (outputs.s_rgb, outputs.s_thermal, outputs.s_global):
            if s is None:
                continue
            term = cross_entropy(at_labels(s), labels)
            dec = term if dec is None else add(dec, term)
        if dec is not None:
            report.l_decoder = dec.item()
            parts.append(dec)

    if not parts:
        raise ConfigError("all loss components disabled")
    total = parts[0]
    for p in parts[1:]:
        total = add(total, p)
    report.l_total = total.item()
    return report, total
