"""Finite-difference verification of every composite forward.

Each registered composite builds a tiny random instance, runs the taped
backward for analytic gradients, then compares against central finite
differences over every parameter AND every differentiable input leaf.
Checks run under the float64 precision switch: at float32, an eps of 1e-3
leaves central differences dominated by rounding noise, so the harness
runs the identical graph in double precision while the shipped model math
stays float32.

Relative error per composite: ||analytic - fd||_inf over the largest of
the two gradient magnitudes (guarded for all-zero gradients).
"""

from dataclasses import dataclass

import numpy as np

from . import losses, targets
from .arlm import _StageParams, arlm_stage
from .backbone import BackboneConfig, CoarseDecoder, Encoder
from .cacr import CACR
from .detail import DetailAggregation
from .gcm import GCM, aggregate_complementary
from .tensor import (ParamFactory, Tensor, backward, bilinear_resize,
                     finite_difference_gradient, no_grad, precision, sum_all,
                     tape)

EPS = 1e-5
TOLERANCE = 1e-3
TIE_GAP = 1e-4


@dataclass
class CheckResult:
    module: str
    max_rel_error: float
    passed: bool
    worst_leaf: str = ""

    def line(self):
        status = "pass" if self.passed else "FAIL"
        return (f"{status} {self.module:<28} max_rel_err={self.max_rel_error:.3e}"
                + (f" worst={self.worst_leaf}" if not self.passed else ""))


def _leaf(rng, shape, name):
    t = Tensor(rng.standard_normal(shape) * 0.5, requires_grad=True)
    return name, t


def _randomize_params(factory, rng):
    """Move every parameter (biases included) to a generic point.

    Freshly initialized biases are exactly zero; together with dead ReLU
    paths that parks pre-activations exactly on activation kinks, where the
    one-sided analytic subgradient and a straddling central difference
    legitimately disagree. Gradient checks must run at generic positions.
    """
    for p in factory.registry.values():
        p.tensor.data = (rng.standard_normal(p.tensor.data.shape) * 0.3
                         ).astype(p.tensor.data.dtype)


def _sort_gaps_ok(logits_data, labels, gap=TIE_GAP):
    """True when no per-class sorted-error pair ties within ``gap``.

    The Jaccard surrogate is piecewise linear with kinks where two sorted
    errors tie; finite differences across a kink measure the average of two
    pieces, so tied instances are re-rolled rather than checked.
    """
    lab = np.asarray(labels).reshape(-1)
    z = logits_data.reshape(logits_data.shape[0], -1).astype(np.float64)
    z = z - z.max(axis=0, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=0, keepdims=True)
    for c in np.unique(lab):
        fg = (lab == c).astype(np.float64)
        errors = fg + (1.0 - 2.0 * fg) * p[c]
        s = np.sort(errors)
        if s.size > 1 and np.diff(s).min() < gap:
            return False
    return True


def _rel_error(analytic, fd):
    scale = max(np.abs(analytic).max(initial=0.0),
                np.abs(fd).max(initial=0.0), 1e-8)
    return float(np.abs(analytic - fd).max(initial=0.0) / scale)


def _check_composite(build, seed, corrupt=False):
    """build(rng) -> (loss_fn, leaves) with leaves as (name, Tensor|Parameter)."""
    rng = np.random.default_rng(seed)
    loss_fn, leaves = build(rng)
    tape().clear()
    loss = loss_fn()
    backward(loss)
    grads = []
    for name, leaf in leaves:
        t = leaf.tensor if hasattr(leaf, "tensor") else leaf
        grads.append((name, t, t.grad_array().copy()))
    if corrupt and grads:
        grads[0][2].reshape(-1)[0] += 0.05
    worst = 0.0
    worst_leaf = ""
    def scalar_loss():
        with no_grad():
            return float(loss_fn().data)
    for name, t, analytic in grads:
        fd = finite_difference_gradient(scalar_loss, t, EPS)
        err = _rel_error(analytic.astype(np.float64), fd)
        if err > worst:
            worst, worst_leaf = err, name
    return worst, worst_leaf


# ---------------------------------------------------------------------------
# composite builders (tiny shapes; float64 under the precision switch)


def _build_cacr(rng):
    factory = ParamFactory(rng)
    mod = CACR(factory, "cacr.stage3", 4)
    _randomize_params(factory, rng)
    _, xr = _leaf(rng, (4, 3, 3), "f_rgb")
    _, xt = _leaf(rng, (4, 3, 3), "f_thermal")
    leaves = [("f_rgb", xr), ("f_thermal", xt)] + \
        [(n, p) for n, p in factory.registry.items()]
    return lambda: sum_all(mod.forward(xr, xt)), leaves


def _build_gcm(rng):
    factory = ParamFactory(rng)
    mod = GCM(factory, "gcm", 10, 4)
    _randomize_params(factory, rng)
    _, cr3 = _leaf(rng, (4, 4, 4), "cr3")
    _, cr4 = _leaf(rng, (3, 2, 2), "cr4")
    _, cr5 = _leaf(rng, (3, 2, 2), "cr5")
    leaves = [("cr3", cr3), ("cr4", cr4), ("cr5", cr5)] + \
        [(n, p) for n, p in factory.registry.items()]

    def loss():
        return sum_all(mod.forward(aggregate_complementary(cr3, cr4, cr5)))
    return loss, leaves


def _build_da(rng):
    factory = ParamFactory(rng)
    mod = DetailAggregation(factory, "da.stage1", 4, 2)
    _randomize_params(factory, rng)
    _, xr = _leaf(rng, (4, 4, 4), "f_rgb")
    _, xt = _leaf(rng, (4, 4, 4), "f_thermal")
    leaves = [("f_rgb", xr), ("f_thermal", xt)] + \
        [(n, p) for n, p in factory.registry.items()]
    return lambda: sum_all(mod.forward(xr, xt)), leaves


def _build_arlm_stage(rng):
    factory = ParamFactory(rng)
    params = _StageParams(factory, "arlm.stage2", 4, 3, 3)
    _randomize_params(factory, rng)
    _, guide = _leaf(rng, (4, 3, 3), "guide")
    _, level = _leaf(rng, (3, 3, 3), "level")
    _, prior = _leaf(rng, (3, 3, 3), "prior")
    leaves = [("guide", guide), ("level", level), ("prior", prior)] + \
        [(n, p) for n, p in factory.registry.items()]

    def loss():
        refined, target, aux = arlm_stage(params, guide, level, prior, (6, 6))
        return sum_all(refined) + sum_all(target) + sum_all(aux)
    return loss, leaves


def _build_backbone(rng):
    cfg = BackboneConfig(stem_channels=3, stage_channels=(3, 4, 4, 4, 4),
                         stage_strides=(1, 2, 4, 8, 8),
                         blocks_per_stage=(1, 1, 1, 1, 1), expansion=1,
                         num_classes=2)
    factory = ParamFactory(rng)
    enc = Encoder(factory, "encoder.rgb", cfg, 3, "rgb")
    dec = CoarseDecoder(factory, "decoder.rgb", 4, 2)
    _randomize_params(factory, rng)
    _, img = _leaf(rng, (3, 8, 8), "image")
    labels = rng.integers(0, 2, (8, 8))
    leaves = [("image", img)] + [(n, p) for n, p in factory.registry.items()]

    def loss():
        return losses.cross_entropy(dec.decode(enc.encode(img).f5, (8, 8)),
                                    labels)
    return loss, leaves


def _build_weighted_ce(rng):
    _, logits = _leaf(rng, (3, 4, 4), "logits")
    labels = rng.integers(0, 3, (4, 4))
    w = rng.uniform(0.5, 2.0, 3)
    return lambda: losses.weighted_cross_entropy(logits, labels, w), \
        [("logits", logits)]


def _build_weighted_bce(rng):
    # keep raw predictions inside the clamp window so FD stays smooth
    pred = Tensor(rng.uniform(0.05, 0.95, (1, 5, 5)), requires_grad=True)
    target = rng.integers(0, 2, (5, 5))
    return lambda: losses.weighted_binary_cross_entropy(pred, target, 1.3,
                                                        2.1), \
        [("pred", pred)]


def _build_attention_loss(rng):
    _, pred = _leaf(rng, (1, 5, 5), "pred")
    q = rng.uniform(0.0, 1.0, (5, 5))
    return lambda: losses.attention_loss(pred, q), [("pred", pred)]


def _build_lovasz(rng):
    labels = rng.integers(0, 3, (4, 4))
    while True:
        _, logits = _leaf(rng, (3, 4, 4), "logits")
        if _sort_gaps_ok(logits.data, labels):
            break
    return lambda: losses.lovasz_softmax(logits, labels), \
        [("logits", logits)]


def _build_total_loss(rng):
    from .arlm import StreamOutputs
    hw = (4, 4)
    labels = rng.integers(0, 3, hw)
    aux = targets.aux_targets(labels)
    lw = losses.LossWeights(
        seg=losses.enet_class_weights(np.full(3, 1 / 3)),
        binary=losses.enet_class_weights(np.array([0.5, 0.5])),
        boundary=losses.enet_class_weights(np.array([0.9, 0.1])))
    names = ("p1", "p2", "p3", "p4", "att1", "att2", "binary_map",
             "boundary_map", "s_rgb", "s_thermal", "s_global")
    leaves = []
    built = {}
    for name in names:
        c = 1 if ("att" in name or "map" in name) else 3
        while True:
            t = Tensor(rng.standard_normal((c, 4, 4)) * 0.5,
                       requires_grad=True)
            if name not in ("p1", "p2") or _sort_gaps_ok(t.data, labels):
                break                  # p1/p2 feed the sort-based surrogate
        built[name] = t                # 1-channel leaves get squashed below
        leaves.append((name, t))

    def loss():
        from .tensor import sigmoid
        outs = StreamOutputs(
            p1=built["p1"], p2=built["p2"], p3=built["p3"], p4=built["p4"],
            att1=sigmoid(built["att1"]), att2=sigmoid(built["att2"]),
            binary_map=sigmoid(built["binary_map"]),
            boundary_map=sigmoid(built["boundary_map"]),
            s_rgb=built["s_rgb"], s_thermal=built["s_thermal"],
            s_global=built["s_global"])
        _, tot = losses.total_loss(outs, labels, aux, lw)
        return tot
    return loss, leaves


REGISTRY = (
    ("cacr_forward", _build_cacr),
    ("gcm_forward", _build_gcm),
    ("da_forward", _build_da),
    ("arlm_stage", _build_arlm_stage),
    ("backbone_decode", _build_backbone),
    ("weighted_cross_entropy", _build_weighted_ce),
    ("weighted_binary_cross_entropy", _build_weighted_bce),
    ("attention_loss", _build_attention_loss),
    ("lovasz_softmax", _build_lovasz),
    ("total_loss", _build_total_loss),
)


def gradcheck_report(seeds=(0, 1, 2, 3, 4), corrupt=None):
    """One CheckResult per registered composite, worst seed kept."""
    results = []
    with precision(np.float64):
        for name, build in REGISTRY:
            worst = 0.0
            worst_leaf = ""
            for seed in seeds:
                err, leaf = _check_composite(
                    build, seed, corrupt=(corrupt == name))
                if err > worst:
                    worst, worst_leaf = err, leaf
            results.append(CheckResult(module=name, max_rel_error=worst,
                                       passed=worst < TOLERANCE,
                                       worst_leaf=worst_leaf))
    return results
