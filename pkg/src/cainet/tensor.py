"""Dense tensors with reverse-mode automatic differentiation.

Values are float32 by default; reductions (matrix products, convolution
inner sums, big sums) accumulate in float64 before casting back, which is
what keeps the numeric oracles in the test suite tight. A module-wide dtype
switch exists so verification harnesses can rerun the identical graph at
float64, where central finite differences are meaningful.

Gradient bookkeeping uses a single global tape: every op that participates
in differentiation appends one adjoint closure, and ``backward`` replays the
tape in exact reverse order. Execution order *is* topological order, so by
the time a producer's closure runs, every consumer has already deposited its
contribution into ``out.grad``. A ``grad`` of ``None`` reads as "all zeros":
branches that never influenced the loss simply skip their adjoints.

One training step is single-writer. Frozen parameters may be shared by
concurrent readers; inference wrapped in ``no_grad`` records nothing.
"""

import contextlib
import functools
import os

import numpy as np


class ShapeError(ValueError):
    """Operand extents are incompatible for the requested op."""


class ConfigError(ValueError):
    """A structural knob (kernel size, stride plan, ...) is invalid."""


_DEFAULT_DTYPE = np.float32
_DEBUG_FINITE = os.environ.get("CAINET_DEBUG", "") not in ("", "0")


def default_dtype():
    return _DEFAULT_DTYPE


def set_default_dtype(dtype):
    global _DEFAULT_DTYPE
    dtype = np.dtype(dtype).type
    if dtype not in (np.float32, np.float64):
        raise ConfigError(f"unsupported default dtype {dtype}")
    _DEFAULT_DTYPE = dtype


@contextlib.contextmanager
def precision(dtype):
    """Temporarily switch the default dtype (float64 for gradient checks)."""
    old = _DEFAULT_DTYPE
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(old)


class Tape:
    """Ordered record of adjoint closures for one forward pass."""

    __slots__ = ("_records", "enabled")

    def __init__(self):
        self._records = []
        self.enabled = True

    def record(self, fn):
        if self.enabled:
            self._records.append(fn)

    def clear(self):
        self._records.clear()

    def __len__(self):
        return len(self._records)


_TAPE = Tape()


def tape():
    return _TAPE


@contextlib.contextmanager
def no_grad():
    """Run a block without recording adjoints (inference / data plumbing)."""
    old = _TAPE.enabled
    _TAPE.enabled = False
    try:
        yield
    finally:
        _TAPE.enabled = old


def grad_enabled():
    return _TAPE.enabled


class Tensor:
    """A numpy array plus gradient slot. ``grad is None`` means zero."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad=False, dtype=None):
        self.data = np.asarray(data, dtype=dtype or _DEFAULT_DTYPE)
        self.requires_grad = requires_grad
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    def detach(self):
        return Tensor(self.data, requires_grad=False, dtype=self.data.dtype)

    def grad_array(self):
        """Gradient as an ndarray; a never-touched slot reads as zeros."""
        if self.grad is None:
            return np.zeros_like(self.data)
        return self.grad

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # Light operator sugar; heavy lifting stays in the module functions.
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)


class Parameter:
    """Named learnable tensor plus Adam moment buffers."""

    __slots__ = ("name", "tensor", "m", "v", "step")

    def __init__(self, data, name):
        self.name = name
        self.tensor = Tensor(data, requires_grad=True)
        self.m = np.zeros_like(self.tensor.data)
        self.v = np.zeros_like(self.tensor.data)
        self.step = 0

    @property
    def data(self):
        return self.tensor.data

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.tensor.shape})"


def _t(x):
    """Accept Tensor or Parameter wherever an op wants a Tensor."""
    return x.tensor if isinstance(x, Parameter) else x


def _as_tensor(x):
    if isinstance(x, Parameter):
        return x.tensor
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def _check_finite(arr):
    if _DEBUG_FINITE and not np.all(np.isfinite(arr)):
        raise FloatingPointError("non-finite value produced by a forward op")


def _result(data, *inputs):
    """Wrap op output; returns (tensor, needs_grad)."""
    _check_finite(data)
    out = Tensor(data, dtype=data.dtype)
    needs = _TAPE.enabled and any(i.requires_grad for i in inputs)
    out.requires_grad = needs
    return out, needs


def _reduce_to(g, shape):
    """Sum a broadcast gradient back down to the original operand shape."""
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _accum(t, g):
    if g.shape != t.data.shape:
        g = _reduce_to(g, t.data.shape)
    if t.grad is None:
        t.grad = g.copy()
    else:
        t.grad += g


def _mm(a, b):
    """Matrix product with float64 accumulation, cast back to operand dtype."""
    if a.dtype == np.float64 and b.dtype == np.float64:
        return a @ b
    return (a.astype(np.float64) @ b.astype(np.float64)).astype(
        np.result_type(a, b)
    )


# ---------------------------------------------------------------------------
# elementwise / structural ops


def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out, needs = _result(a.data + b.data, a, b)
    if needs:
        def bw():
            g = out.grad
            if g is None:
                return
            if a.requires_grad:
                _accum(a, g)
            if b.requires_grad:
                _accum(b, g)
        _TAPE.record(bw)
    return out


def sub(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out, needs = _result(a.data - b.data, a, b)
    if needs:
        def bw():
            g = out.grad
            if g is None:
                return
            if a.requires_grad:
                _accum(a, g)
            if b.requires_grad:
                _accum(b, -g)
        _TAPE.record(bw)
    return out


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out, needs = _result(a.data * b.data, a, b)
    if needs:
        def bw():
            g = out.grad
            if g is None:
                return
            if a.requires_grad:
                _accum(a, g * b.data)
            if b.requires_grad:
                _accum(b, g * a.data)
        _TAPE.record(bw)
    return out


def div(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out, needs = _result(a.data / b.data, a, b)
    if needs:
        def bw():
            g = out.grad
            if g is None:
                return
            if a.requires_grad:
                _accum(a, g / b.data)
            if b.requires_grad:
                _accum(b, -g * a.data / (b.data * b.data))
        _TAPE.record(bw)
    return out


def relu(a):
    a = _t(a)
    out, needs = _result(np.maximum(a.data, 0), a)
    if needs:
        mask = a.data > 0
        def bw():
            if out.grad is not None:
                _accum(a, out.grad * mask)
        _TAPE.record(bw)
    return out


def relu6(a):
    a = _t(a)
    out, needs = _result(np.clip(a.data, 0, 6), a)
    if needs:
        mask = (a.data > 0) & (a.data < 6)
        def bw():
            if out.grad is not None:
                _accum(a, out.grad * mask)
        _TAPE.record(bw)
    return out


def sigmoid(a):
    a = _t(a)
    z = np.exp(-np.abs(a.data))
    s = np.where(a.data >= 0, 1.0 / (1.0 + z), z / (1.0 + z)).astype(a.data.dtype)
    out, needs = _result(s, a)
    if needs:
        def bw():
            if out.grad is not None:
                _accum(a, out.grad * s * (1.0 - s))
        _TAPE.record(bw)
    return out


def sqrt(a):
    """Element-wise square root with a guarded adjoint at zero."""
    a = _t(a)
    r = np.sqrt(a.data)
    out, needs = _result(r, a)
    if needs:
        def bw():
            if out.grad is not None:
                _accum(a, out.grad * 0.5 / np.maximum(r, 1e-12))
        _TAPE.record(bw)
    return out


def reshape(a, shape):
    a = _t(a)
    out, needs = _result(a.data.reshape(shape), a)
    if needs:
        def bw():
            if out.grad is not None:
                _accum(a, out.grad.reshape(a.data.shape))
        _TAPE.record(bw)
    return out


def flatten2d(a):
    """(C, H, W) -> (C, H*W)."""
    a = _t(a)
    c, h, w = a.shape
    return reshape(a, (c, h * w))


def transpose2d(a):
    a = _t(a)
    if a.data.ndim != 2:
        raise ShapeError(f"transpose2d expects a matrix, got {a.shape}")
    out, needs = _result(np.ascontiguousarray(a.data.T), a)
    if needs:
        def bw():
            if out.grad is not None:
                _accum(a, out.grad.T)
        _TAPE.record(bw)
    return out


def concat(tensors, axis=0):
    tensors = [_t(x) for x in tensors]
    first = tensors[0].data.shape
    for x in tensors[1:]:
        s = x.data.shape
        if len(s) != len(first) or any(
                a != b for i, (a, b) in enumerate(zip(s, first)) if i != axis):
            raise ShapeError(f"concat along axis {axis} needs matching other "
                             f"extents, got {first} and {s}")
    out, needs = _result(np.concatenate([x.data for x in tensors], axis=axis),
                         *tensors)
    if needs:
        sizes = [x.data.shape[axis] for x in tensors]
        offsets = np.cumsum([0] + sizes)
        def bw():
            g = out.grad
            if g is None:
                return
            for x, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
                if x.requires_grad:
                    idx = [slice(None)] * g.ndim
                    idx[axis] = slice(lo, hi)
                    _accum(x, g[tuple(idx)])
        _TAPE.record(bw)
    return out


def take_axis0(a, index):
    """Select one slice along axis 0 (a row of a matrix, a channel plane)."""
    a = _t(a)
    out, needs = _result(a.data[index].copy(), a)
    if needs:
        def bw():
            if out.grad is None:
                return
            gz = np.zeros_like(a.data)
            gz[index] = out.grad
            _accum(a, gz)
        _TAPE.record(bw)
    return out


def permute1d(a, order):
    """Reorder a vector by an index permutation (no repeated indices)."""
    a = _t(a)
    if a.data.ndim != 1:
        raise ShapeError(f"permute1d expects a vector, got {a.shape}")
    order = np.asarray(order)
    out, needs = _result(a.data[order], a)
    if needs:
        def bw():
            if out.grad is None:
                return
            gz = np.zeros_like(a.data)
            gz[order] = out.grad
            _accum(a, gz)
        _TAPE.record(bw)
    return out


# ---------------------------------------------------------------------------
# reductions


def sum_all(a):
    a = _t(a)
    val = np.asarray(a.data.sum(dtype=np.float64), dtype=a.data.dtype)
    out, needs = _result(val, a)
    if needs:
        def bw():
            if out.grad is not None:
                _accum(a, np.broadcast_to(out.grad, a.data.shape))
        _TAPE.record(bw)
    return out


def mean_all(a):
    a = _t(a)
    n = a.data.size
    val = np.asarray(a.data.sum(dtype=np.float64) / n, dtype=a.data.dtype)
    out, needs = _result(val, a)
    if needs:
        def bw():
            if out.grad is not None:
                _accum(a, np.broadcast_to(out.grad / n, a.data.shape))
        _TAPE.record(bw)
    return out


def mean_spatial(a):
    """(C, H, W) -> (C, 1, 1) global average pool."""
    a = _t(a)
    c, h, w = a.shape
    val = (a.data.sum(axis=(1, 2), keepdims=True, dtype=np.float64)
           / (h * w)).astype(a.data.dtype)
    out, needs = _result(val, a)
    if needs:
        def bw():
            if out.grad is not None:
                _accum(a, np.broadcast_to(out.grad / (h * w), a.data.shape))
        _TAPE.record(bw)
    return out


def max_channel(a):
    """(C, H, W) -> (1, H, W) max over the channel axis."""
    a = _t(a)
    val = a.data.max(axis=0, keepdims=True)
    out, needs = _result(val, a)
    if needs:
        arg = a.data.argmax(axis=0)[None]          # (1, H, W)
        def bw():
            if out.grad is None:
                return
            gz = np.zeros_like(a.data)
            np.put_along_axis(gz, arg, out.grad, axis=0)
            _accum(a, gz)
        _TAPE.record(bw)
    return out


# ---------------------------------------------------------------------------
# linear algebra / convolution


def matmul(a, b):
    a, b = _t(a), _t(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul mismatch: {a.shape} @ {b.shape}")
    out, needs = _result(_mm(a.data, b.data), a, b)
    if needs:
        def bw():
            g = out.grad
            if g is None:
                return
            if a.requires_grad:
                _accum(a, _mm(g, b.data.T))
            if b.requires_grad:
                _accum(b, _mm(a.data.T, g))
        _TAPE.record(bw)
    return out


def _conv_geometry(h, w, k, stride, padding):
    if k % 2 == 0:
        raise ConfigError(f"conv kernel must be odd, got {k}")
    if padding is None:
        padding = k // 2
    ho = (h + 2 * padding - k) // stride + 1
    wo = (w + 2 * padding - k) // stride + 1
    if ho < 1 or wo < 1:
        raise ShapeError(f"conv output collapsed: in {(h, w)} k={k} "
                         f"stride={stride} pad={padding}")
    return padding, ho, wo


def _im2col(xp, k, stride, ho, wo):
    c = xp.shape[0]
    cols = np.empty((c, k, k, ho, wo), dtype=xp.dtype)
    for i in range(k):
        for j in range(k):
            cols[:, i, j] = xp[:, i:i + stride * ho:stride,
                               j:j + stride * wo:stride]
    return cols


def _col2im(dcols, xp_shape, k, stride, ho, wo):
    dxp = np.zeros(xp_shape, dtype=dcols.dtype)
    for i in range(k):
        for j in range(k):
            dxp[:, i:i + stride * ho:stride,
                j:j + stride * wo:stride] += dcols[:, i, j]
    return dxp


def conv2d(x, w, b=None, stride=1, padding=None):
    """2-D convolution. x: (Cin,H,W), w: (Cout,Cin,k,k), b: (Cout,) or None."""
    x, w = _t(x), _t(w)
    b = _t(b) if b is not None else None
    cout, cin, k, k2 = w.shape
    if k != k2:
        raise ConfigError(f"conv kernel must be square, got {w.shape}")
    if x.data.ndim != 3 or x.shape[0] != cin:
        raise ShapeError(f"conv2d input {x.shape} vs weight {w.shape}")
    _, h, ww = x.shape
    padding, ho, wo = _conv_geometry(h, ww, k, stride, padding)
    xp = np.pad(x.data, ((0, 0), (padding, padding), (padding, padding)))
    cols = _im2col(xp, k, stride, ho, wo).reshape(cin * k * k, ho * wo)
    w2 = w.data.reshape(cout, cin * k * k)
    y = _mm(w2, cols).reshape(cout, ho, wo)
    if b is not None:
        y = y + b.data[:, None, None]
    inputs = (x, w) if b is None else (x, w, b)
    out, needs = _result(y, *inputs)
    if needs:
        def bw():
            g = out.grad
            if g is None:
                return
            gm = g.reshape(cout, ho * wo)
            if w.requires_grad:
                _accum(w, _mm(gm, cols.T).reshape(w.data.shape))
            if b is not None and b.requires_grad:
                _accum(b, gm.sum(axis=1, dtype=np.float64).astype(b.data.dtype))
            if x.requires_grad:
                dcols = _mm(w2.T, gm).reshape(cin, k, k, ho, wo)
                dxp = _col2im(dcols, xp.shape, k, stride, ho, wo)
                if padding:
                    dxp = dxp[:, padding:-padding, padding:-padding]
                _accum(x, dxp)
        _TAPE.record(bw)
    return out


def depthwise_conv2d(x, w, b=None, stride=1, padding=None):
    """Per-channel convolution. x: (C,H,W), w: (C,k,k), b: (C,) or None."""
    x, w = _t(x), _t(w)
    b = _t(b) if b is not None else None
    c, k, k2 = w.shape
    if k != k2:
        raise ConfigError(f"depthwise kernel must be square, got {w.shape}")
    if x.data.ndim != 3 or x.shape[0] != c:
        raise ShapeError(f"depthwise input {x.shape} vs weight {w.shape}")
    _, h, ww = x.shape
    padding, ho, wo = _conv_geometry(h, ww, k, stride, padding)
    xp = np.pad(x.data, ((0, 0), (padding, padding), (padding, padding)))
    cols = _im2col(xp, k, stride, ho, wo)                     # (C,k,k,Ho,Wo)
    y = np.einsum("cklhw,ckl->chw", cols.astype(np.float64),
                  w.data.astype(np.float64)).astype(x.data.dtype)
    if b is not None:
        y = y + b.data[:, None, None]
    inputs = (x, w) if b is None else (x, w, b)
    out, needs = _result(y, *inputs)
    if needs:
        def bw():
            g = out.grad
            if g is None:
                return
            if w.requires_grad:
                dw = np.einsum("cklhw,chw->ckl", cols.astype(np.float64),
                               g.astype(np.float64)).astype(w.data.dtype)
                _accum(w, dw)
            if b is not None and b.requires_grad:
                _accum(b, g.sum(axis=(1, 2), dtype=np.float64)
                       .astype(b.data.dtype))
            if x.requires_grad:
                dcols = w.data[:, :, :, None, None] * g[:, None, None]
                dxp = _col2im(dcols, xp.shape, k, stride, ho, wo)
                if padding:
                    dxp = dxp[:, padding:-padding, padding:-padding]
                _accum(x, dxp)
        _TAPE.record(bw)
    return out


def depthwise_separable_conv(x, w_dw, w_pw, b_dw=None, b_pw=None,
                             stride=1, padding=None):
    """Depthwise k-by-k followed by a pointwise 1-by-1 channel mix."""
    h = depthwise_conv2d(x, w_dw, b_dw, stride=stride, padding=padding)
    return conv2d(h, w_pw, b_pw)


# ---------------------------------------------------------------------------
# resize / softmax


@functools.lru_cache(maxsize=None)
def _resize_matrix(n_in, n_out):
    """Row-stochastic 1-D bilinear interpolation matrix (n_out, n_in)."""
    m = np.zeros((n_out, n_in), dtype=np.float64)
    scale = n_in / n_out
    for i in range(n_out):
        src = (i + 0.5) * scale - 0.5
        i0 = int(np.floor(src))
        t = src - i0
        lo = min(max(i0, 0), n_in - 1)
        hi = min(max(i0 + 1, 0), n_in - 1)
        m[i, lo] += 1.0 - t
        m[i, hi] += t
    return m


def bilinear_resize(x, out_h, out_w):
    """Resize (C,H,W) to (C,out_h,out_w) with align_corners=False bilinear."""
    x = _t(x)
    if x.data.ndim != 3:
        raise ShapeError(f"bilinear_resize expects (C,H,W), got {x.shape}")
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"bilinear_resize target must be >=1, got "
                         f"{(out_h, out_w)}")
    c, h, w = x.shape
    if (h, w) == (out_h, out_w):
        # Identity resize still flows gradient; keep the graph simple.
        return reshape(x, x.shape)
    ry = _resize_matrix(h, out_h)                 # (H', H)
    rx = _resize_matrix(w, out_w)                 # (W', W)
    x64 = x.data.astype(np.float64)
    y = np.matmul(ry, np.matmul(x64, rx.T)).astype(x.data.dtype)
    out, needs = _result(y, x)
    if needs:
        def bw():
            g = out.grad
            if g is None:
                return
            g64 = g.astype(np.float64)
            dx = np.matmul(ry.T, np.matmul(g64, rx)).astype(x.data.dtype)
            _accum(x, dx)
        _TAPE.record(bw)
    return out


def softmax_axis(x, axis):
    x = _t(x)
    if not -x.data.ndim <= axis < x.data.ndim:
        raise ShapeError(f"softmax axis {axis} out of range for {x.shape}")
    m = x.data.max(axis=axis, keepdims=True)
    e = np.exp((x.data - m).astype(np.float64))
    s = (e / e.sum(axis=axis, keepdims=True)).astype(x.data.dtype)
    out, needs = _result(s, x)
    if needs:
        def bw():
            g = out.grad
            if g is None:
                return
            inner = (g * s).sum(axis=axis, keepdims=True)
            _accum(x, s * (g - inner))
        _TAPE.record(bw)
    return out


# ---------------------------------------------------------------------------
# backward / optimizer / verification


def backward(loss):
    """Reverse-replay the tape from a scalar loss, then clear the tape."""
    loss = _t(loss)
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar, got shape {loss.shape}")
    loss.grad = np.ones_like(loss.data)
    try:
        for fn in reversed(_TAPE._records):
            fn()
    finally:
        _TAPE.clear()


def adam_step(params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One Adam update over ``params``; consumes and clears their gradients."""
    if lr <= 0:
        raise ConfigError(f"learning rate must be positive, got {lr}")
    for p in params:
        g = p.tensor.grad
        if g is None:
            g = np.zeros_like(p.tensor.data)
        p.step += 1
        p.m = beta1 * p.m + (1.0 - beta1) * g
        p.v = beta2 * p.v + (1.0 - beta2) * (g * g)
        mhat = p.m / (1.0 - beta1 ** p.step)
        vhat = p.v / (1.0 - beta2 ** p.step)
        p.tensor.data -= (lr * mhat / (np.sqrt(vhat) + eps)).astype(
            p.tensor.data.dtype)
        p.tensor.grad = None


def finite_difference_gradient(f, param, eps=1e-3):
    """Central-difference gradient of scalar ``f()`` w.r.t. one parameter.

    ``f`` must be deterministic and re-runnable; the parameter is perturbed
    one element at a time and restored afterwards.
    """
    if eps <= 0:
        raise ConfigError(f"finite-difference step must be positive, got {eps}")
    data = _t(param).data
    grad = np.zeros(data.shape, dtype=np.float64)
    flat = data.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + eps
        f_plus = float(f())
        flat[i] = keep - eps
        f_minus = float(f())
        flat[i] = keep
        grad.reshape(-1)[i] = (f_plus - f_minus) / (2.0 * eps)
    return grad


# ---------------------------------------------------------------------------
# parameter construction


def kaiming_uniform(rng, shape, fan_in):
    bound = float(np.sqrt(6.0 / max(fan_in, 1)))
    return rng.uniform(-bound, bound, size=shape).astype(_DEFAULT_DTYPE)


class ParamFactory:
    """Builds named Parameters from one RNG; rejects duplicate names."""

    def __init__(self, rng):
        self.rng = rng
        self.registry = {}

    def _register(self, p):
        if p.name in self.registry:
            raise ConfigError(f"duplicate parameter name {p.name!r}")
        self.registry[p.name] = p
        return p

    def conv(self, name, cout, cin, k, bias=True):
        w = self._register(Parameter(
            kaiming_uniform(self.rng, (cout, cin, k, k), cin * k * k),
            name + ".w"))
        if not bias:
            return w, None
        b = self._register(Parameter(
            np.zeros(cout, dtype=_DEFAULT_DTYPE), name + ".b"))
        return w, b

    def conv_weight(self, name, cout, cin, k):
        """Bias-free conv weight registered under exactly ``name``."""
        return self._register(Parameter(
            kaiming_uniform(self.rng, (cout, cin, k, k), cin * k * k), name))

    def dwconv(self, name, c, k, bias=True):
        w = self._register(Parameter(
            kaiming_uniform(self.rng, (c, k, k), k * k), name + ".w"))
        if not bias:
            return w, None
        b = self._register(Parameter(
            np.zeros(c, dtype=_DEFAULT_DTYPE), name + ".b"))
        return w, b

    def matrix(self, name, rows, cols, bias=False):
        w = self._register(Parameter(
            kaiming_uniform(self.rng, (rows, cols), cols), name))
        if not bias:
            return w, None
        b = self._register(Parameter(
            np.zeros((rows, 1), dtype=_DEFAULT_DTYPE), name + "_bias"))
        return w, b
