"""Reverse-mode automatic differentiation over dense numpy arrays.

The computation graph is held implicitly: every non-leaf tensor keeps its
parent tensors plus a vector-Jacobian closure, and ``backward`` walks the
DAG in reverse topological order. Hot composites (LSTM over a sequence,
layer norm) carry hand-derived VJPs; everything is validated against
central finite differences via ``fd_check``.
"""
from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np

# Large negative stand-in for -inf inside differentiable paths: exp() of it
# underflows to exactly 0 in both float32 and float64, so masked entries get
# zero softmax weight and zero gradient.
NEG_FILL = -1e30

_DEFAULT_DTYPE = np.float32
_GRAD_ENABLED = True


def default_dtype():
    return _DEFAULT_DTYPE


@contextlib.contextmanager
def precision(dtype):
    """Temporarily switch the default real precision (np.float32/np.float64)."""
    global _DEFAULT_DTYPE
    old = _DEFAULT_DTYPE
    _DEFAULT_DTYPE = np.dtype(dtype).type
    try:
        yield
    finally:
        _DEFAULT_DTYPE = old


@contextlib.contextmanager
def no_grad():
    """Disable graph recording (decode paths; roughly halves op cost)."""
    global _GRAD_ENABLED
    old = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = old


class Tensor:
    __slots__ = ("values", "requires_grad", "grad", "_parents", "_vjp")

    def __init__(self, values, requires_grad: bool = False):
        self.values = np.asarray(values)
        if self.values.dtype != _DEFAULT_DTYPE:
            self.values = self.values.astype(_DEFAULT_DTYPE)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._vjp: Callable[[np.ndarray], tuple] | None = None

    @property
    def shape(self):
        return self.values.shape

    @property
    def ndim(self):
        return self.values.ndim

    def item(self) -> float:
        return float(self.values)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.values.shape}, requires_grad={self.requires_grad})"

    # Operator sugar; the functional forms below do the work.
    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, other)

    def __rmul__(self, other):
        return scale(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def tensor(values, requires_grad: bool = False) -> Tensor:
    return Tensor(values, requires_grad=requires_grad)


def param(values) -> Tensor:
    return Tensor(values, requires_grad=True)


def _node(values: np.ndarray, parents: Sequence[Tensor], vjp) -> Tensor:
    out = Tensor(values)
    if _GRAD_ENABLED and any(p.requires_grad or p._vjp is not None for p in parents):
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum grad down to `shape` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_same_shape(op: str, a: np.ndarray, b: np.ndarray):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ValueError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


# ---------------------------------------------------------------------------
# elementwise / linear algebra


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape("add", a.values, b.values)
    out = a.values + b.values
    return _node(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape("sub", a.values, b.values)
    out = a.values - b.values
    return _node(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape("mul", a.values, b.values)
    out = a.values * b.values
    return _node(
        out,
        (a, b),
        lambda g: (_unbroadcast(g * b.values, a.shape), _unbroadcast(g * a.values, b.shape)),
    )


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _node(a.values * c, (a,), lambda g: (g * c,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    av, bv = a.values, b.values
    if av.shape[-1] != bv.shape[-2 if bv.ndim > 1 else 0]:
        raise ValueError(f"matmul: incompatible shapes {av.shape} and {bv.shape}")
    out = av @ bv

    def vjp(g):
        ga = g @ np.swapaxes(bv, -1, -2)
        gb = np.swapaxes(av, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _node(out, (a, b), vjp)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    vals = [t.values for t in tensors]
    out = np.concatenate(vals, axis=axis)
    sizes = [v.shape[axis] for v in vals]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return _node(out, tuple(tensors), vjp)


def narrow(a: Tensor, axis: int, start: int, length: int) -> Tensor:
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)
    out = a.values[idx]

    def vjp(g):
        full = np.zeros_like(a.values)
        full[idx] = g
        return (full,)

    return _node(out, (a,), vjp)


def split(a: Tensor, sections: int, axis: int = 0) -> list[Tensor]:
    size = a.shape[axis]
    if size % sections != 0:
        raise ValueError(f"split: axis {axis} of shape {a.shape} not divisible by {sections}")
    step = size // sections
    return [narrow(a, axis, i * step, step) for i in range(sections)]


def reshape(a: Tensor, shape) -> Tensor:
    out = a.values.reshape(shape)
    return _node(out, (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    return _node(a.values.transpose(axes), (a,), lambda g: (g.transpose(inv),))


def flip(a: Tensor, axis: int = 0) -> Tensor:
    return _node(np.flip(a.values, axis=axis), (a,), lambda g: (np.flip(g, axis=axis),))


def tile_rows(v: Tensor, n: int) -> Tensor:
    """[d] -> [n, d] by repetition; gradient sums over rows."""
    if v.ndim != 1:
        raise ValueError(f"tile_rows expects a vector, got shape {v.shape}")
    out = np.broadcast_to(v.values, (n, v.shape[0])).copy()
    return _node(out, (v,), lambda g: (g.sum(axis=0),))


# ---------------------------------------------------------------------------
# gathers


def take(a: Tensor, indices, axis: int = 0) -> Tensor:
    indices = np.asarray(indices, dtype=np.intp)
    out = np.take(a.values, indices, axis=axis)

    def vjp(g):
        full = np.zeros_like(a.values)
        moved = np.moveaxis(full, axis, 0)
        np.add.at(moved, indices, np.moveaxis(g, axis, 0))
        return (full,)

    return _node(out, (a,), vjp)


def lookup(table: Tensor, ids) -> Tensor:
    """Embedding lookup: rows of `table` selected by integer ids."""
    return take(table, ids, axis=0)


def take_flat(a: Tensor, flat_indices) -> Tensor:
    """Gather from the flattened view of `a`; result is 1-D."""
    flat_indices = np.asarray(flat_indices, dtype=np.intp)
    out = a.values.reshape(-1)[flat_indices]

    def vjp(g):
        full = np.zeros(a.values.size, dtype=a.values.dtype)
        np.add.at(full, flat_indices, g)
        return (full.reshape(a.shape),)

    return _node(out, (a,), vjp)


def pool_rows(a: Tensor, ranges: Sequence[tuple[int, int]]) -> Tensor:
    """Mean of row groups: output row i = mean of a[start_i:end_i]."""
    av = a.values
    out = np.empty((len(ranges), av.shape[1]), dtype=av.dtype)
    for i, (s, e) in enumerate(ranges):
        if not (0 <= s < e <= av.shape[0]):
            raise ValueError(f"pool_rows: range [{s},{e}) outside {av.shape[0]} rows")
        out[i] = av[s:e].mean(axis=0)

    def vjp(g):
        full = np.zeros_like(av)
        for i, (s, e) in enumerate(ranges):
            full[s:e] += g[i] / (e - s)
        return (full,)

    return _node(out, (a,), vjp)


# ---------------------------------------------------------------------------
# reductions and nonlinearities


def sum_(a: Tensor, axis=None) -> Tensor:
    out = a.values.sum(axis=axis)

    def vjp(g):
        if axis is None:
            return (np.full_like(a.values, 1.0) * g,)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

    return _node(out, (a,), vjp)


def mean(a: Tensor, axis=None) -> Tensor:
    n = a.values.size if axis is None else a.shape[axis]
    return scale(sum_(a, axis=axis), 1.0 / n)


def sigmoid(a: Tensor) -> Tensor:
    out = 1.0 / (1.0 + np.exp(-a.values))
    return _node(out, (a,), lambda g: (g * out * (1.0 - out),))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.values)
    return _node(out, (a,), lambda g: (g * (1.0 - out * out),))


_GELU_C = 0.7978845608028654  # sqrt(2/pi)


def gelu(a: Tensor) -> Tensor:
    x = a.values
    inner = _GELU_C * (x + 0.044715 * x**3)
    t = np.tanh(inner)
    out = 0.5 * x * (1.0 + t)

    def vjp(g):
        dinner = _GELU_C * (1.0 + 3 * 0.044715 * x**2)
        dx = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner
        return (g * dx,)

    return _node(out, (a,), vjp)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    x = a.values
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        dot = (g * out).sum(axis=axis, keepdims=True)
        return ((g - dot) * out,)

    return _node(out, (a,), vjp)


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    x = a.values
    shifted = x - x.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse

    def vjp(g):
        sm = np.exp(out)
        return (g - sm * g.sum(axis=axis, keepdims=True),)

    return _node(out, (a,), vjp)


def logsumexp(a: Tensor, axis=None) -> Tensor:
    """Row-wise (or full) log-sum-exp, computed with the max-shift for stability."""
    x = a.values
    m = x.max(axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    e = np.exp(x - m)
    s = e.sum(axis=axis, keepdims=True)
    out_keep = np.log(s) + m
    if axis is None:
        out = out_keep.reshape(())
    else:
        out = np.squeeze(out_keep, axis=axis)

    def vjp(g):
        w = e / s
        if axis is None:
            return (w * g,)
        return (w * np.expand_dims(g, axis),)

    return _node(out, (a,), vjp)


def masked_fill(a: Tensor, mask: np.ndarray, value: float = NEG_FILL) -> Tensor:
    """Replace entries where mask is True; their gradient is zero."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != a.shape:
        raise ValueError(f"masked_fill: mask shape {mask.shape} != tensor shape {a.shape}")
    out = np.where(mask, np.asarray(value, dtype=a.values.dtype), a.values)
    return _node(out, (a,), lambda g: (np.where(mask, 0.0, g),))


def layer_norm(a: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    x = a.values
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv
    out = xhat * gain.values + bias.values

    def vjp(g):
        gg = g * gain.values
        dx = inv * (gg - gg.mean(axis=-1, keepdims=True) - xhat * (gg * xhat).mean(axis=-1, keepdims=True))
        axes = tuple(range(x.ndim - 1))
        return dx, (g * xhat).sum(axis=axes), g.sum(axis=axes)

    return _node(out, (a, gain, bias), vjp)


# ---------------------------------------------------------------------------
# fused LSTM over a full sequence


def lstm(x: Tensor, w_x: Tensor, w_h: Tensor, b: Tensor) -> Tensor:
    """Unidirectional LSTM; returns hidden states [n, H].

    Gate layout in the weight matrices is [input, forget, cell, output].
    Initial hidden and cell states are zero.
    """
    xv = x.values
    n, _ = xv.shape
    H = w_h.shape[0]
    if w_x.shape != (xv.shape[1], 4 * H) or w_h.shape != (H, 4 * H) or b.shape != (4 * H,):
        raise ValueError(
            f"lstm: weight shapes {w_x.shape}/{w_h.shape}/{b.shape} inconsistent with input {xv.shape}"
        )
    pre = xv @ w_x.values + b.values  # input contribution, all steps at once
    dt = pre.dtype  # follows promotion, not just the input
    hs = np.empty((n, H), dtype=dt)
    cache = []
    h = np.zeros(H, dtype=dt)
    c = np.zeros(H, dtype=dt)
    for t in range(n):
        z = pre[t] + h @ w_h.values
        i = 1.0 / (1.0 + np.exp(-z[:H]))
        f = 1.0 / (1.0 + np.exp(-z[H : 2 * H]))
        g_ = np.tanh(z[2 * H : 3 * H])
        o = 1.0 / (1.0 + np.exp(-z[3 * H :]))
        c_prev = c
        c = f * c_prev + i * g_
        tc = np.tanh(c)
        h = o * tc
        hs[t] = h
        cache.append((i, f, g_, o, c_prev, tc))

    def vjp(grad_h):
        dwx = np.zeros_like(w_x.values)
        dwh = np.zeros_like(w_h.values)
        db = np.zeros_like(b.values)
        dx = np.zeros_like(xv)
        dh_next = np.zeros(H, dtype=dt)
        dc_next = np.zeros(H, dtype=dt)
        for t in range(n - 1, -1, -1):
            i, f, g_, o, c_prev, tc = cache[t]
            dh = grad_h[t] + dh_next
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_next
            di = dc * g_
            df = dc * c_prev
            dg = dc * i
            dc_next = dc * f
            dz = np.concatenate(
                [di * i * (1 - i), df * f * (1 - f), dg * (1 - g_ * g_), do * o * (1 - o)]
            )
            h_prev = hs[t - 1] if t > 0 else np.zeros(H, dtype=xv.dtype)
            dwx += np.outer(xv[t], dz)
            dwh += np.outer(h_prev, dz)
            db += dz
            dx[t] = w_x.values @ dz
            dh_next = w_h.values @ dz
        return dx, dwx, dwh, db

    return _node(hs, (x, w_x, w_h, b), vjp)


def bilstm(x: Tensor, fw: tuple[Tensor, Tensor, Tensor], bw: tuple[Tensor, Tensor, Tensor]) -> Tensor:
    """Concat of forward and reversed-backward LSTM states: [n, 2H]."""
    hf = lstm(x, *fw)
    hb = flip(lstm(flip(x, 0), *bw), 0)
    return concat([hf, hb], axis=1)


# ---------------------------------------------------------------------------
# backward pass and finite-difference checking


def _topo_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor):
    """Populate .grad of every requires_grad leaf reachable from `loss`."""
    if loss.values.shape != ():
        raise ValueError(f"backward expects a scalar loss, got shape {loss.values.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.asarray(1.0, dtype=loss.values.dtype)}
    for node in reversed(_topo_order(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.requires_grad:
            node.grad = g.copy() if node.grad is None else node.grad + g
        if node._vjp is None:
            continue
        parent_grads = node._vjp(g)
        for p, pg in zip(node._parents, parent_grads):
            if pg is None:
                continue
            key = id(p)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg


def fd_check(
    f: Callable[[], Tensor],
    params: Iterable[Tensor],
    epsilon: float = 1e-3,
    max_coords_per_param: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Max relative error between backward() grads and central differences.

    `f` rebuilds the loss from current parameter values on every call.
    The analytic gradients run at the ambient precision; the difference
    quotients always evaluate at 64-bit so the reference out-precisions the
    code under audit (a 32-bit oracle would drown small coordinates in
    evaluation noise).  Relative error denominator is
    max(|analytic|, |numeric|, 1e-8).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    params = list(params)
    for p in params:
        p.zero_grad()
    loss = f()
    backward(loss)
    analytic = [p.grad.copy() if p.grad is not None else np.zeros_like(p.values) for p in params]
    saved = [p.values for p in params]
    for p in params:
        p.values = p.values.astype(np.float64)
    worst = 0.0
    rng = rng or np.random.default_rng(0)
    try:
        with precision(np.float64), no_grad():
            for p, an in zip(params, analytic):
                flat = p.values.reshape(-1)
                coords = np.arange(flat.size)
                if max_coords_per_param is not None and flat.size > max_coords_per_param:
                    coords = rng.choice(flat.size, size=max_coords_per_param, replace=False)
                for idx in coords:
                    orig = flat[idx]
                    flat[idx] = orig + epsilon
                    hi = f().item()
                    flat[idx] = orig - epsilon
                    lo = f().item()
                    flat[idx] = orig
                    num = (hi - lo) / (2 * epsilon)
                    ref = an.reshape(-1)[idx]
                    err = abs(num - ref) / max(abs(num), abs(ref), 1e-8)
                    worst = max(worst, err)
    finally:
        for p, values in zip(params, saved):
            p.values = values
    return float(worst)
