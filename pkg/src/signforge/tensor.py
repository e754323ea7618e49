"""Minimal reverse-mode automatic differentiation over dense numpy arrays.

Operations executed inside a ``with Tape():`` block record their backward
rules; :func:`backward` replays the tape in reverse and accumulates gradients
into every ancestor. Outside a tape, the same functions are plain forward
math, which is how generation runs. Float32 is the training dtype; gradient
checks build float64 graphs (finite differences are unreliable at 32-bit).

Broadcasting is deliberately restricted: elementwise ops want equal shapes,
except ``add`` also accepts a trailing-axis bias vector.
"""

from __future__ import annotations

import numpy as np


class TensorError(Exception):
    pass


class ShapeMismatch(TensorError):
    pass


class NonScalarLoss(TensorError):
    pass


class DoubleBackward(TensorError):
    pass


class Tensor:
    __slots__ = ("values", "grad", "requires_grad", "_tape")

    def __init__(self, values, requires_grad: bool = False, dtype=None):
        if dtype is not None:
            arr = np.asarray(values, dtype=dtype)
        else:
            arr = np.asarray(values)
            if arr.dtype not in (np.float32, np.float64):
                arr = arr.astype(np.float32)
        self.values = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._tape = None

    @property
    def shape(self):
        return self.values.shape

    @property
    def dtype(self):
        return self.values.dtype

    def __repr__(self):
        return f"Tensor(shape={self.values.shape}, dtype={self.values.dtype}, requires_grad={self.requires_grad})"


def parameter(values, dtype=None) -> Tensor:
    return Tensor(values, requires_grad=True, dtype=dtype)


def constant(values, dtype=None) -> Tensor:
    return Tensor(values, requires_grad=False, dtype=dtype)


_TAPE_STACK: list = []


class Tape:
    """Ordered record of operations; parents are always recorded before dependents."""

    def __init__(self):
        self._entries = []  # (out, parents, backward_fn)
        self._consumed = False

    def __enter__(self):
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _TAPE_STACK.pop()
        return False

    def __len__(self):
        return len(self._entries)


def _active_tape():
    return _TAPE_STACK[-1] if _TAPE_STACK else None


def _as_tensor(x, like: Tensor | None = None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    dtype = like.values.dtype if like is not None else None
    return Tensor(x, dtype=dtype)


def _record(out: Tensor, parents, backward_fn):
    tape = _active_tape()
    if tape is None or tape._consumed:
        return
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._tape = tape
        tape._entries.append((out, tuple(parents), backward_fn))


def _accumulate(t: Tensor, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.values)
    t.grad += g


def backward(loss: Tensor) -> None:
    """Populate gradients of every ancestor of a scalar loss, then free the tape."""
    if loss.values.shape != ():
        raise NonScalarLoss(f"loss has shape {loss.values.shape}, expected a scalar")
    tape = loss._tape
    if tape is None:
        # Constant loss: nothing upstream, all gradients are zero.
        return
    if tape._consumed:
        raise DoubleBackward("tape already replayed; rebuild the graph before calling backward again")
    tape._consumed = True
    loss.grad = np.ones((), dtype=loss.values.dtype)
    for out, parents, backward_fn in reversed(tape._entries):
        if out.grad is None:
            continue
        backward_fn(out.grad, parents)
    tape._entries.clear()


def sgd_step(params, lr: float) -> None:
    """In-place gradient-descent update; gradients are cleared afterwards."""
    if lr <= 0.0:
        raise ValueError("learning rate must be > 0")
    for p in params:
        if p.grad is not None:
            p.values -= (lr * p.grad).astype(p.values.dtype, copy=False)
            p.grad = None


def zero_grads(params) -> None:
    for p in params:
        p.grad = None


# ---------------------------------------------------------------------------
# operators


def add(a, b) -> Tensor:
    a = _as_tensor(a)
    b = _as_tensor(b, like=a)
    bias = False
    if a.shape != b.shape:
        if b.shape == a.shape[-1:]:
            bias = True
        else:
            raise ShapeMismatch(f"add: {a.shape} vs {b.shape}")
    out = Tensor(a.values + b.values, dtype=a.dtype)
    is_bias = bias

    def bwd(g, parents):
        pa, pb = parents
        _accumulate(pa, g)
        if is_bias:
            _accumulate(pb, g.reshape(-1, g.shape[-1]).sum(axis=0))
        else:
            _accumulate(pb, g)

    _record(out, (a, b), bwd)
    return out


def multiply(a, b) -> Tensor:
    a = _as_tensor(a)
    b = _as_tensor(b, like=a)
    if a.shape != b.shape:
        raise ShapeMismatch(f"multiply: {a.shape} vs {b.shape}")
    out = Tensor(a.values * b.values, dtype=a.dtype)

    def bwd(g, parents):
        pa, pb = parents
        _accumulate(pa, g * pb.values)
        _accumulate(pb, g * pa.values)

    _record(out, (a, b), bwd)
    return out


def scale(a, s: float) -> Tensor:
    a = _as_tensor(a)
    s = float(s)
    out = Tensor(a.values * s, dtype=a.dtype)

    def bwd(g, parents):
        _accumulate(parents[0], g * s)

    _record(out, (a,), bwd)
    return out


def matmul(a, b, transpose_a: bool = False, transpose_b: bool = False) -> Tensor:
    a = _as_tensor(a)
    b = _as_tensor(b, like=a)
    if a.values.ndim != 2 or b.values.ndim != 2:
        raise ShapeMismatch(f"matmul wants 2-D operands, got {a.shape} and {b.shape}")
    av = a.values.T if transpose_a else a.values
    bv = b.values.T if transpose_b else b.values
    if av.shape[1] != bv.shape[0]:
        raise ShapeMismatch(f"matmul: {a.shape}{'^T' if transpose_a else ''} @ {b.shape}{'^T' if transpose_b else ''}")
    out = Tensor(av @ bv, dtype=a.dtype)
    ta, tb = transpose_a, transpose_b

    def bwd(g, parents):
        pa, pb = parents
        if not ta and not tb:
            _accumulate(pa, g @ pb.values.T)
            _accumulate(pb, pa.values.T @ g)
        elif not ta and tb:
            _accumulate(pa, g @ pb.values)
            _accumulate(pb, g.T @ pa.values)
        elif ta and not tb:
            _accumulate(pa, pb.values @ g.T)
            _accumulate(pb, pa.values @ g)
        else:
            _accumulate(pa, (g @ pb.values).T)
            _accumulate(pb, (pa.values @ g).T)

    _record(out, (a, b), bwd)
    return out


def softmax(a) -> Tensor:
    """Softmax along the last axis."""
    a = _as_tensor(a)
    shifted = a.values - a.values.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(s, dtype=a.dtype)

    def bwd(g, parents):
        inner = (g * s).sum(axis=-1, keepdims=True)
        _accumulate(parents[0], s * (g - inner))

    _record(out, (a,), bwd)
    return out


def relu(a) -> Tensor:
    a = _as_tensor(a)
    mask = a.values > 0
    out = Tensor(np.where(mask, a.values, 0.0), dtype=a.dtype)

    def bwd(g, parents):
        _accumulate(parents[0], g * mask)

    _record(out, (a,), bwd)
    return out


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then apply the affine pair."""
    x = _as_tensor(x)
    gain = _as_tensor(gain, like=x)
    bias = _as_tensor(bias, like=x)
    d = x.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise ShapeMismatch(f"layer_norm affine shapes {gain.shape}/{bias.shape} vs feature dim {d}")
    mu = x.values.mean(axis=-1, keepdims=True)
    centered = x.values - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    out = Tensor(xhat * gain.values + bias.values, dtype=x.dtype)

    def bwd(g, parents):
        px, pgain, pbias = parents
        flat_g = g.reshape(-1, d)
        flat_xhat = xhat.reshape(-1, d)
        _accumulate(pgain, (flat_g * flat_xhat).sum(axis=0))
        _accumulate(pbias, flat_g.sum(axis=0))
        dxhat = g * pgain.values
        term = dxhat - dxhat.mean(axis=-1, keepdims=True) - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        _accumulate(px, term * inv_std)

    _record(out, (x, gain, bias), bwd)
    return out


def embedding_lookup(table, ids) -> Tensor:
    table = _as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1:
        raise ShapeMismatch(f"embedding_lookup wants a 1-D id array, got {ids.shape}")
    out = Tensor(table.values[ids], dtype=table.dtype)

    def bwd(g, parents):
        p = parents[0]
        if p.requires_grad:
            if p.grad is None:
                p.grad = np.zeros_like(p.values)
            np.add.at(p.grad, ids, g)

    _record(out, (table,), bwd)
    return out


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    out = Tensor(np.concatenate([t.values for t in tensors], axis=axis), dtype=tensors[0].dtype)
    sizes = [t.values.shape[axis] for t in tensors]

    def bwd(g, parents):
        start = 0
        for p, size in zip(parents, sizes):
            index = [slice(None)] * g.ndim
            index[axis] = slice(start, start + size)
            _accumulate(p, g[tuple(index)])
            start += size

    _record(out, tuple(tensors), bwd)
    return out


def slice_(a, key) -> Tensor:
    """Basic (non-strided) slicing; gradients scatter back into the source shape."""
    a = _as_tensor(a)
    out = Tensor(np.array(a.values[key]), dtype=a.dtype)

    def bwd(g, parents):
        p = parents[0]
        if p.requires_grad:
            if p.grad is None:
                p.grad = np.zeros_like(p.values)
            p.grad[key] += g

    _record(out, (a,), bwd)
    return out


def mean(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.asarray(a.values.mean(), dtype=a.dtype))
    n = a.values.size

    def bwd(g, parents):
        _accumulate(parents[0], np.full_like(parents[0].values, g / n))

    _record(out, (a,), bwd)
    return out


def mse(pred, target) -> Tensor:
    pred = _as_tensor(pred)
    target = _as_tensor(target, like=pred)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"mse: {pred.shape} vs {target.shape}")
    diff = pred.values - target.values
    out = Tensor(np.asarray((diff * diff).mean(), dtype=pred.dtype))
    n = diff.size

    def bwd(g, parents):
        p, t = parents
        _accumulate(p, g * 2.0 * diff / n)
        _accumulate(t, -g * 2.0 * diff / n)

    _record(out, (pred, target), bwd)
    return out


def cross_entropy(logits, target_ids) -> Tensor:
    """Mean token-level negative log-likelihood of the targets under the logits."""
    logits = _as_tensor(logits)
    ids = np.asarray(target_ids, dtype=np.int64)
    if logits.values.ndim != 2 or ids.ndim != 1 or ids.shape[0] != logits.shape[0]:
        raise ShapeMismatch(f"cross_entropy: logits {logits.shape} vs targets {ids.shape}")
    shifted = logits.values - logits.values.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    rows = np.arange(ids.shape[0])
    out = Tensor(np.asarray(-log_probs[rows, ids].mean(), dtype=logits.dtype))
    probs = np.exp(log_probs)
    n = ids.shape[0]

    def bwd(g, parents):
        d = probs.copy()
        d[rows, ids] -= 1.0
        _accumulate(parents[0], g * d / n)

    _record(out, (logits,), bwd)
    return out
