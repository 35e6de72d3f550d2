"""Minimal reverse-mode automatic differentiation over numpy arrays.

Implements exactly the operations the encoder/decoder stack needs:
dense linear algebra, elementwise nonlinearities, row gather/scatter,
segment reductions and grouped softmax. Tensors wrap float arrays;
``backward()`` walks the tape once and accumulates gradients into
``Tensor.grad``. Single-threaded, deterministic evaluation order.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "ScatterPlan",
    "add",
    "sub",
    "mul",
    "matmul",
    "transpose",
    "reshape",
    "relu",
    "sigmoid",
    "sqrt",
    "square",
    "tensor_sum",
    "concat",
    "gather_rows",
    "segment_sum",
    "segment_softmax",
    "softmax_vec",
    "softmax_rows",
    "pick",
    "constant",
    "parameter",
    "zero_grads",
]

BackwardFn = Callable[[np.ndarray], tuple]


class Tensor:
    """A node in the computation tape: value, gradient slot, parents.

    ``_owned`` marks ops whose backward returns freshly allocated arrays
    (no views of the incoming gradient, no sharing between parents), so
    the first accumulation can take the array by reference.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward",
                 "_owned")

    def __init__(self, data, requires_grad: bool = False,
                 parents: tuple = (), backward: BackwardFn | None = None,
                 owned: bool = False):
        self.data = np.asarray(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward
        self._owned = owned

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # Operator sugar; scalars and ndarrays are wrapped as constants.
    def __add__(self, other):
        return add(self, _wrap(other, self.dtype))

    def __radd__(self, other):
        return add(_wrap(other, self.dtype), self)

    def __sub__(self, other):
        return sub(self, _wrap(other, self.dtype))

    def __rsub__(self, other):
        return sub(_wrap(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, _wrap(other, self.dtype))

    def __rmul__(self, other):
        return mul(_wrap(other, self.dtype), self)

    def __neg__(self):
        return mul(self, constant(np.asarray(-1.0, dtype=self.dtype)))

    def __matmul__(self, other):
        return matmul(self, _wrap(other, self.dtype))

    def backward(self, grad: np.ndarray | None = None) -> None:
        """Accumulate d(self)/d(leaf) into every reachable leaf's ``grad``."""
        if not self.requires_grad:
            return
        if grad is None:
            grad = np.ones_like(self.data)
        order = _toposort(self)
        self.grad = np.asarray(grad, dtype=self.data.dtype)
        for node in reversed(order):
            if node._backward is None or node.grad is None:
                continue
            for i, (parent, g) in enumerate(
                    zip(node._parents, node._backward(node.grad))):
                if g is None or not parent.requires_grad:
                    continue
                if parent.grad is not None:
                    parent.grad += g
                elif node._owned is True:
                    parent.grad = g
                elif node._owned is False:
                    parent.grad = g.copy()
                else:
                    parent.grad = g if node._owned[i] else g.copy()


def _toposort(root: Tensor) -> list[Tensor]:
    # Iterative postorder; recursion would overflow on deep tapes.
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
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def constant(data, dtype=None) -> Tensor:
    return Tensor(np.asarray(data, dtype=dtype))


def parameter(data, dtype=np.float64) -> Tensor:
    return Tensor(np.array(data, dtype=dtype), requires_grad=True)


def zero_grads(tensors: Iterable[Tensor]) -> None:
    for t in tensors:
        t.grad = None


def _wrap(x, dtype) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return constant(np.asarray(x, dtype=dtype))


def _make(data: np.ndarray, parents: tuple, backward: BackwardFn,
          owned=False) -> Tensor:
    if any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, parents=parents,
                      backward=backward, owned=owned)
    return Tensor(data)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` over the axes numpy broadcast to reach ``grad.shape``."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def add(a: Tensor, b: Tensor) -> Tensor:
    out = a.data + b.data

    def backward(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _make(out, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    out = a.data - b.data

    def backward(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

    return _make(out, (a, b), backward, owned=(False, True))


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = a.data * b.data

    def backward(g):
        return (_unbroadcast(g * b.data, a.data.shape),
                _unbroadcast(g * a.data, b.data.shape))

    return _make(out, (a, b), backward, owned=True)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out = a.data @ b.data

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return _make(out, (a, b), backward, owned=True)


def transpose(a: Tensor) -> Tensor:
    def backward(g):
        return (g.T,)

    return _make(a.data.T, (a,), backward)


def reshape(a: Tensor, shape: tuple) -> Tensor:
    def backward(g):
        return (g.reshape(a.data.shape),)

    return _make(a.data.reshape(shape), (a,), backward)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    out = np.where(mask, a.data, 0.0)

    def backward(g):
        return (g * mask,)

    return _make(out, (a,), backward, owned=True)


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    # keep outputs strictly inside (0, 1); rounding would otherwise emit
    # exact 0/1 for |x| beyond ~37 and break the open-interval contract
    np.clip(out, 5e-324, 1.0 - 2.0 ** -53, out=out)

    def backward(g):
        return (g * out * (1.0 - out),)

    return _make(out, (a,), backward, owned=True)


def sqrt(a: Tensor) -> Tensor:
    out = np.sqrt(a.data)

    def backward(g):
        return (g * 0.5 / out,)

    return _make(out, (a,), backward, owned=True)


def square(a: Tensor) -> Tensor:
    def backward(g):
        return (g * 2.0 * a.data,)

    return _make(a.data * a.data, (a,), backward, owned=True)


def tensor_sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape).copy(),)
        g_exp = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(g_exp, a.data.shape).copy(),)

    return _make(out, (a,), backward, owned=True)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return _make(out, tuple(tensors), backward)


class ScatterPlan:
    """Sort-based scatter/reduce over a fixed index vector.

    Precomputing the argsort and run boundaries turns repeated
    ``np.add.at`` calls into fancy-gather + ``reduceat``, which is far
    faster and still deterministic. One plan serves every op that
    scatters through the same index array (static graphs reuse them
    across layers and epochs).
    """

    __slots__ = ("idx", "size", "order", "starts", "uniques")

    def __init__(self, idx: np.ndarray, size: int):
        self.idx = np.asarray(idx, dtype=np.intp)
        self.size = size
        self.order = np.argsort(self.idx, kind="stable")
        sorted_idx = self.idx[self.order]
        if len(sorted_idx):
            boundary = np.empty(len(sorted_idx), dtype=bool)
            boundary[0] = True
            np.not_equal(sorted_idx[1:], sorted_idx[:-1], out=boundary[1:])
            self.starts = np.flatnonzero(boundary)
            self.uniques = sorted_idx[self.starts]
        else:
            self.starts = np.empty(0, dtype=np.intp)
            self.uniques = np.empty(0, dtype=np.intp)

    def scatter_add(self, values: np.ndarray, out_tail: tuple = None) -> np.ndarray:
        shape = (self.size,) + (values.shape[1:] if out_tail is None else out_tail)
        out = np.zeros(shape, dtype=values.dtype)
        if len(self.idx):
            out[self.uniques] = np.add.reduceat(values[self.order], self.starts,
                                                axis=0)
        return out

    def scatter_max(self, values: np.ndarray, fill: float) -> np.ndarray:
        out = np.full(self.size, fill, dtype=values.dtype)
        if len(self.idx):
            out[self.uniques] = np.maximum.reduceat(values[self.order],
                                                    self.starts)
        return out


def gather_rows(a: Tensor, idx: np.ndarray, plan: ScatterPlan | None = None
                ) -> Tensor:
    idx = np.asarray(idx, dtype=np.intp)

    def backward(g):
        if plan is not None:
            return (plan.scatter_add(g, out_tail=a.data.shape[1:]),)
        ga = np.zeros_like(a.data)
        np.add.at(ga, idx, g)
        return (ga,)

    return _make(a.data[idx], (a,), backward, owned=True)


def segment_sum(a: Tensor, segments: np.ndarray, num_segments: int,
                plan: ScatterPlan | None = None) -> Tensor:
    """Sum rows of ``a`` into ``num_segments`` buckets given per-row ids."""
    segments = np.asarray(segments, dtype=np.intp)
    if plan is not None:
        out = plan.scatter_add(a.data)
    else:
        out = np.zeros((num_segments,) + a.data.shape[1:], dtype=a.data.dtype)
        np.add.at(out, segments, a.data)

    def backward(g):
        return (g[segments],)

    return _make(out, (a,), backward, owned=True)


def segment_softmax(a: Tensor, segments: np.ndarray, num_segments: int,
                    plan: ScatterPlan | None = None) -> Tensor:
    """Softmax of a 1-D score vector within each segment (max-shifted)."""
    segments = np.asarray(segments, dtype=np.intp)
    x = a.data
    if plan is not None:
        mx = plan.scatter_max(x, -np.inf)
        ex = np.exp(x - mx[segments])
        denom = plan.scatter_add(ex)
    else:
        mx = np.full(num_segments, -np.inf, dtype=x.dtype)
        np.maximum.at(mx, segments, x)
        ex = np.exp(x - mx[segments])
        denom = np.zeros(num_segments, dtype=x.dtype)
        np.add.at(denom, segments, ex)
    out = ex / denom[segments]

    def backward(g):
        if plan is not None:
            dot = plan.scatter_add(g * out)
        else:
            dot = np.zeros(num_segments, dtype=x.dtype)
            np.add.at(dot, segments, g * out)
        return (out * (g - dot[segments]),)

    return _make(out, (a,), backward, owned=True)


def softmax_vec(a: Tensor) -> Tensor:
    """Softmax of a 1-D vector."""
    x = a.data
    ex = np.exp(x - x.max())
    out = ex / ex.sum()

    def backward(g):
        return (out * (g - np.dot(g, out)),)

    return _make(out, (a,), backward, owned=True)


def softmax_rows(a: Tensor) -> Tensor:
    """Row-wise softmax of a 2-D array."""
    x = a.data
    ex = np.exp(x - x.max(axis=1, keepdims=True))
    out = ex / ex.sum(axis=1, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=1, keepdims=True)),)

    return _make(out, (a,), backward, owned=True)


def pick(a: Tensor, index: tuple) -> Tensor:
    """Select one scalar entry of ``a``; gradient scatters back to it."""

    def backward(g):
        ga = np.zeros_like(a.data)
        ga[index] = np.sum(g)
        return (ga,)

    return _make(np.asarray(a.data[index]), (a,), backward, owned=True)
