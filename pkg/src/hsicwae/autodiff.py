"""Reverse-mode automatic differentiation over dense float64 matrices.

Every tensor is a 2-D (rows, cols) float64 array; scalars are (1, 1) and
vectors are (1, n). Building an expression evaluates it immediately and
records the operation, so the graph reachable from any node is its own
tape: parents always precede children in creation order, which is the
topological order `backward` replays.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .errors import NonFiniteError, ShapeError

Array = np.ndarray


def _as_matrix(value) -> Array:
    v = np.asarray(value, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1, 1)
    elif v.ndim == 1:
        v = v.reshape(1, -1)
    elif v.ndim != 2:
        raise ShapeError(f"tensors are 2-D matrices, got ndim={v.ndim}")
    return v


def _check_finite(v: Array, op: str) -> None:
    # Fast path is a single reduction: any NaN/Inf entry makes the sum
    # non-finite (inf + -inf -> nan). A finite-but-overflowing sum is
    # re-screened entry-wise before raising.
    s = v.sum()
    if not np.isfinite(s) and not np.isfinite(v).all():
        raise NonFiniteError(f"non-finite values in output of '{op}'")


class Tensor:
    """A node in the eagerly evaluated computation graph."""

    __slots__ = ("value", "op", "parents", "requires_grad", "grad", "tag", "_backward")

    def __init__(
        self,
        value,
        op: str = "leaf",
        parents: tuple["Tensor", ...] = (),
        requires_grad: bool = False,
        backward: Optional[Callable[[Array], None]] = None,
    ):
        self.value = _as_matrix(value)
        _check_finite(self.value, op)
        self.op = op
        self.parents = parents
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self.grad: Optional[Array] = None
        self.tag: Optional[str] = None
        self._backward = backward

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def item(self) -> float:
        if self.shape != (1, 1):
            raise ShapeError(f"item() on non-scalar tensor of shape {self.shape}")
        return float(self.value[0, 0])

    def backward(self) -> None:
        """Fill `.grad` on every reachable tensor with requires_grad set.

        The output must be scalar-shaped (1, 1); gradients are accumulated
        in reverse topological order, deterministically for a fixed graph.
        """
        if self.shape != (1, 1):
            raise ShapeError(f"backward requires a (1, 1) output, got {self.shape}")
        order = topo_order(self)
        for node in order:
            node.grad = None
        self.grad = np.ones((1, 1))
        for node in reversed(order):
            if node.grad is not None and node._backward is not None:
                node._backward(node.grad)

    def __repr__(self) -> str:
        return f"<Tensor {self.op} {self.shape}>"

    # operator sugar; python scalars become (1, 1) constants
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __matmul__(self, other):
        return matmul(self, other)


def constant(value) -> Tensor:
    return Tensor(value, op="const")


def parameter(value) -> Tensor:
    return Tensor(value, op="param", requires_grad=True)


def _wrap(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return constant(x)


def topo_order(root: Tensor) -> list[Tensor]:
    """Topological order of the subgraph under `root`: parents first."""
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
        for p in reversed(node.parents):
            if id(p) not in seen:
                stack.append((p, False))
    return order


def collect_tags(root: Tensor) -> list[str]:
    """All non-empty node tags under `root`, in topological order."""
    return [n.tag for n in topo_order(root) if n.tag is not None]


def _accum(node: Tensor, g: Array) -> None:
    if node.requires_grad:
        node.grad = g if node.grad is None else node.grad + g


def _reduce_to(g: Array, shape: tuple[int, int]) -> Array:
    # Undo row/scalar broadcasting by summing the broadcast axes.
    if g.shape == shape:
        return g
    if shape == (1, 1):
        return g.sum().reshape(1, 1)
    return g.sum(axis=0, keepdims=True)


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> tuple[int, int]:
    sa, sb = a.shape, b.shape
    if sa == sb:
        return sa
    for x, y in ((sa, sb), (sb, sa)):
        if y == (1, 1) or (y == (1, x[1]) and x[0] >= 1):
            return x
    raise ShapeError(f"{op}: incompatible shapes {sa} and {sb}")


def add(a: Tensor, b: Tensor) -> Tensor:
    out_shape = _broadcast_shape("add", a, b)
    out = Tensor(a.value + b.value, op="add", parents=(a, b))
    assert out.shape == out_shape

    def backward(g: Array) -> None:
        _accum(a, _reduce_to(g, a.shape))
        _accum(b, _reduce_to(g, b.shape))

    out._backward = backward
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    out_shape = _broadcast_shape("sub", a, b)
    out = Tensor(a.value - b.value, op="sub", parents=(a, b))
    assert out.shape == out_shape

    def backward(g: Array) -> None:
        _accum(a, _reduce_to(g, a.shape))
        _accum(b, _reduce_to(-g, b.shape))

    out._backward = backward
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_shape = _broadcast_shape("mul", a, b)
    out = Tensor(a.value * b.value, op="mul", parents=(a, b))
    assert out.shape == out_shape

    def backward(g: Array) -> None:
        _accum(a, _reduce_to(g * b.value, a.shape))
        _accum(b, _reduce_to(g * a.value, b.shape))

    out._backward = backward
    return out


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    if not np.isfinite(c):
        raise NonFiniteError("scale: non-finite scalar coefficient")
    out = Tensor(a.value * c, op="scale", parents=(a,))

    def backward(g: Array) -> None:
        _accum(a, g * c)

    out._backward = backward
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ ({a.shape} @ {b.shape})")
    out = Tensor(a.value @ b.value, op="matmul", parents=(a, b))
    assert out.shape == (a.shape[0], b.shape[1])

    def backward(g: Array) -> None:
        if a.requires_grad:
            _accum(a, g @ b.value.T)
        if b.requires_grad:
            _accum(b, a.value.T @ g)

    out._backward = backward
    return out


def transpose(a: Tensor) -> Tensor:
    out = Tensor(a.value.T, op="transpose", parents=(a,))

    def backward(g: Array) -> None:
        _accum(a, g.T)

    out._backward = backward
    return out


def exp(a: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        v = np.exp(a.value)
    out = Tensor(v, op="exp", parents=(a,))

    def backward(g: Array) -> None:
        _accum(a, g * out.value)

    out._backward = backward
    return out


def rsqrt(a: Tensor) -> Tensor:
    """Elementwise 1/sqrt(x); inputs must be strictly positive."""
    with np.errstate(divide="ignore", invalid="ignore"):
        v = 1.0 / np.sqrt(a.value)
    out = Tensor(v, op="rsqrt", parents=(a,))

    def backward(g: Array) -> None:
        _accum(a, -0.5 * g * out.value ** 3)

    out._backward = backward
    return out


def sum_all(a: Tensor) -> Tensor:
    out = Tensor(a.value.sum().reshape(1, 1), op="sum", parents=(a,))

    def backward(g: Array) -> None:
        _accum(a, np.full(a.shape, g[0, 0]))

    out._backward = backward
    return out


def mean_all(a: Tensor) -> Tensor:
    size = a.value.size
    out = Tensor(a.value.mean().reshape(1, 1), op="mean", parents=(a,))

    def backward(g: Array) -> None:
        _accum(a, np.full(a.shape, g[0, 0] / size))

    out._backward = backward
    return out


def pairwise_sqdist(a: Tensor, b: Tensor) -> Tensor:
    """Squared Euclidean distances between the rows of `a` and of `b`."""
    if a.shape[1] != b.shape[1]:
        raise ShapeError(
            f"pairwise_sqdist: row dimensions differ ({a.shape} vs {b.shape})"
        )
    av, bv = a.value, b.value
    sq = (av * av).sum(axis=1)[:, None] + (bv * bv).sum(axis=1)[None, :] - 2.0 * (av @ bv.T)
    np.maximum(sq, 0.0, out=sq)
    out = Tensor(sq, op="pairwise_sqdist", parents=(a, b))
    assert out.shape == (a.shape[0], b.shape[0])

    def backward(g: Array) -> None:
        # d/da_ik sum_ij g_ij ||a_i - b_j||^2 = 2 (a_ik sum_j g_ij - (g b)_ik)
        if a.requires_grad:
            _accum(a, 2.0 * (g.sum(axis=1, keepdims=True) * av - g @ bv))
        if b.requires_grad:
            _accum(b, 2.0 * (g.sum(axis=0)[:, None] * bv - g.T @ av))

    out._backward = backward
    return out


def rows(a: Tensor, start: int, stop: int) -> Tensor:
    if not (0 <= start < stop <= a.shape[0]):
        raise ShapeError(f"rows: slice [{start}:{stop}] out of range for {a.shape}")
    out = Tensor(a.value[start:stop, :], op="rows", parents=(a,))

    def backward(g: Array) -> None:
        if a.requires_grad:
            full = np.zeros(a.shape)
            full[start:stop, :] = g
            _accum(a, full)

    out._backward = backward
    return out


def cols(a: Tensor, start: int, stop: int) -> Tensor:
    if not (0 <= start < stop <= a.shape[1]):
        raise ShapeError(f"cols: slice [{start}:{stop}] out of range for {a.shape}")
    out = Tensor(a.value[:, start:stop], op="cols", parents=(a,))

    def backward(g: Array) -> None:
        if a.requires_grad:
            full = np.zeros(a.shape)
            full[:, start:stop] = g
            _accum(a, full)

    out._backward = backward
    return out


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    pos = a.value > 0
    out = Tensor(np.where(pos, a.value, slope * a.value), op="leaky_relu", parents=(a,))

    def backward(g: Array) -> None:
        _accum(a, g * np.where(pos, 1.0, slope))

    out._backward = backward
    return out


def sigmoid(a: Tensor) -> Tensor:
    v = a.value
    s = np.empty_like(v)
    pos = v >= 0
    s[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    e = np.exp(v[~pos])
    s[~pos] = e / (1.0 + e)
    out = Tensor(s, op="sigmoid", parents=(a,))

    def backward(g: Array) -> None:
        _accum(a, g * out.value * (1.0 - out.value))

    out._backward = backward
    return out


def trace(a: Tensor) -> Tensor:
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"trace: matrix must be square, got {a.shape}")
    out = Tensor(np.trace(a.value).reshape(1, 1), op="trace", parents=(a,))

    def backward(g: Array) -> None:
        if a.requires_grad:
            _accum(a, g[0, 0] * np.eye(a.shape[0]))

    out._backward = backward
    return out
