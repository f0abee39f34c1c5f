"""Reverse-mode automatic differentiation over numpy arrays.

A :class:`Tensor` wraps an ndarray (real or complex) and, when it takes part
in a differentiable computation, records its parents and a closure that
pushes its gradient back to them.

Complex values use the convention ``grad = dL/dRe + 1j * dL/dIm`` for a real
scalar loss ``L``.  With that convention a complex-linear map ``z = a * b``
backpropagates ``grad_a = grad_z * conj(b)``.
"""
from __future__ import annotations

import numpy as np

_DTYPES = {"f32": np.float32, "f64": np.float64}


def as_dtype(tag: str):
    try:
        return _DTYPES[tag]
    except KeyError:
        raise ValueError(f"unknown precision tag {tag!r}; expected one of {sorted(_DTYPES)}")


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, _parents=(), name=None):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = None
        self.name = name

    # -- introspection -------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_complex(self):
        return np.iscomplexobj(self.data)

    def numpy(self):
        return self.data

    def item(self):
        return self.data.item()

    def __repr__(self):
        tag = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{tag})"

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    # -- graph plumbing ------------------------------------------------
    def _accumulate(self, g):
        if not self.requires_grad:
            return
        if not self.is_complex and np.iscomplexobj(g):
            g = g.real
        if g.shape != self.data.shape:
            g = _unbroadcast(g, self.data.shape)
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad += g

    def backward(self, grad=None):
        """Propagate gradients from this node to every reachable leaf.

        Each node is visited once, in reverse topological order.
        """
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed needs a scalar output")
            grad = np.ones_like(self.data)
        order = _toposort(self)
        self.grad = np.asarray(grad, dtype=self.data.dtype).copy()
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
        # drop interior grads so reused leaves are the only holders
        for node in order:
            if node._parents:
                node.grad = None
                node._backward = None
                node._parents = ()

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other):
        other = _lift(other)
        out = _result(self.data + other.data, (self, other))
        if out.requires_grad:
            def _bw(g):
                self._accumulate(g)
                other._accumulate(g)
            out._backward = _bw
        return out

    __radd__ = __add__

    def __neg__(self):
        out = _result(-self.data, (self,))
        if out.requires_grad:
            out._backward = lambda g: self._accumulate(-g)
        return out

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) + (-self)

    def __mul__(self, other):
        other = _lift(other)
        out = _result(self.data * other.data, (self, other))
        if out.requires_grad:
            def _bw(g):
                if self.requires_grad:
                    self._accumulate(g * np.conj(other.data))
                if other.requires_grad:
                    other._accumulate(g * np.conj(self.data))
            out._backward = _bw
        return out

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if isinstance(scalar, Tensor):
            raise TypeError("division is only supported by plain scalars")
        return self * (1.0 / scalar)

    def __pow__(self, p):
        out = _result(self.data**p, (self,))
        if out.requires_grad:
            out._backward = lambda g: self._accumulate(g * p * self.data ** (p - 1))
        return out

    def sum(self, axis=None, keepdims=False):
        out = _result(self.data.sum(axis=axis, keepdims=keepdims), (self,))
        if out.requires_grad:
            def _bw(g):
                if axis is not None and not keepdims:
                    g = np.expand_dims(g, axis)
                self._accumulate(np.broadcast_to(g, self.shape))
            out._backward = _bw
        return out

    def mean(self):
        return self.sum() * (1.0 / self.data.size)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = _result(self.data.reshape(shape), (self,))
        if out.requires_grad:
            out._backward = lambda g: self._accumulate(g.reshape(self.shape))
        return out

    def transpose(self, *axes):
        axes = tuple(axes) if axes else tuple(reversed(range(self.ndim)))
        inv = np.argsort(axes)
        out = _result(np.transpose(self.data, axes), (self,))
        if out.requires_grad:
            out._backward = lambda g: self._accumulate(np.transpose(g, inv))
        return out

    def __getitem__(self, idx):
        out = _result(self.data[idx], (self,))
        if out.requires_grad:
            def _bw(g):
                full = np.zeros_like(self.data)
                np.add.at(full, idx, g)
                self._accumulate(full)
            out._backward = _bw
        return out


def _lift(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data, parents):
    req = any(p.requires_grad for p in parents)
    return Tensor(data, requires_grad=req, _parents=parents if req else ())


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _toposort(root):
    order, seen = [], set()
    stack = [(root, False)]
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


def make_op(data, parents, backward):
    """Build a graph node from a forward value and a backward rule.

    ``backward(g)`` receives the output gradient and returns one gradient
    per parent (``None`` to skip).  Used by the fused layer primitives.
    """
    out = _result(data, tuple(parents))
    if out.requires_grad:
        def _bw(g):
            grads = backward(g)
            for p, gp in zip(parents, grads):
                if gp is not None and p.requires_grad:
                    p._accumulate(gp)
        out._backward = _bw
    return out


def parameter(data, name=None):
    return Tensor(np.array(data, copy=True), requires_grad=True, name=name)
