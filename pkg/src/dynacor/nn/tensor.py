"""Reverse-mode automatic differentiation over float64 numpy arrays.

The op set is deliberately small: exactly what the classifier, the dynamics
encoder, and the clustering objective need. Everything is float64 and every
op is deterministic given identical inputs, so whole training runs replay
bit-for-bit from a seed.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

Array = np.ndarray


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """A float64 array with an optional same-shape gradient buffer.

    `grad` is lazily allocated on the first accumulation and matches
    `data.shape` whenever present.
    """

    __slots__ = ("data", "grad", "requires_grad", "_backward", "_parents")

    def __init__(self, data, requires_grad: bool = False):
        self.data: Array = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Array | None = None
        self._backward: Callable[[], None] | None = None
        self._parents: tuple[Tensor, ...] = ()

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: Array) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self) -> None:
        """Backpropagate from a scalar output through the recorded graph."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                stack.append((parent, False))
        self._accumulate(np.ones_like(self.data))
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()

    # ---- graph construction helpers ------------------------------------

    @staticmethod
    def _lift(value) -> "Tensor":
        return value if isinstance(value, Tensor) else Tensor(value)

    def _make(self, data: Array, parents: tuple["Tensor", ...],
              backward: Callable[["Tensor"], Callable[[], None]]) -> "Tensor":
        out = Tensor(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = parents
            out._backward = backward(out)
        return out

    # ---- arithmetic ------------------------------------------------------

    def __add__(self, other) -> "Tensor":
        other = self._lift(other)

        def bw(out: Tensor):
            def run():
                if self.requires_grad:
                    self._accumulate(_unbroadcast(out.grad, self.shape))
                if other.requires_grad:
                    other._accumulate(_unbroadcast(out.grad, other.shape))
            return run

        return self._make(self.data + other.data, (self, other), bw)

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        def bw(out: Tensor):
            def run():
                if self.requires_grad:
                    self._accumulate(-out.grad)
            return run

        return self._make(-self.data, (self,), bw)

    def __sub__(self, other) -> "Tensor":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "Tensor":
        return self._lift(other) + (-self)

    def __mul__(self, other) -> "Tensor":
        other = self._lift(other)

        def bw(out: Tensor):
            def run():
                if self.requires_grad:
                    self._accumulate(_unbroadcast(out.grad * other.data, self.shape))
                if other.requires_grad:
                    other._accumulate(_unbroadcast(out.grad * self.data, other.shape))
            return run

        return self._make(self.data * other.data, (self, other), bw)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        other = self._lift(other)

        def bw(out: Tensor):
            def run():
                if self.requires_grad:
                    self._accumulate(_unbroadcast(out.grad / other.data, self.shape))
                if other.requires_grad:
                    g = -out.grad * self.data / (other.data * other.data)
                    other._accumulate(_unbroadcast(g, other.shape))
            return run

        return self._make(self.data / other.data, (self, other), bw)

    def __rtruediv__(self, other) -> "Tensor":
        return self._lift(other) / self

    def __matmul__(self, other) -> "Tensor":
        other = self._lift(other)
        if self.data.ndim != 2 or other.data.ndim != 2:
            raise ValueError("matmul supports 2-D operands only")

        def bw(out: Tensor):
            def run():
                if self.requires_grad:
                    self._accumulate(out.grad @ other.data.T)
                if other.requires_grad:
                    other._accumulate(self.data.T @ out.grad)
            return run

        return self._make(self.data @ other.data, (self, other), bw)

    # ---- nonlinearities and reductions ----------------------------------

    def relu(self) -> "Tensor":
        mask = self.data > 0.0

        def bw(out: Tensor):
            def run():
                if self.requires_grad:
                    self._accumulate(out.grad * mask)
            return run

        return self._make(self.data * mask, (self,), bw)

    def log(self) -> "Tensor":
        def bw(out: Tensor):
            def run():
                if self.requires_grad:
                    self._accumulate(out.grad / self.data)
            return run

        return self._make(np.log(self.data), (self,), bw)

    def sqrt(self) -> "Tensor":
        root = np.sqrt(self.data)

        def bw(out: Tensor):
            def run():
                if self.requires_grad:
                    self._accumulate(out.grad * 0.5 / root)
            return run

        return self._make(root, (self,), bw)

    def sum(self, axis: int | None = None, keepdims: bool = False) -> "Tensor":
        def bw(out: Tensor):
            def run():
                if not self.requires_grad:
                    return
                g = out.grad
                if axis is not None and not keepdims:
                    g = np.expand_dims(g, axis)
                self._accumulate(np.broadcast_to(g, self.shape).copy())
            return run

        return self._make(self.data.sum(axis=axis, keepdims=keepdims), (self,), bw)

    def mean(self, axis: int | None = None, keepdims: bool = False) -> "Tensor":
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape: int) -> "Tensor":
        old = self.data.shape

        def bw(out: Tensor):
            def run():
                if self.requires_grad:
                    self._accumulate(out.grad.reshape(old))
            return run

        return self._make(self.data.reshape(*shape), (self,), bw)
