"""Dense and 1-D convolution layers with hand-derived backward passes.

Weights are initialized uniformly in +/- sqrt(6 / (fan_in + fan_out)),
biases at zero. Conv1d uses valid padding and stride 1, so an input of
length L and a kernel of width k produce L - k + 1 output positions.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import InvalidShapeError
from .tensor import Tensor


def _uniform_init(rng: np.random.Generator, shape: tuple[int, ...],
                  fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


class Dense:
    """Affine map y = x @ W + b on (batch, in_dim) inputs."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Tensor(_uniform_init(rng, (in_dim, out_dim), in_dim, out_dim),
                             requires_grad=True)
        self.bias = Tensor(np.zeros(out_dim), requires_grad=True)

    @property
    def params(self) -> list[Tensor]:
        return [self.weight, self.bias]

    def __call__(self, x: Tensor) -> Tensor:
        if x.data.ndim != 2 or x.data.shape[1] != self.in_dim:
            raise InvalidShapeError(
                f"dense expects (batch, {self.in_dim}), got {x.data.shape}")
        return x @ self.weight + self.bias


def conv1d(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Valid cross-correlation of (B, C_in, L) with (C_out, C_in, k) kernels."""
    if x.data.ndim != 3 or weight.data.ndim != 3:
        raise InvalidShapeError("conv1d expects (B, C_in, L) input and (C_out, C_in, k) kernel")
    batch, c_in, length = x.data.shape
    c_out, c_in_w, k = weight.data.shape
    if c_in != c_in_w:
        raise InvalidShapeError(f"conv1d channel mismatch: input {c_in}, kernel {c_in_w}")
    if not 1 <= k <= length:
        raise InvalidShapeError(f"conv1d kernel width {k} invalid for input length {length}")

    windows = sliding_window_view(x.data, k, axis=2)  # (B, C_in, L_out, k)
    out_data = np.einsum("bclk,ock->bol", windows, weight.data, optimize=True)
    out_data = out_data + bias.data[:, None]

    out = Tensor(out_data)
    if x.requires_grad or weight.requires_grad or bias.requires_grad:
        out.requires_grad = True
        out._parents = (x, weight, bias)
        l_out = length - k + 1

        def run():
            g = out.grad
            if weight.requires_grad:
                weight._accumulate(np.einsum("bol,bclk->ock", g, windows, optimize=True))
            if bias.requires_grad:
                bias._accumulate(g.sum(axis=(0, 2)))
            if x.requires_grad:
                g_win = np.einsum("bol,ock->bclk", g, weight.data, optimize=True)
                gx = np.zeros_like(x.data)
                for j in range(k):
                    gx[:, :, j:j + l_out] += g_win[:, :, :, j]
                x._accumulate(gx)

        out._backward = run
    return out


class Conv1d:
    """1-D convolution layer (valid padding, stride 1) with a rectifier-free output."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int,
                 rng: np.random.Generator):
        if kernel < 1:
            raise InvalidShapeError("conv1d kernel width must be >= 1")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.weight = Tensor(
            _uniform_init(rng, (out_channels, in_channels, kernel),
                          in_channels * kernel, out_channels * kernel),
            requires_grad=True)
        self.bias = Tensor(np.zeros(out_channels), requires_grad=True)

    @property
    def params(self) -> list[Tensor]:
        return [self.weight, self.bias]

    def __call__(self, x: Tensor) -> Tensor:
        return conv1d(x, self.weight, self.bias)


class Mlp:
    """Stack of dense layers with rectifier activations between them."""

    def __init__(self, sizes: list[int], rng: np.random.Generator):
        if len(sizes) < 2:
            raise InvalidShapeError("mlp needs at least input and output sizes")
        self.layers = [Dense(a, b, rng) for a, b in zip(sizes[:-1], sizes[1:])]

    @property
    def params(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.params]

    def __call__(self, x: Tensor) -> Tensor:
        for layer in self.layers[:-1]:
            x = layer(x).relu()
        return self.layers[-1](x)

    def logits(self, features: np.ndarray) -> np.ndarray:
        """Forward pass on raw arrays without touching gradients."""
        return self(Tensor(features)).data
