"""Small dense feed-forward classifiers with per-class input gradients.

Models are plain stacks of dense layers evaluated in float64. They are
immutable after construction, so ``forward`` / ``gradient`` are safe to call
from any number of workers. Outputs can be read either as raw logits or
through a terminal softmax; the predicted class is the same either way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("identity", "relu", "tanh")
OUTPUT_LAYERS = ("logits", "softmax")


def _check_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")


@dataclass(frozen=True)
class DenseLayer:
    """One dense layer: ``act(weights @ x + bias)``."""

    weights: np.ndarray
    bias: np.ndarray
    activation: str = "identity"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError(f"weights must be a 2-D matrix, got ndim={w.ndim}")
        if b.shape != (w.shape[0],):
            raise ValueError(
                f"bias shape {b.shape} does not match weights rows {w.shape[0]}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}; "
                             f"expected one of {ACTIVATIONS}")
        _check_finite("weights", w)
        _check_finite("bias", b)
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self):
        return self.weights.shape[1]

    @property
    def out_dim(self):
        return self.weights.shape[0]

    def apply(self, x):
        z = self.weights @ x + self.bias
        if self.activation == "relu":
            return np.maximum(z, 0.0), z
        if self.activation == "tanh":
            return np.tanh(z), z
        return z, z

    def activation_derivative(self, z):
        # relu'(0) is defined as 0 (one-sided).
        if self.activation == "relu":
            return np.where(z > 0.0, 1.0, 0.0)
        if self.activation == "tanh":
            t = np.tanh(z)
            return 1.0 - t * t
        return np.ones_like(z)


@dataclass(frozen=True)
class Model:
    """Dense classifier; ``output_layer`` selects logits or softmax outputs."""

    layers: tuple[DenseLayer, ...]
    output_layer: str = "logits"

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("model needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ValueError(
                    f"layer dimensions do not chain: {prev.out_dim} -> {nxt.in_dim}")
        if self.output_layer not in OUTPUT_LAYERS:
            raise ValueError(f"output_layer must be one of {OUTPUT_LAYERS}")
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self):
        return self.layers[0].in_dim

    @property
    def num_classes(self):
        return self.layers[-1].out_dim

    def with_output_layer(self, output_layer):
        if output_layer == self.output_layer:
            return self
        return Model(self.layers, output_layer=output_layer)

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.input_dim,):
            raise ValueError(
                f"input shape {x.shape} does not match model input_dim {self.input_dim}")
        _check_finite("input", x)
        return x

    def _forward_trace(self, x):
        """Forward pass keeping pre-activations for the backward sweep."""
        a = x
        pre = []
        for layer in self.layers:
            a, z = layer.apply(a)
            pre.append(z)
        return a, pre

    def forward(self, x):
        """Model outputs for one input; logits or softmax per ``output_layer``."""
        x = self._check_input(x)
        y, _ = self._forward_trace(x)
        if self.output_layer == "softmax":
            return _softmax(y)
        return y

    def predict_class(self, x):
        """Index of the maximal output; ties break to the lowest index."""
        return int(np.argmax(self.forward(x)))

    def gradient(self, x, j):
        """Gradient of output ``j`` with respect to the input.

        Reverse-mode accumulation through the layer stack. With softmax
        outputs the seed is the softmax Jacobian row, so one backward pass
        still suffices.
        """
        x = self._check_input(x)
        if not 0 <= j < self.num_classes:
            raise ValueError(f"class index {j} out of range [0, {self.num_classes})")
        y, pre = self._forward_trace(x)
        seed = np.zeros(self.num_classes)
        if self.output_layer == "softmax":
            p = _softmax(y)
            seed = -p[j] * p
            seed[j] += p[j]
        else:
            seed[j] = 1.0
        grad = seed
        for layer, z in zip(reversed(self.layers), reversed(pre)):
            grad = layer.weights.T @ (grad * layer.activation_derivative(z))
        return grad


def _softmax(y):
    e = np.exp(y - np.max(y))
    return e / np.sum(e)


def finite_difference_gradient(model, x, j, step=1e-5):
    """Central-difference gradient oracle: only uses ``model.forward``."""
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += step
        xm[i] -= step
        grad[i] = (model.forward(xp)[j] - model.forward(xm)[j]) / (2.0 * step)
    return grad
