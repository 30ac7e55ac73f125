"""Reference attribution methods for the masking benchmark.

Gradient saliency, SmoothGrad, integrated gradients, and occlusion, plus a
seeded random-score control. Each returns per-feature scores in the same
container so the evaluation harness can treat every method uniformly.
Methods needing architecture-specific backward rules (guided backprop, LRP,
DeepLIFT) are deliberately absent; external score files can stand in for
them at evaluation time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .explain import FeaturePartition


@dataclass(frozen=True)
class AttributionMap:
    """Per-feature scores from one attribution method.

    ``completeness_error`` is populated only by integrated gradients:
    |sum of attributions - (f_c(x) - f_c(x0))|.
    """

    per_feature: np.ndarray
    method: str
    shape: tuple | None = None
    completeness_error: float | None = None

    def __post_init__(self):
        arr = np.asarray(self.per_feature, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("per_feature must be a vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("scores must be finite")
        object.__setattr__(self, "per_feature", arr)


def gradient_saliency(model, x):
    """|grad of the predicted-class output| per feature."""
    x = np.asarray(x, dtype=np.float64)
    c = model.predict_class(x)
    return AttributionMap(np.abs(model.gradient(x, c)), method="gradient")


def smoothgrad(model, x, num_noises, sigma, seed):
    """Mean of |grad f_c| over Gaussian-jittered copies of the input.

    The class c is fixed at the unperturbed input. With num_noises=1 and
    sigma=0 this reduces to gradient_saliency bit-for-bit.
    """
    if num_noises < 1:
        raise ValueError("num_noises must be >= 1")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    c = model.predict_class(x)
    rng = np.random.default_rng(seed)
    total = np.zeros(x.size)
    for _ in range(num_noises):
        noise = rng.normal(0.0, sigma, size=x.size)
        total += np.abs(model.gradient(x + noise, c))
    return AttributionMap(total / num_noises, method="smoothgrad")


def integrated_gradients(model, x, baseline_point, steps):
    """Path-integral attribution from a baseline point to the input.

    Uses the midpoint Riemann grid alpha = (t+0.5)/steps, which is exact for
    linear models at any step count. The completeness identity
    sum(attr) = f_c(x) - f_c(x0) is checked and its absolute error stored on
    the returned map.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    x0 = np.asarray(baseline_point, dtype=np.float64)
    if x0.shape != x.shape:
        raise ValueError("baseline_point dimension does not match input")
    c = model.predict_class(x)
    diff = x - x0
    grad_sum = np.zeros(x.size)
    for t in range(steps):
        alpha = (t + 0.5) / steps
        grad_sum += model.gradient(x0 + alpha * diff, c)
    attr = diff * (grad_sum / steps)
    gap = model.forward(x)[c] - model.forward(x0)[c]
    return AttributionMap(attr, method="intgrad",
                          completeness_error=float(abs(attr.sum() - gap)))


def occlusion(model, x, mask_shape, mask_value=0.5, input_shape=None):
    """Output drop when a tile of the input is replaced by mask_value.

    Tiles are non-overlapping. ``mask_shape`` is (h, w) or (h, w, ch) with
    ch either 1 (each channel its own tile) or the full channel count (a
    tile spans all channels, as in a (12, 12, 3) mask on RGB input). When
    ``input_shape`` is omitted the input is treated as a 1 x d x 1 image, so
    mask_shape (1, 1) scores each feature individually.
    """
    x = np.asarray(x, dtype=np.float64)
    if input_shape is None:
        input_shape = (1, x.size, 1)
    if len(input_shape) == 2:
        input_shape = (*input_shape, 1)
    h, w, nchan = (int(s) for s in input_shape)
    if h * w * nchan != x.size:
        raise ValueError("input_shape does not match the input dimension")
    if len(mask_shape) == 2:
        mh, mw = mask_shape
        per_channel = True
    elif len(mask_shape) == 3:
        mh, mw, mc = mask_shape
        if mc == nchan:
            per_channel = False
        elif mc == 1:
            per_channel = True
        else:
            raise ValueError("mask channel count must be 1 or the full count")
    else:
        raise ValueError("mask_shape must be (h, w) or (h, w, ch)")
    tiles = FeaturePartition.from_grid((h, w, nchan), int(mh), int(mw),
                                       per_channel=per_channel)
    c = model.predict_class(x)
    base = model.forward(x)[c]
    per_feature = np.empty(x.size)
    for tile in tiles.groups:
        masked = x.copy()
        masked[tile] = mask_value
        per_feature[tile] = base - model.forward(masked)[c]
    return AttributionMap(per_feature, method="occlusion", shape=(h, w, nchan))


def random_scores(dim, seed):
    """Seeded uniform scores; the no-information control for the harness."""
    rng = np.random.default_rng(seed)
    return AttributionMap(rng.uniform(0.0, 1.0, size=int(dim)), method="random")
