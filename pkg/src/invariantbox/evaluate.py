"""Quantile-masking benchmark for attribution methods.

Protocol: score every feature of an input, replace the features scoring
strictly below the tau-percent quantile (per input, linear-interpolation
percentile) with a fixed mask value, and record whether the predicted class
changed. The fraction of changed predictions over a dataset, as a function
of tau, is the method's change-ratio curve; flatter is better, since a good
method keeps the decisive features unmasked.

All per-input randomness (SmoothGrad noise, random-score control, smoothing
draws of the proposed method) is seeded from a hash of the input's bytes
mixed with the master seed and the method name. Scores therefore depend
only on the input's content, never on dataset position or worker count,
which makes curves invariant to dataset permutation and to --jobs.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import baselines as bl
from .explain import FeaturePartition, SmoothingConfig, explain


@dataclass(frozen=True)
class Dataset:
    """Inputs stacked row-wise, with optional shape metadata and labels."""

    inputs: np.ndarray
    shape: tuple | None = None
    labels: np.ndarray | None = None

    def __post_init__(self):
        arr = np.asarray(self.inputs, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise ValueError("inputs must be a nonempty (n, d) matrix")
        if not np.all(np.isfinite(arr)):
            raise ValueError("inputs must be finite")
        object.__setattr__(self, "inputs", arr)
        if self.shape is not None:
            shape = tuple(int(s) for s in self.shape)
            if int(np.prod(shape)) != arr.shape[1]:
                raise ValueError("shape metadata does not match input width")
            object.__setattr__(self, "shape", shape)
        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.shape != (arr.shape[0],):
                raise ValueError("labels must have one entry per input")
            object.__setattr__(self, "labels", lab)

    def __len__(self):
        return self.inputs.shape[0]


@dataclass(frozen=True)
class MaskSpec:
    """Masking protocol parameters: replacement value and quantile grid."""

    mask_value: float = 0.5
    tau_grid: tuple = (0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100)

    def __post_init__(self):
        taus = tuple(float(t) for t in self.tau_grid)
        if not taus:
            raise ValueError("tau_grid must be nonempty")
        if any(t < 0 or t > 100 for t in taus):
            raise ValueError("quantiles must lie in [0, 100]")
        if list(taus) != sorted(taus):
            raise ValueError("tau_grid must be sorted ascending")
        object.__setattr__(self, "tau_grid", taus)


@dataclass(frozen=True)
class EvalCurve:
    """Change ratio per quantile for one method."""

    method: str
    taus: tuple
    change_ratios: tuple

    def __post_init__(self):
        if len(self.taus) != len(self.change_ratios):
            raise ValueError("taus and change_ratios must align")
        if any(r < 0 or r > 1 for r in self.change_ratios):
            raise ValueError("change ratios must lie in [0, 1]")
        object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))
        object.__setattr__(self, "change_ratios",
                           tuple(float(r) for r in self.change_ratios))


def derive_seed(master_seed, method, x):
    """Per-input RNG seed from (master seed, method tag, input bytes)."""
    x = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    digest = hashlib.sha256()
    digest.update(int(master_seed).to_bytes(8, "little", signed=True))
    digest.update(method.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(x.tobytes())
    return int.from_bytes(digest.digest()[:8], "little")


def mask_input(x, scores, tau, mask_value=0.5):
    """Replace features scoring strictly below the tau-percentile.

    The threshold is the linear-interpolation percentile of this input's own
    score vector; ties at the threshold stay unmasked. tau=0 returns the
    input unchanged (nothing lies strictly below the minimum).
    """
    x = np.asarray(x, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != x.shape:
        raise ValueError("scores and input must have the same dimension")
    if not 0 <= tau <= 100:
        raise ValueError("tau must lie in [0, 100]")
    threshold = np.percentile(scores, tau)
    masked = x.copy()
    masked[scores < threshold] = mask_value
    return masked


def _scores_of(provider, x, index):
    raw = provider(x, index)
    return raw.per_feature if isinstance(raw, bl.AttributionMap) else np.asarray(raw)


def change_ratio_curve(model, dataset, score_provider, spec, method="scores",
                       jobs=1):
    """Fraction of inputs whose prediction flips after masking, per tau.

    score_provider is called as provider(x, index) and may return either an
    AttributionMap or a bare score vector. Inputs are processed
    independently (optionally in a thread pool) and reduced in dataset
    order, so the curve does not depend on jobs.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    taus = np.asarray(spec.tau_grid)

    def one_input(item):
        index, x = item
        base_class = model.predict_class(x)
        scores = _scores_of(score_provider, x, index)
        changed = np.empty(taus.size, dtype=np.int64)
        for ti, tau in enumerate(taus):
            masked = mask_input(x, scores, tau, spec.mask_value)
            changed[ti] = int(model.predict_class(masked) != base_class)
        return changed

    items = list(enumerate(dataset.inputs))
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as pool:
            rows = list(pool.map(one_input, items))
    else:
        rows = [one_input(item) for item in items]
    counts = np.zeros(taus.size, dtype=np.int64)
    for row in rows:  # ordered reduction (exact with integer counts)
        counts += row
    ratios = counts / float(len(dataset))
    return EvalCurve(method=method, taus=tuple(taus.tolist()),
                     change_ratios=tuple(ratios.tolist()))


def compare_methods(model, dataset, providers, spec, jobs=1):
    """One change-ratio curve per named provider, over identical masks.

    providers is an ordered mapping name -> provider(x, index).
    """
    if not providers:
        raise ValueError("need at least one method")
    return [change_ratio_curve(model, dataset, provider, spec,
                               method=name, jobs=jobs)
            for name, provider in providers.items()]


@dataclass(frozen=True)
class MethodConfig:
    """Knobs shared by the score providers (CLI plumbing lives here)."""

    delta: float = 0.1
    lam: float | None = None
    soft: bool = True
    partition_shape: tuple | None = None
    patch: tuple | None = None      # (h, w) or None for singleton groups
    smooth_n: int = 9
    smooth_sigma: float = 0.05
    noise_offset: str = "anchor"
    mask_value: float = 0.5
    ig_steps: int = 128
    backend: str | None = None
    external_scores: np.ndarray | None = field(default=None, repr=False)


def _partition_for(dim, cfg):
    if cfg.patch is None:
        return FeaturePartition.singletons(dim)
    if cfg.partition_shape is None:
        raise ValueError("patch partitioning needs input shape metadata")
    return FeaturePartition.from_grid(cfg.partition_shape,
                                      cfg.patch[0], cfg.patch[1])


def make_score_provider(name, model, master_seed, cfg=None):
    """Build a provider(x, index) for a method name.

    Known names: proposed, gradient, smoothgrad, intgrad, occlusion,
    random. "file" serves externally computed per-input scores from
    cfg.external_scores (positional, one row per dataset input).
    """
    cfg = cfg or MethodConfig()
    if name == "invariant-box":
        name = "proposed"

    if name == "proposed":
        def provider(x, index):
            x = np.asarray(x, dtype=np.float64)
            smoothing = None
            if cfg.smooth_n > 0:
                smoothing = SmoothingConfig(
                    num_noises=cfg.smooth_n, sigma=cfg.smooth_sigma,
                    seed=derive_seed(master_seed, "proposed", x))
            _, scores = explain(model, x,
                                partition=_partition_for(x.size, cfg),
                                delta=cfg.delta, lam=cfg.lam, soft=cfg.soft,
                                smoothing=smoothing,
                                noise_offset=cfg.noise_offset,
                                backend=cfg.backend)
            return scores.per_feature
    elif name == "gradient":
        def provider(x, index):
            return bl.gradient_saliency(model, x)
    elif name == "smoothgrad":
        def provider(x, index):
            x = np.asarray(x, dtype=np.float64)
            return bl.smoothgrad(model, x, num_noises=max(cfg.smooth_n, 1),
                                 sigma=cfg.smooth_sigma,
                                 seed=derive_seed(master_seed, "smoothgrad", x))
    elif name == "intgrad":
        def provider(x, index):
            x = np.asarray(x, dtype=np.float64)
            baseline_point = np.full(x.size, cfg.mask_value)
            return bl.integrated_gradients(model, x, baseline_point,
                                           steps=cfg.ig_steps)
    elif name == "occlusion":
        def provider(x, index):
            x = np.asarray(x, dtype=np.float64)
            if cfg.patch is not None and cfg.partition_shape is not None:
                shape = cfg.partition_shape
                mask_shape = (*cfg.patch, shape[2] if len(shape) == 3 else 1)
            else:
                shape = None
                mask_shape = (1, 1)
            return bl.occlusion(model, x, mask_shape,
                                mask_value=cfg.mask_value, input_shape=shape)
    elif name == "random":
        def provider(x, index):
            return bl.random_scores(np.asarray(x).size,
                                    derive_seed(master_seed, "random", x))
    elif name == "file":
        if cfg.external_scores is None:
            raise ValueError("method 'file' needs external_scores in the config")
        table = np.asarray(cfg.external_scores, dtype=np.float64)

        def provider(x, index):
            if index >= table.shape[0]:
                raise ValueError("external score table is shorter than the dataset")
            return table[index]
    else:
        raise ValueError(f"unknown method {name!r}")
    return provider
