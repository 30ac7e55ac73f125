"""Maximally invariant box perturbations as feature scores.

Given a classifier and an input, the predicted class stays on top for every
perturbation ``r`` with ``f_pred(x+r) >= f_other(x+r)``. Linearizing each
class comparison at the input turns that condition into one inequality per
competing class; taking the worst corner of an axis-aligned perturbation box
removes the dependence on ``r`` and leaves a linear program over the box's
per-side widths. Features whose box sides stay small are the ones the output
is sensitive to, so the score of a feature group is ``2*delta - u - v``.

Three optional refinements, usable together:

* soft rows: a shared slack variable lets rows be violated at a linear
  penalty, which prevents near-duplicate classes from pinning every width
  to zero;
* parameter sharing: widths are tied within disjoint feature groups
  (image patches), shrinking the LP and smoothing the scores;
* smoothed anchors: extra rows from linearizations at noise-perturbed
  copies of the input add curvature information about the model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import lp as lp_mod
from .lp import LinearProgram

NOISE_OFFSET_MODES = ("anchor", "origin")


class InfeasibleConstraintsError(RuntimeError):
    """Hard-mode LP had no feasible point.

    Only smoothed rows can cause this: a noise draw may flip the linearized
    argmax, producing a row with a negative right-hand side. Soft mode keeps
    such rows satisfiable through the shared slack.
    """


@dataclass(frozen=True)
class LinearizedConstraint:
    """One linearized class comparison: ``h @ r <= g`` for perturbations r."""

    g: float
    h: np.ndarray
    source_class: int
    noise_tag: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "h", np.asarray(self.h, dtype=np.float64))
        object.__setattr__(self, "g", float(self.g))

    def worst_corner(self, down, up):
        """Box corner maximizing ``h @ r`` for per-feature widths (down, up)."""
        return np.where(self.h >= 0.0, up, -np.asarray(down))


class FeaturePartition:
    """Disjoint feature groups covering ``0..d-1`` (width-sharing units)."""

    def __init__(self, groups: Sequence[np.ndarray], dim: int | None = None,
                 grid: tuple | None = None):
        groups = [np.asarray(g, dtype=np.intp).reshape(-1) for g in groups]
        if not groups:
            raise ValueError("partition needs at least one group")
        concat = np.concatenate(groups)
        d = dim if dim is not None else (int(concat.max()) + 1 if concat.size else 0)
        cover = np.zeros(d, dtype=np.intp)
        for g in groups:
            if g.size == 0:
                raise ValueError("empty groups are not allowed")
            if g.min() < 0 or g.max() >= d:
                raise ValueError("group indices out of range")
            cover[g] += 1
        if np.any(cover != 1):
            raise ValueError("groups must be disjoint and cover every feature")
        self.groups = groups
        self.dim = d
        self.grid = grid
        # member -> group lookup used to broadcast group values to features
        self.group_of = np.empty(d, dtype=np.intp)
        for gi, g in enumerate(groups):
            self.group_of[g] = gi

    @property
    def num_groups(self):
        return len(self.groups)

    @classmethod
    def singletons(cls, dim):
        """One group per feature (no sharing)."""
        return cls([np.array([i]) for i in range(dim)], dim=dim)

    @classmethod
    def from_grid(cls, shape, patch_h, patch_w, per_channel=True):
        """Non-overlapping ``patch_h x patch_w`` patches over an ``(H, W, C)``
        image flattened in row-major order.

        ``per_channel=True`` keeps each channel's patches separate;
        ``False`` lets a patch span all channels (occlusion-style tiles).
        Edge patches may be smaller when the patch size does not divide
        the image size.
        """
        if len(shape) == 2:
            shape = (*shape, 1)
        if len(shape) != 3:
            raise ValueError("shape must be (H, W) or (H, W, C)")
        h, w, nchan = (int(s) for s in shape)
        if min(h, w, nchan) <= 0 or patch_h <= 0 or patch_w <= 0:
            raise ValueError("shape and patch sizes must be positive")
        index = np.arange(h * w * nchan).reshape(h, w, nchan)
        groups = []
        channel_slices = [slice(ci, ci + 1) for ci in range(nchan)] \
            if per_channel else [slice(None)]
        for cs in channel_slices:
            for y0 in range(0, h, patch_h):
                for x0 in range(0, w, patch_w):
                    block = index[y0:y0 + patch_h, x0:x0 + patch_w, cs]
                    groups.append(block.reshape(-1))
        return cls(groups, dim=h * w * nchan, grid=(h, w, nchan, patch_h, patch_w))

    def broadcast(self, per_group):
        """Expand per-group values to a per-feature vector."""
        per_group = np.asarray(per_group, dtype=np.float64)
        return per_group[self.group_of]


@dataclass(frozen=True)
class SmoothingConfig:
    """Gaussian anchor noise: ``num_noises`` i.i.d. draws of std ``sigma``."""

    num_noises: int
    sigma: float
    seed: int

    def __post_init__(self):
        if self.num_noises < 0:
            raise ValueError("num_noises must be >= 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    def draw(self, dim):
        rng = np.random.default_rng(self.seed)
        return rng.normal(0.0, self.sigma, size=(self.num_noises, dim))


@dataclass(frozen=True)
class PerturbationProblem:
    """Everything the LP assembly needs: rows, sharing, delta, soft penalty."""

    constraints: tuple[LinearizedConstraint, ...]
    partition: FeaturePartition
    delta: float
    lam: float = 0.0
    soft: bool = False

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")


@dataclass(frozen=True)
class PerturbationBox:
    """Solved box: per-group widths below (u) and above (v), slack w."""

    u: np.ndarray
    v: np.ndarray
    w: float
    objective: float


@dataclass(frozen=True)
class ScoreMap:
    """Feature scores ``2*delta - u - v``, per group and broadcast per feature."""

    per_group: np.ndarray
    per_feature: np.ndarray
    delta: float
    shape: tuple | None = None
    method: str = "invariant-box"


def build_base_constraints(model, x):
    """One linearized comparison row per non-predicted class."""
    x = np.asarray(x, dtype=np.float64)
    k = model.num_classes
    if k < 2:
        raise ValueError("model has a single class; nothing to constrain")
    y = model.forward(x)
    c = int(np.argmax(y))
    grad_c = model.gradient(x, c)
    out = []
    for j in range(k):
        if j == c:
            continue
        out.append(LinearizedConstraint(
            g=y[c] - y[j],
            h=model.gradient(x, j) - grad_c,
            source_class=j,
        ))
    return out


def build_smoothed_constraints(model, x, cfg, noise_offset="anchor"):
    """Extra rows from linearizations at noise-shifted anchor points.

    For each noise ``n`` and class ``j``, the anchor expansion gives
    ``h_n @ r <= g_n + h_n @ n`` with ``g_n``/``h_n`` evaluated at ``x+n``.
    ``noise_offset="origin"`` instead pairs ``g_n`` with the base-point
    gradient difference in the offset term (the two agree for linear
    models); the comparison class is always taken at the unperturbed input.
    """
    if noise_offset not in NOISE_OFFSET_MODES:
        raise ValueError(f"noise_offset must be one of {NOISE_OFFSET_MODES}")
    x = np.asarray(x, dtype=np.float64)
    k = model.num_classes
    if k < 2:
        raise ValueError("model has a single class; nothing to constrain")
    c = int(np.argmax(model.forward(x)))
    if noise_offset == "origin":
        grad_c0 = model.gradient(x, c)
        base_h = {j: model.gradient(x, j) - grad_c0 for j in range(k) if j != c}
    out = []
    for tag, noise in enumerate(cfg.draw(x.size)):
        xn = x + noise
        yn = model.forward(xn)
        grad_c = model.gradient(xn, c)
        for j in range(k):
            if j == c:
                continue
            h = model.gradient(xn, j) - grad_c
            offset = h if noise_offset == "anchor" else base_h[j]
            out.append(LinearizedConstraint(
                g=(yn[c] - yn[j]) + float(offset @ noise),
                h=h,
                source_class=j,
                noise_tag=tag,
            ))
    return out


def aggregate_by_partition(constraint, partition):
    """Split a row's coefficients by sign within each group.

    Returns ``(h_plus, h_neg)`` per group: sums of the nonnegative and of
    the negative entries. The worst corner of a shared box moves up where
    coefficients are nonnegative and down where they are negative, so these
    two sums are exactly the shared-width row coefficients.
    """
    h = constraint.h
    if h.size != partition.dim:
        raise ValueError(
            f"constraint dimension {h.size} does not match partition {partition.dim}")
    m = partition.num_groups
    h_plus = np.zeros(m)
    h_neg = np.zeros(m)
    np.add.at(h_plus, partition.group_of, np.where(h >= 0.0, h, 0.0))
    np.add.at(h_neg, partition.group_of, np.where(h < 0.0, h, 0.0))
    return h_plus, h_neg


def assemble_lp(problem):
    """Build the LP over ``z = (u_1..u_M, v_1..v_M[, w])``.

    Objective: total box size ``sum(u)+sum(v)``, minus ``lam*w`` when soft.
    Each constraint row becomes ``sum(h_plus*v - h_neg*u) [- w] <= g``.
    """
    m = problem.partition.num_groups
    nvar = 2 * m + (1 if problem.soft else 0)
    objective = np.ones(nvar)
    lower = np.zeros(nvar)
    upper = np.full(nvar, problem.delta)
    if problem.soft:
        objective[-1] = -problem.lam
        upper[-1] = np.inf
    coeffs = np.zeros((len(problem.constraints), nvar))
    rhs = np.zeros(len(problem.constraints))
    for i, con in enumerate(problem.constraints):
        h_plus, h_neg = aggregate_by_partition(con, problem.partition)
        coeffs[i, :m] = -h_neg
        coeffs[i, m:2 * m] = h_plus
        if problem.soft:
            coeffs[i, -1] = -1.0
        rhs[i] = con.g
    return LinearProgram(objective, lower, upper, coeffs, rhs)


def explain(model, x, partition=None, delta=0.1, lam=None, soft=True,
            smoothing=None, noise_offset="anchor", backend=None):
    """Compute the maximal invariant box and the derived feature scores.

    ``lam=None`` uses the default penalty ``2e-4 * num_groups``. With
    ``soft=False`` and no smoothing the problem is always feasible (the
    zero box satisfies every base row); smoothed rows can make hard mode
    infeasible, reported as :class:`InfeasibleConstraintsError`.
    """
    x = np.asarray(x, dtype=np.float64)
    if partition is None:
        partition = FeaturePartition.singletons(x.size)
    if partition.dim != x.size:
        raise ValueError("partition does not cover the input dimension")
    if lam is None:
        lam = 2e-4 * partition.num_groups
    constraints = build_base_constraints(model, x)
    if smoothing is not None and smoothing.num_noises > 0:
        constraints += build_smoothed_constraints(model, x, smoothing,
                                                  noise_offset=noise_offset)
    problem = PerturbationProblem(constraints=tuple(constraints),
                                  partition=partition, delta=delta,
                                  lam=lam, soft=soft)
    solution = lp_mod.solve(assemble_lp(problem), backend=backend)
    if solution.status != lp_mod.OPTIMAL:
        raise InfeasibleConstraintsError(
            f"invariance LP is {solution.status}; a noise row likely flipped "
            "the linearized argmax (negative right-hand side). Re-run in "
            "soft mode (--soft) or reduce the smoothing noise.")
    m = partition.num_groups
    u = solution.values[:m]
    v = solution.values[m:2 * m]
    w = float(solution.values[2 * m]) if soft else 0.0
    box = PerturbationBox(u=u, v=v, w=w, objective=solution.objective_value)
    per_group = 2.0 * delta - u - v
    scores = ScoreMap(per_group=per_group,
                      per_feature=partition.broadcast(per_group),
                      delta=delta,
                      shape=partition.grid[:3] if partition.grid else None)
    return box, scores
