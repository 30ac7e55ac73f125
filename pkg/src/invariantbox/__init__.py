"""Invariant-box feature scoring for small differentiable classifiers.

The main entry points:

* :func:`invariantbox.explain.explain` — score an input by solving the
  maximal-invariant-box LP.
* :mod:`invariantbox.baselines` — gradient saliency, SmoothGrad, integrated
  gradients, occlusion, random control.
* :func:`invariantbox.evaluate.change_ratio_curve` — the quantile-masking
  benchmark.
* :mod:`invariantbox.lp` — the bounded-variable simplex solver (compiled
  kernel with a pure-python fallback).
"""

from .baselines import (AttributionMap, gradient_saliency, integrated_gradients,
                        occlusion, random_scores, smoothgrad)
from .evaluate import (Dataset, EvalCurve, MaskSpec, MethodConfig,
                       change_ratio_curve, compare_methods, derive_seed,
                       make_score_provider, mask_input)
from .explain import (FeaturePartition, InfeasibleConstraintsError,
                      LinearizedConstraint, PerturbationBox, PerturbationProblem,
                      ScoreMap, SmoothingConfig, aggregate_by_partition,
                      assemble_lp, build_base_constraints,
                      build_smoothed_constraints, explain)
from .lp import (LinearProgram, LPSolution, available_backends, default_backend,
                 solve)
from .model import DenseLayer, Model, finite_difference_gradient

__version__ = "0.1.0"

__all__ = [
    "AttributionMap", "Dataset", "DenseLayer", "EvalCurve", "FeaturePartition",
    "InfeasibleConstraintsError", "LPSolution", "LinearProgram",
    "LinearizedConstraint", "MaskSpec", "MethodConfig", "Model",
    "PerturbationBox", "PerturbationProblem", "ScoreMap", "SmoothingConfig",
    "aggregate_by_partition", "assemble_lp", "available_backends",
    "build_base_constraints", "build_smoothed_constraints",
    "change_ratio_curve", "compare_methods", "default_backend", "derive_seed",
    "explain", "finite_difference_gradient", "gradient_saliency",
    "integrated_gradients", "make_score_provider", "mask_input", "occlusion",
    "random_scores", "smoothgrad", "solve", "__version__",
]
