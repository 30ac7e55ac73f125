"""Command-line interface.

Subcommands:
  explain    score one input's features via the invariant-box LP
  evaluate   run the quantile-masking benchmark over a dataset
  solve-lp   solve a LinearProgram JSON file (debugging aid)

Exit codes: 0 success, 1 usage/configuration problem, 2 the model or LP
reported an error (e.g. infeasible constraints). All randomness flows from
--seed; per-input sub-seeds are derived from the input's content, so output
files are byte-identical across reruns, dataset orderings, and --jobs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import io as iomod
from . import lp as lpmod
from .evaluate import MaskSpec, MethodConfig, compare_methods, derive_seed, make_score_provider
from .explain import (FeaturePartition, InfeasibleConstraintsError, NOISE_OFFSET_MODES,
                      SmoothingConfig, explain)

KNOWN_METHODS = ("proposed", "invariant-box", "gradient", "smoothgrad",
                 "intgrad", "occlusion", "random")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; this tool reserves 2 for model errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_patch(text):
    if text.lower() == "none":
        return None
    parts = text.lower().split("x")
    try:
        h, w = (int(p) for p in parts)
        if h <= 0 or w <= 0:
            raise ValueError
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"patch must be HxW (positive integers) or 'none', got {text!r}")
    return (h, w)


def _parse_tau_grid(text):
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tau grid {text!r}")


_PATCH_AUTO = "auto"  # sentinel: 8x8 when shape metadata exists, else none


def _add_method_flags(sub):
    sub.add_argument("--delta", type=float, default=0.1,
                     help="box half-width bound delta (default 0.1)")
    sub.add_argument("--lambda", dest="lam", type=float, default=None,
                     help="soft-constraint penalty; default 2e-4 * num_groups")
    mode = sub.add_mutually_exclusive_group()
    mode.add_argument("--soft", dest="soft", action="store_true", default=True,
                      help="penalized slack on the constraint rows (default)")
    mode.add_argument("--hard", dest="soft", action="store_false",
                      help="no slack; infeasible smoothed rows become errors")
    sub.add_argument("--patch", default=_PATCH_AUTO,
                     help="patch size HxW for width sharing, or 'none' "
                          "(default: 8x8 when the input carries shape metadata)")
    sub.add_argument("--smooth-n", type=int, default=9,
                     help="number of smoothing noises (default 9; 0 disables)")
    sub.add_argument("--smooth-sigma", type=float, default=0.05,
                     help="smoothing noise std (default 0.05)")
    sub.add_argument("--smooth-offset", choices=NOISE_OFFSET_MODES, default="anchor",
                     help="gradient used in the smoothed row offset term")
    sub.add_argument("--seed", type=int, default=0, help="master seed")
    sub.add_argument("--output-layer", choices=("logits", "softmax"),
                     default="logits",
                     help="model head the constraints are built on")
    sub.add_argument("--backend", choices=("compiled", "python"), default=None,
                     help="simplex kernel (default: compiled when available)")


def build_parser():
    parser = _Parser(prog="invariantbox",
                     description="Invariant-box feature scores, attribution "
                                 "baselines, and the masking benchmark.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_explain = sub.add_parser("explain", help="score one input")
    p_explain.add_argument("--model", required=True)
    p_explain.add_argument("--input", required=True)
    p_explain.add_argument("--output", required=True,
                           help="output stem; writes <stem>.json and <stem>.csv")
    _add_method_flags(p_explain)
    p_explain.set_defaults(func=cmd_explain)

    p_eval = sub.add_parser("evaluate", help="masking benchmark over a dataset")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--dataset", required=True)
    p_eval.add_argument("--method", required=True,
                        help="comma-separated; any of "
                             f"{', '.join(KNOWN_METHODS)} or file:PATH")
    p_eval.add_argument("--tau-grid", type=_parse_tau_grid,
                        default=(0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100),
                        help="comma-separated quantiles (default 0,10,..,100)")
    p_eval.add_argument("--mask-value", type=float, default=0.5,
                        help="replacement value for masked features (default 0.5)")
    p_eval.add_argument("--jobs", type=int, default=1,
                        help="worker threads over inputs (default 1)")
    p_eval.add_argument("--output", default=None,
                        help="curves CSV path (default: stdout)")
    _add_method_flags(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_lp = sub.add_parser("solve-lp", help="solve a LinearProgram JSON file")
    p_lp.add_argument("path")
    p_lp.add_argument("--backend", choices=("compiled", "python"), default=None)
    p_lp.set_defaults(func=cmd_solve_lp)
    return parser


def _resolve_patch(patch_arg, shape, where):
    """Turn the --patch flag into (patch, shape) for MethodConfig."""
    if patch_arg == _PATCH_AUTO:
        if shape is None:
            print(f"note: {where} has no shape metadata; "
                  "using per-feature groups (--patch none)", file=sys.stderr)
            return None
        return (8, 8)
    patch = _parse_patch(patch_arg) if isinstance(patch_arg, str) else patch_arg
    if patch is not None and shape is None:
        raise ValueError(f"--patch {patch[0]}x{patch[1]} needs shape metadata "
                         f"on {where} (JSON 'shape' field)")
    return patch


def cmd_explain(args):
    model = iomod.load_model(args.model, output_layer=args.output_layer)
    x, shape = iomod.load_input(args.input)
    if x.size != model.input_dim:
        raise ValueError(f"input has {x.size} features, model expects "
                         f"{model.input_dim}")
    patch = _resolve_patch(args.patch, shape, "the input")
    if patch is None:
        partition = FeaturePartition.singletons(x.size)
    else:
        partition = FeaturePartition.from_grid(shape, patch[0], patch[1])
    smoothing = None
    if args.smooth_n > 0:
        smoothing = SmoothingConfig(num_noises=args.smooth_n,
                                    sigma=args.smooth_sigma,
                                    seed=derive_seed(args.seed, "proposed", x))
    box, scores = explain(model, x, partition=partition, delta=args.delta,
                          lam=args.lam, soft=args.soft, smoothing=smoothing,
                          noise_offset=args.smooth_offset, backend=args.backend)
    if scores.shape is None and shape is not None:
        scores = dataclasses.replace(scores, shape=tuple(shape))
    json_path, csv_path = iomod.write_scores(args.output, scores)
    print(f"objective {box.objective!r}  slack {box.w!r}")
    print(f"wrote {json_path} and {csv_path}")
    return 0


def _method_tokens(text):
    tokens = [tok.strip() for tok in text.split(",") if tok.strip()]
    if not tokens:
        raise ValueError("--method lists no methods")
    for tok in tokens:
        if tok not in KNOWN_METHODS and not tok.startswith("file:"):
            raise ValueError(f"unknown method {tok!r}; known: "
                             f"{', '.join(KNOWN_METHODS)} or file:PATH")
    if len(set(tokens)) != len(tokens):
        raise ValueError("--method lists a method twice")
    return tokens


def cmd_evaluate(args):
    model = iomod.load_model(args.model, output_layer=args.output_layer)
    dataset = iomod.load_dataset(args.dataset)
    if dataset.inputs.shape[1] != model.input_dim:
        raise ValueError(f"dataset inputs have {dataset.inputs.shape[1]} "
                         f"features, model expects {model.input_dim}")
    tokens = _method_tokens(args.method)
    patch = _resolve_patch(args.patch, dataset.shape, "the dataset")
    spec = MaskSpec(mask_value=args.mask_value, tau_grid=args.tau_grid)
    base_cfg = MethodConfig(delta=args.delta, lam=args.lam, soft=args.soft,
                            partition_shape=dataset.shape, patch=patch,
                            smooth_n=args.smooth_n, smooth_sigma=args.smooth_sigma,
                            noise_offset=args.smooth_offset,
                            mask_value=args.mask_value, backend=args.backend)
    providers = {}
    for tok in tokens:
        if tok.startswith("file:"):
            table = iomod.load_score_table(tok[len("file:"):])
            if table.shape != dataset.inputs.shape:
                raise ValueError(f"score table {tok[5:]} is {table.shape}, "
                                 f"dataset is {dataset.inputs.shape}")
            cfg = dataclasses.replace(base_cfg, external_scores=table)
            tag = f"file:{Path(tok[len('file:'):]).stem}"
            providers[tag] = make_score_provider("file", model, args.seed, cfg)
        else:
            providers[tok] = make_score_provider(tok, model, args.seed, base_cfg)
    curves = compare_methods(model, dataset, providers, spec, jobs=args.jobs)
    if args.output is None:
        sys.stdout.write(iomod.curves_to_csv(curves))
    else:
        iomod.write_curves_csv(args.output, curves)
        print(f"wrote {args.output}")
    return 0


def cmd_solve_lp(args):
    lp = iomod.load_lp(args.path)
    solution = lpmod.solve(lp, backend=args.backend)
    print(json.dumps(iomod.solution_to_json(solution), indent=2))
    return 0 if solution.status == lpmod.OPTIMAL else 2


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code or 0
    try:
        return args.func(args)
    except InfeasibleConstraintsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
