"""Benchmark the compiled simplex kernel against the pure-python fallback.

Generates box-perturbation LPs of increasing size (more feature groups,
more linearized constraint rows), solves each with both backends, and
prints a timing table.  Solutions are cross-checked so a speedup never
hides a disagreement.

Run from the repository root:

    python3 benchmarks/bench_simplex.py
    python3 benchmarks/bench_simplex.py --repeats 9 --seed 3
"""

import argparse
import time

import numpy as np

from invariantbox.explain import (
    FeaturePartition,
    PerturbationProblem,
    assemble_lp,
    build_base_constraints,
    build_smoothed_constraints,
    SmoothingConfig,
)
from invariantbox.lp import available_backends, solve
from invariantbox.model import DenseLayer, Model


def build_problem(rng, dim, num_classes, num_groups, num_noises, soft):
    """Assemble one invariant-box LP from a random two-layer network."""
    hidden = max(8, dim // 2)
    layers = (
        DenseLayer(weights=rng.normal(0.0, 0.8, (hidden, dim)),
                   bias=rng.normal(0.0, 0.1, hidden), activation="relu"),
        DenseLayer(weights=rng.normal(0.0, 0.8, (num_classes, hidden)),
                   bias=rng.normal(0.0, 0.1, num_classes), activation="identity"),
    )
    model = Model(layers=layers)
    x = rng.uniform(0.1, 0.9, dim)

    group_size = dim // num_groups
    groups = [list(range(i * group_size, (i + 1) * group_size)) for i in range(num_groups)]
    # sweep any leftover features into the last group
    for j in range(num_groups * group_size, dim):
        groups[-1].append(j)
    partition = FeaturePartition(groups=tuple(tuple(g) for g in groups), dim=dim)

    constraints = build_base_constraints(model, x)
    if num_noises > 0:
        smoothing = SmoothingConfig(num_noises=num_noises, sigma=0.05,
                                    seed=int(rng.integers(0, 2**31)))
        constraints += build_smoothed_constraints(model, x, smoothing)
    problem = PerturbationProblem(
        constraints=tuple(constraints),
        partition=partition,
        delta=0.1,
        lam=2e-4 * partition.num_groups,
        soft=soft,
    )
    return assemble_lp(problem)


def time_solve(lp, backend, repeats):
    """Median wall-clock seconds over `repeats` solves."""
    times = []
    solution = None
    for _ in range(repeats):
        start = time.perf_counter()
        solution = solve(lp, backend=backend)
        times.append(time.perf_counter() - start)
    return float(np.median(times)), solution


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5, help="solves per measurement (median is reported)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled kernel not built; benchmarking pure python only")

    # (label, dim, classes, groups, noises, soft)
    cases = [
        ("tiny      ", 16, 3, 16, 0, True),
        ("small     ", 64, 5, 16, 4, True),
        ("medium    ", 256, 10, 64, 9, True),
        ("large     ", 768, 10, 48, 9, True),
        ("wide-hard ", 256, 10, 256, 4, False),
    ]

    rng = np.random.default_rng(args.seed)
    header = f"{'case':<11} {'vars':>5} {'rows':>5} {'python (ms)':>12}"
    if "compiled" in backends:
        header += f" {'compiled (ms)':>14} {'speedup':>8}"
    print(header)
    print("-" * len(header))

    for label, dim, num_classes, num_groups, num_noises, soft in cases:
        lp = build_problem(rng, dim, num_classes, num_groups, num_noises, soft)
        num_vars = lp.objective.shape[0]
        num_rows = lp.row_coeffs.shape[0]

        t_py, sol_py = time_solve(lp, "python", args.repeats)
        row = f"{label:<11} {num_vars:>5} {num_rows:>5} {t_py * 1e3:>12.3f}"
        if "compiled" in backends:
            t_c, sol_c = time_solve(lp, "compiled", args.repeats)
            if sol_py.status != sol_c.status:
                raise SystemExit(f"backend disagreement on {label.strip()}: {sol_py.status} vs {sol_c.status}")
            if sol_py.status == "optimal":
                gap = abs(sol_py.objective_value - sol_c.objective_value)
                if gap > 1e-8:
                    raise SystemExit(f"objective mismatch on {label.strip()}: {gap!r}")
            row += f" {t_c * 1e3:>14.3f} {t_py / t_c:>8.2f}x"
        print(row)

    print("\nbackends available:", ", ".join(backends))


if __name__ == "__main__":
    main()
