"""Acceptance gate: eight checks covering gradients, the LP solver, the
analytic box fixtures, exact invariance, the extension algebra, the
desk-scale masking benchmark, performance, and CLI determinism. Each test
prints one [PASS]/[FAIL] line with its headline numbers (bypassing pytest's
capture, so the verdicts always reach the console).
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

import invariantbox as ib
from invariantbox import (Dataset, DenseLayer, FeaturePartition, MaskSpec,
                          MethodConfig, Model, SmoothingConfig,
                          build_base_constraints, explain,
                          finite_difference_gradient, make_score_provider,
                          solve)
from helpers import (accuracy, enumerate_lp_oracle, pattern_dataset,
                     random_grid_lp, random_linear_model, random_mlp,
                     sample_away_from_kinks, train_classifier)


def _verdict(capfd, ok, label, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
    with capfd.disabled():
        print(line, flush=True)
    assert ok, line


def test_1_gradient_correctness(capfd):
    t0 = time.time()
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(10_000 + seed)
        model = random_mlp(rng, d=int(rng.integers(2, 33)), max_layers=3)
        x = sample_away_from_kinks(rng, model)
        for j in range(model.num_classes):
            fd = finite_difference_gradient(model, x, j, step=1e-5)
            g = model.gradient(x, j)
            err = np.max(np.abs(g - fd)) / max(np.max(np.abs(fd)), 1e-8)
            worst = max(worst, err)
    elapsed = time.time() - t0
    ok = worst < 1e-5 and elapsed < 10.0
    _verdict(capfd, ok, "1 gradient correctness",
             f"100 random MLPs, max relative error {worst:.2e} "
             f"(< 1e-5), {elapsed:.1f}s (< 10s)")


def test_2_lp_oracle_equivalence(capfd):
    rng = np.random.default_rng(777)
    checked = infeasible = 0
    worst_gap = 0.0
    for _ in range(200):
        lp = random_grid_lp(rng, max_vars=6, max_rows=4)
        want = enumerate_lp_oracle(lp)
        sol = solve(lp)
        if want is None:
            assert sol.status == "infeasible"
            infeasible += 1
            continue
        assert sol.status == "optimal"
        worst_gap = max(worst_gap, abs(sol.objective_value - want))
        checked += 1
    ok = worst_gap < 1e-8
    _verdict(capfd, ok, "2 LP oracle equivalence",
             f"{checked} optimal + {infeasible} infeasible instances, "
             f"max objective gap {worst_gap:.2e} (< 1e-8)")


def test_3_analytic_fixtures(capfd):
    model = Model(layers=(DenseLayer(np.eye(2), np.zeros(2), "identity"),))
    x = np.array([1.0, 0.0])
    box_a, _ = explain(model, x, delta=0.4, soft=False)
    a_ok = (abs(box_a.objective - 1.6) <= 1e-9
            and np.allclose(box_a.u, 0.4, atol=1e-9)
            and np.allclose(box_a.v, 0.4, atol=1e-9))
    box_b, _ = explain(model, x, delta=0.6, soft=False)
    b_ok = abs(box_b.objective - 2.2) <= 1e-9
    _verdict(capfd, a_ok and b_ok, "3 analytic fixtures",
             f"delta=0.4 objective {box_a.objective!r} (want 1.6), "
             f"delta=0.6 objective {box_b.objective!r} (want 2.2, "
             "degenerate split not asserted)")


def test_4_linear_exact_invariance(capfd):
    rng = np.random.default_rng(4242)
    changes = points = 0
    for _ in range(20):
        model = random_linear_model(rng)  # d <= 16, k <= 5
        x = rng.normal(size=model.input_dim)
        c = model.predict_class(x)
        cons = build_base_constraints(model, x)
        box, _ = explain(model, x, delta=0.1, soft=False)
        rs = list(rng.uniform(-box.u, box.v, size=(1000, model.input_dim)))
        rs += [con.worst_corner(box.u, box.v) for con in cons]
        for r in rs:
            y = model.forward(x + r)
            # at a binding worst corner the comparison holds with equality;
            # "unchanged" means c still attains the maximum
            changes += int(y[c] < y.max() - 1e-9)
            points += 1
    ok = changes == 0
    _verdict(capfd, ok, "4 linear-model exact invariance",
             f"{changes} argmax changes over {points} interior points "
             "+ worst corners (want 0)")


def test_5_extension_consistency(capfd):
    rng = np.random.default_rng(5555)
    worst_single = worst_sat = worst_idem = 0.0
    for _ in range(20):
        model = random_mlp(rng, d=8)
        x = rng.normal(size=8)
        cons = build_base_constraints(model, x)
        # (a) singleton sharing == direct unshared formulation
        m = len(cons)
        coeffs = np.zeros((m, 16))
        for i, con in enumerate(cons):
            coeffs[i, :8] = np.where(con.h < 0, -con.h, 0.0)
            coeffs[i, 8:] = np.where(con.h >= 0, con.h, 0.0)
        direct = ib.LinearProgram(np.ones(16), np.zeros(16), np.full(16, 0.1),
                                  coeffs, np.array([c.g for c in cons]))
        hard, _ = explain(model, x, delta=0.1, soft=False)
        worst_single = max(worst_single,
                           abs(solve(direct).objective_value - hard.objective))
        # (b) large-lambda soft solution collapses to the hard one
        lam_big = 1e6 * 8 * 0.1
        soft, _ = explain(model, x, delta=0.1, soft=True, lam=lam_big)
        assert soft.w <= 1e-8
        worst_sat = max(worst_sat,
                        abs((soft.objective + lam_big * soft.w) - hard.objective))
        # (c) adding the zero-noise row changes nothing
        plain, _ = explain(model, x, delta=0.1, soft=True)
        zero, _ = explain(model, x, delta=0.1, soft=True,
                          smoothing=SmoothingConfig(1, 0.0, seed=1))
        worst_idem = max(worst_idem, abs(plain.objective - zero.objective))
    ok = worst_single < 1e-8 and worst_sat < 1e-8 and worst_idem < 1e-10
    _verdict(capfd, ok, "5 extension consistency",
             f"singleton gap {worst_single:.2e} (< 1e-8), "
             f"lambda-saturation gap {worst_sat:.2e} (< 1e-8), "
             f"zero-noise drift {worst_idem:.2e} (< 1e-10)")


def test_6_desk_scale_masking(capfd):
    t0 = time.time()
    X, y, shape = pattern_dataset(1400, seed=11)
    model = train_classifier(X[:1200], y[:1200], steps=400, lr=5e-3, seed=7)
    acc = accuracy(model, X[1200:], y[1200:])
    held = Dataset(inputs=X[1200:], shape=shape)
    # Hard mode: at logit scale the default soft penalty is so mild that the
    # slack frees the whole box and every score degenerates to zero.  The
    # hard LP actually binds on these competitive inputs.
    cfg = MethodConfig(delta=0.1, soft=False, smooth_n=0)
    spec = MaskSpec(mask_value=0.5, tau_grid=(10, 20, 30, 40, 50))
    curves = {}
    for name in ("proposed", "random"):
        provider = make_score_provider(name, model, 123, cfg)
        curves[name] = ib.change_ratio_curve(model, held, provider, spec,
                                             method=name, jobs=1).change_ratios
    # guard against an all-ties score map passing vacuously
    probe = make_score_provider("proposed", model, 123, cfg)
    spread = max(float(np.ptp(np.asarray(probe(held.inputs[i], i))))
                 for i in range(10))
    elapsed = time.time() - t0
    margin = curves["random"][-1] - curves["proposed"][-1]
    dominated = all(p <= r for p, r in zip(curves["proposed"], curves["random"]))
    ok = (acc >= 0.90 and margin >= 0.10 and dominated and spread > 0
          and elapsed < 300)
    _verdict(capfd, ok, "6 desk-scale masking benchmark",
             f"held-out accuracy {acc:.3f} (>= 0.90), proposed "
             f"{curves['proposed']} vs random {curves['random']}, "
             f"tau=50 margin {margin:.3f} (>= 0.10), score spread "
             f"{spread:.3f} (> 0), {elapsed:.0f}s (< 300s)")


def test_7_single_explanation_performance(capfd):
    rng = np.random.default_rng(7007)
    model = Model(layers=(
        DenseLayer(rng.normal(0, 1 / np.sqrt(768), size=(128, 768)),
                   rng.normal(0, 0.1, size=128), "relu"),
        DenseLayer(rng.normal(0, 1 / np.sqrt(128), size=(10, 128)),
                   rng.normal(0, 0.1, size=10), "identity")))
    x = rng.uniform(0, 1, size=768)
    partition = FeaturePartition.from_grid((16, 16, 3), 4, 4)
    assert partition.num_groups == 48
    smoothing = SmoothingConfig(num_noises=9, sigma=0.05, seed=3)
    explain(model, x, partition=partition, delta=0.1, soft=True,
            smoothing=smoothing)  # warm-up outside the timed run
    t0 = time.time()
    box, scores = explain(model, x, partition=partition, delta=0.1, soft=True,
                          smoothing=smoothing)
    elapsed = time.time() - t0
    rows = (model.num_classes - 1) * (1 + smoothing.num_noises)
    ok = elapsed < 1.0 and rows == 90 and scores.per_feature.size == 768
    _verdict(capfd, ok, "7 performance",
             f"d=768, k=10, M=48, {rows} LP rows solved in {elapsed * 1000:.0f}ms "
             "(< 1s)")


def test_8_cli_determinism(capfd, tmp_path):
    rng = np.random.default_rng(88)
    w1 = rng.normal(0, 0.5, size=(12, 16))
    w2 = rng.normal(0, 0.5, size=(3, 12))
    model_path = tmp_path / "model.json"
    model_path.write_text(json.dumps({
        "layers": [
            {"weights": w1.tolist(), "bias": [0.0] * 12, "activation": "tanh"},
            {"weights": w2.tolist(), "bias": [0.0] * 3, "activation": "identity"},
        ]}))
    data_path = tmp_path / "data.json"
    data_path.write_text(json.dumps({
        "inputs": rng.uniform(0, 1, size=(20, 16)).tolist(),
        "shape": [4, 4, 1]}))
    outputs = []
    for run, jobs in (("a", 1), ("b", 1), ("c", 4)):
        out = tmp_path / f"curves_{run}.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "invariantbox", "evaluate",
             "--model", str(model_path), "--dataset", str(data_path),
             "--method", "proposed,smoothgrad,random", "--patch", "2x2",
             "--smooth-n", "3", "--tau-grid", "0,25,50,75,100",
             "--seed", "42", "--jobs", str(jobs), "--output", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outputs.append(out.read_bytes())
    ok = outputs[0] == outputs[1] == outputs[2]
    _verdict(capfd, ok, "8 CLI determinism",
             f"3 runs (jobs 1/1/4), {len(outputs[0])}-byte CSVs "
             f"byte-identical: {ok}")
