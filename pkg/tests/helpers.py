"""Shared test utilities: random model builders, a brute-force LP oracle,
and the synthetic pattern dataset + trainer used by the masking benchmark
tests. Kept out of the package on purpose — training is test scaffolding,
not library surface.
"""

import itertools

import numpy as np

from invariantbox import DenseLayer, Model, LinearProgram


def random_mlp(rng, d=None, k=None, max_layers=3, activations=("relu", "tanh"),
               output_layer="logits"):
    """Small random MLP with well-scaled weights."""
    d = d or int(rng.integers(2, 33))
    k = k or int(rng.integers(2, 6))
    n_hidden = int(rng.integers(0, max_layers))
    dims = [d] + [int(rng.integers(2, 17)) for _ in range(n_hidden)] + [k]
    layers = []
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        w = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_out, fan_in))
        b = rng.normal(0.0, 0.1, size=fan_out)
        act = "identity" if i == len(dims) - 2 else str(rng.choice(activations))
        layers.append(DenseLayer(w, b, act))
    return Model(layers=tuple(layers), output_layer=output_layer)


def random_linear_model(rng, d=None, k=None):
    d = d or int(rng.integers(2, 17))
    k = k or int(rng.integers(2, 6))
    w = rng.normal(0.0, 1.0, size=(k, d))
    b = rng.normal(0.0, 0.5, size=k)
    return Model(layers=(DenseLayer(w, b, "identity"),))


def min_preactivation_gap(model, x):
    """Smallest |pre-activation| over relu units; large gap = far from kinks."""
    gap = np.inf
    a = np.asarray(x, dtype=np.float64)
    for layer in model.layers:
        a, z = layer.apply(a)
        if layer.activation == "relu":
            gap = min(gap, float(np.min(np.abs(z))))
    return gap


def sample_away_from_kinks(rng, model, gap=1e-4, tries=50):
    """Input whose relu pre-activations all clear `gap` (finite differences
    with step 1e-5 stay on one side of every kink)."""
    for _ in range(tries):
        x = rng.normal(0.0, 1.0, size=model.input_dim)
        if min_preactivation_gap(model, x) > gap:
            return x
    raise AssertionError("could not sample an input away from relu kinks")


def random_grid_lp(rng, max_vars=6, max_rows=4):
    """Random LP with coarse-grid data; mixes feasible/infeasible/degenerate."""
    n = int(rng.integers(1, max_vars + 1))
    m = int(rng.integers(0, max_rows + 1))
    lower = rng.integers(-2, 3, size=n) * 0.5
    upper = lower + rng.integers(0, 5, size=n) * 0.5
    objective = rng.integers(-4, 5, size=n) * 0.5
    coeffs = rng.integers(-4, 5, size=(m, n)) * 0.5
    rhs = rng.integers(-4, 5, size=m) * 0.5
    return LinearProgram(objective.astype(float), lower.astype(float),
                         upper.astype(float), coeffs.astype(float),
                         rhs.astype(float))


def enumerate_lp_oracle(lp, feas_tol=1e-9):
    """Best objective over all basic corner candidates, or None if infeasible.

    Every vertex of {Ax <= b, l <= x <= u} makes n constraints tight with a
    nonsingular selection: rows in some subset S and bound sides for the
    remaining variables. Enumerating all (S, fixed-variable, side) choices
    and solving the residual square system visits every vertex; with a
    bounded box a nonempty region has a vertex, so no feasible candidate
    means infeasible.
    """
    A = lp.row_coeffs
    b = lp.row_rhs
    lo, hi = lp.var_lower, lp.var_upper
    n, m = lp.num_vars, lp.num_rows
    best = None
    var_idx = np.arange(n)
    for t in range(0, min(m, n) + 1):
        for rows in itertools.combinations(range(m), t):
            rows = list(rows)
            for free in itertools.combinations(range(n), t):
                free = list(free)
                fixed = [i for i in var_idx if i not in free]
                sub = A[np.ix_(rows, free)] if t else np.zeros((0, 0))
                if t and abs(np.linalg.det(sub)) < 1e-9:
                    continue
                for sides in itertools.product((0, 1), repeat=len(fixed)):
                    x = np.empty(n)
                    x[fixed] = [hi[i] if s else lo[i]
                                for i, s in zip(fixed, sides)]
                    if t:
                        rhs = b[rows] - A[np.ix_(rows, fixed)] @ x[fixed]
                        x[free] = np.linalg.solve(sub, rhs)
                    if np.any(x < lo - feas_tol) or np.any(x > hi + feas_tol):
                        continue
                    if m and np.any(A @ x > b + feas_tol):
                        continue
                    value = float(lp.objective @ x)
                    if best is None or value > best:
                        best = value
    return best


PATTERN_WINDOWS = {0: (slice(2, 7), slice(2, 7)),
                   1: (slice(2, 7), slice(9, 14)),
                   2: (slice(9, 14), slice(5, 10))}


def pattern_dataset(num, seed, min_gap=0.04):
    """Synthetic 16x16 single-channel 3-class images.

    All three class windows light up at a random level with per-pixel
    jitter; the label is the brightest window. The class evidence is
    therefore *comparative*, which keeps trained models accurate yet
    fragile under masking: graying out half of a window's pixels can
    demote it below a rival. `min_gap` keeps the top two levels apart so
    labels stay learnable. Returns (X, y, shape), X flattened row-major.
    """
    rng = np.random.default_rng(seed)
    X = np.empty((num, 16 * 16))
    y = np.empty(num, dtype=int)
    for i in range(num):
        img = rng.uniform(0.3, 0.7, size=(16, 16))
        while True:
            levels = rng.uniform(0.55, 0.95, size=3)
            ordered = np.sort(levels)
            if ordered[2] - ordered[1] >= min_gap:
                break
        for j, win in PATTERN_WINDOWS.items():
            img[win] = np.clip(levels[j] + rng.uniform(-0.15, 0.15, size=(5, 5)),
                               0.0, 1.0)
        X[i] = img.reshape(-1)
        y[i] = int(np.argmax(levels))
    return X, y, (16, 16, 1)


def train_classifier(X, y, hidden=(64, 64), steps=300, lr=5e-3, seed=0):
    """Full-batch Adam on softmax cross-entropy; returns a Model.

    Training lives in the tests because the library's job starts at a
    trained network.
    """
    rng = np.random.default_rng(seed)
    k = int(y.max()) + 1
    dims = [X.shape[1], *hidden, k]
    Ws = [rng.normal(0.0, np.sqrt(2.0 / dims[i]), size=(dims[i + 1], dims[i]))
          for i in range(len(dims) - 1)]
    bs = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]
    onehot = np.eye(k)[y]
    mom = [np.zeros_like(p) for p in Ws + bs]
    vel = [np.zeros_like(p) for p in Ws + bs]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    for step in range(1, steps + 1):
        # forward with caches
        acts = [X]
        for li in range(len(Ws)):
            z = acts[-1] @ Ws[li].T + bs[li]
            acts.append(np.maximum(z, 0.0) if li < len(Ws) - 1 else z)
        logits = acts[-1]
        shifted = logits - logits.max(axis=1, keepdims=True)
        p = np.exp(shifted)
        p /= p.sum(axis=1, keepdims=True)
        # backward
        delta = (p - onehot) / X.shape[0]
        grads_w, grads_b = [], []
        for li in reversed(range(len(Ws))):
            grads_w.append(delta.T @ acts[li])
            grads_b.append(delta.sum(axis=0))
            if li > 0:
                delta = (delta @ Ws[li]) * (acts[li] > 0.0)
        grads = list(reversed(grads_w)) + list(reversed(grads_b))
        params = Ws + bs
        for pi, (param, grad) in enumerate(zip(params, grads)):
            mom[pi] = beta1 * mom[pi] + (1 - beta1) * grad
            vel[pi] = beta2 * vel[pi] + (1 - beta2) * grad * grad
            mhat = mom[pi] / (1 - beta1 ** step)
            vhat = vel[pi] / (1 - beta2 ** step)
            param -= lr * mhat / (np.sqrt(vhat) + eps)
    layers = tuple(
        DenseLayer(Ws[i], bs[i], "relu" if i < len(Ws) - 1 else "identity")
        for i in range(len(Ws)))
    return Model(layers=layers)


def accuracy(model, X, y):
    return float(np.mean([model.predict_class(x) == yi for x, yi in zip(X, y)]))
