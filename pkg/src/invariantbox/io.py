"""File formats: models, inputs, datasets, score maps, LPs, curves.

Everything is JSON or CSV. Floats are written with Python's repr (shortest
round-trip form), and text files use "\n" newlines, so identical runs
produce byte-identical artifacts.

Model JSON      {"input_dim": d, "layers": [{"weights": [[...]], "bias": [...],
                 "activation": "relu"}, ...]}
Input           JSON array, {"values": [...], "shape": [H, W, C]}, or a CSV row
Dataset         {"inputs": [[...], ...], "shape": [...]?, "labels": [...]?}
                or CSV with one input per row
Scores JSON     {"shape": [H, W, C] | null, "per_feature": [...],
                 "per_group": [...], "delta": number | null, "method": "..."}
Scores CSV      header feature,score; one row per feature
Score table     {"per_input": [[...], ...]} — externally computed scores,
                one row per dataset input
LP JSON         {"objective": [...], "var_lower": [...], "var_upper": [...],
                 "rows": [{"coeffs": [...], "rhs": b}, ...]};
                null bounds mean unbounded on that side
Curves CSV      header method,tau,change_ratio, long format
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .baselines import AttributionMap
from .evaluate import Dataset
from .explain import ScoreMap
from .lp import LinearProgram
from .model import DenseLayer, Model


def _as_path(path):
    return Path(path)


def load_model(path, output_layer="logits"):
    with open(_as_path(path)) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "layers" not in doc:
        raise ValueError(f"{path}: not a model file (missing 'layers')")
    layers = tuple(
        DenseLayer(weights=np.asarray(spec["weights"], dtype=np.float64),
                   bias=np.asarray(spec["bias"], dtype=np.float64),
                   activation=spec.get("activation", "identity"))
        for spec in doc["layers"])
    model = Model(layers=layers, output_layer=output_layer)
    if "input_dim" in doc and int(doc["input_dim"]) != model.input_dim:
        raise ValueError(f"{path}: declared input_dim {doc['input_dim']} "
                         f"but first layer takes {model.input_dim}")
    return model


def save_model(path, model):
    doc = {"input_dim": model.input_dim,
           "layers": [{"weights": layer.weights.tolist(),
                       "bias": layer.bias.tolist(),
                       "activation": layer.activation}
                      for layer in model.layers]}
    _write_json(path, doc)


def load_input(path):
    """Returns (vector, shape-or-None)."""
    path = _as_path(path)
    if path.suffix.lower() == ".json":
        with open(path) as fh:
            doc = json.load(fh)
        if isinstance(doc, dict):
            values = np.asarray(doc["values"], dtype=np.float64)
            shape = tuple(int(s) for s in doc["shape"]) if doc.get("shape") else None
        else:
            values, shape = np.asarray(doc, dtype=np.float64), None
    elif path.suffix.lower() == ".csv":
        values = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=1)
        if values.ndim != 1:
            raise ValueError(f"{path}: expected a single CSV row")
        shape = None
    else:
        raise ValueError(f"{path}: unsupported input format (use .json or .csv)")
    if values.ndim != 1 or not np.all(np.isfinite(values)):
        raise ValueError(f"{path}: input must be a finite vector")
    return values, shape


def load_dataset(path):
    path = _as_path(path)
    if path.suffix.lower() == ".json":
        with open(path) as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict) or "inputs" not in doc:
            raise ValueError(f"{path}: not a dataset file (missing 'inputs')")
        return Dataset(inputs=np.asarray(doc["inputs"], dtype=np.float64),
                       shape=tuple(doc["shape"]) if doc.get("shape") else None,
                       labels=np.asarray(doc["labels"]) if doc.get("labels") else None)
    if path.suffix.lower() == ".csv":
        inputs = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
        return Dataset(inputs=inputs)
    raise ValueError(f"{path}: unsupported dataset format (use .json or .csv)")


def save_dataset(path, dataset):
    doc = {"inputs": dataset.inputs.tolist()}
    if dataset.shape is not None:
        doc["shape"] = list(dataset.shape)
    if dataset.labels is not None:
        doc["labels"] = dataset.labels.tolist()
    _write_json(path, doc)


def write_scores(stem, scores):
    """Write <stem>.json and <stem>.csv for a ScoreMap or AttributionMap.

    A trailing .json/.csv on `stem` is stripped first, so passing either
    final filename works too.
    """
    stem = _as_path(stem)
    if stem.suffix.lower() in (".json", ".csv"):
        stem = stem.with_suffix("")
    if isinstance(scores, ScoreMap):
        doc = {"shape": list(scores.shape) if scores.shape else None,
               "per_feature": scores.per_feature.tolist(),
               "per_group": scores.per_group.tolist(),
               "delta": scores.delta,
               "method": scores.method}
    elif isinstance(scores, AttributionMap):
        doc = {"shape": list(scores.shape) if scores.shape else None,
               "per_feature": scores.per_feature.tolist(),
               "per_group": scores.per_feature.tolist(),
               "delta": None,
               "method": scores.method}
        if scores.completeness_error is not None:
            doc["completeness_error"] = scores.completeness_error
    else:
        raise TypeError("expected ScoreMap or AttributionMap")
    json_path = stem.with_suffix(".json")
    _write_json(json_path, doc)
    csv_path = stem.with_suffix(".csv")
    with open(csv_path, "w", newline="\n") as fh:
        fh.write("feature,score\n")
        for i, s in enumerate(doc["per_feature"]):
            fh.write(f"{i},{s!r}\n")
    return json_path, csv_path


def load_scores(path):
    """Score-map JSON back to a per-feature vector (plus the raw document)."""
    with open(_as_path(path)) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "per_feature" not in doc:
        raise ValueError(f"{path}: not a scores file (missing 'per_feature')")
    return np.asarray(doc["per_feature"], dtype=np.float64), doc


def load_score_table(path):
    """External per-input scores: JSON {"per_input": [...]} or CSV rows."""
    path = _as_path(path)
    if path.suffix.lower() == ".json":
        with open(path) as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict) or "per_input" not in doc:
            raise ValueError(f"{path}: not a score table (missing 'per_input')")
        return np.asarray(doc["per_input"], dtype=np.float64)
    if path.suffix.lower() == ".csv":
        return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    raise ValueError(f"{path}: unsupported score table format")


def _bound_to_json(value):
    return None if np.isinf(value) else float(value)


def load_lp(path):
    with open(_as_path(path)) as fh:
        doc = json.load(fh)
    for key in ("objective", "var_lower", "var_upper"):
        if key not in doc:
            raise ValueError(f"{path}: LP file missing '{key}'")
    lower = np.array([-np.inf if b is None else float(b)
                      for b in doc["var_lower"]])
    upper = np.array([np.inf if b is None else float(b)
                      for b in doc["var_upper"]])
    rows = [(np.asarray(row["coeffs"], dtype=np.float64), float(row["rhs"]))
            for row in doc.get("rows", [])]
    return LinearProgram.from_rows(
        objective=np.asarray(doc["objective"], dtype=np.float64),
        var_lower=lower, var_upper=upper, rows=rows)


def save_lp(path, lp):
    doc = {"objective": lp.objective.tolist(),
           "var_lower": [_bound_to_json(b) for b in lp.var_lower],
           "var_upper": [_bound_to_json(b) for b in lp.var_upper],
           "rows": [{"coeffs": a.tolist(), "rhs": float(b)}
                    for a, b in lp.rows()]}
    _write_json(path, doc)


def solution_to_json(solution):
    return {"status": solution.status,
            "values": None if solution.values is None else solution.values.tolist(),
            "objective_value": (None if solution.objective_value is None
                                else float(solution.objective_value)),
            "iterations": int(solution.iterations),
            "backend": solution.backend}


def curves_to_csv(curves):
    """Long-format curves: method,tau,change_ratio."""
    lines = ["method,tau,change_ratio"]
    for curve in curves:
        for tau, ratio in zip(curve.taus, curve.change_ratios):
            lines.append(f"{curve.method},{tau!r},{ratio!r}")
    return "\n".join(lines) + "\n"


def write_curves_csv(path, curves):
    with open(_as_path(path), "w", newline="\n") as fh:
        fh.write(curves_to_csv(curves))


def _write_json(path, doc):
    with open(_as_path(path), "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
