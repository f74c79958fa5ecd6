"""Linear SVM with class-balanced hinge loss and Platt-scaled probabilities."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import FEATURE_NAMES, N_FEATURES, NORMALIZATION_POLICY

MODEL_FORMAT = "mlaco-linear-model"
MODEL_VERSION = 1
P_CLAMP = 1e-6


class TrainingError(ValueError):
    pass


@dataclass
class SvmConfig:
    """Hyperparameters of the dual coordinate descent solver.

    The objective is ``lam/2 |w|^2 + mean_i c_i * hinge_i`` with the bias
    folded into ``w`` through a constant feature.
    """

    lam: float = 1e-4
    max_epochs: int = 500
    tol: float = 1e-6
    seed: int = 0
    holdout: float = 0.2


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    platt_a: float
    platt_b: float
    normalization: str = NORMALIZATION_POLICY
    feature_names: tuple[str, ...] = FEATURE_NAMES
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (len(self.feature_names),):
            raise ValueError("weights must have one entry per feature")
        if not (math.isfinite(self.platt_a) and math.isfinite(self.platt_b)):
            raise ValueError("Platt parameters must be finite")

    def decision_function(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features, dtype=float) @ self.weights + self.bias

    def save(self, path) -> None:
        Path(path).write_text(dump_model(self))

    @classmethod
    def load(cls, path) -> "LinearModel":
        return parse_model(Path(path).read_text())


def platt_probability(scores, a: float, b: float) -> np.ndarray:
    """P(y=1 | score) = 1 / (1 + exp(a*score + b)), computed without overflow."""
    t = a * np.asarray(scores, dtype=float) + b
    out = np.empty_like(t)
    pos = t >= 0
    e = np.exp(-t[pos])
    out[pos] = e / (1.0 + e)
    out[~pos] = 1.0 / (1.0 + np.exp(t[~pos]))
    return out


def predict_probability(model: LinearModel, features: np.ndarray) -> np.ndarray:
    p = platt_probability(model.decision_function(features), model.platt_a, model.platt_b)
    return np.clip(p, P_CLAMP, 1.0 - P_CLAMP)


def fit_platt(scores: Sequence[float], labels: Sequence[int], max_iter: int = 100, tol: float = 1e-8) -> tuple[float, float]:
    """Fit (a, b) by Newton's method with backtracking on the smoothed-target likelihood.

    Follows the numerically safe formulation of Lin, Lin and Weng (2007).
    """
    f = np.asarray(scores, dtype=float)
    y = np.asarray(labels).astype(bool)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise TrainingError("Platt scaling needs both classes")
    hi = (n_pos + 1.0) / (n_pos + 2.0)
    lo = 1.0 / (n_neg + 2.0)
    t = np.where(y, hi, lo)

    def nll(a, b):
        fab = f * a + b
        # log(1 + exp(fab)) - (1 - t) * fab, split by sign to avoid overflow
        soft = np.log1p(np.exp(-np.abs(fab)))
        return float(np.sum(np.where(fab >= 0, t * fab + soft, (t - 1.0) * fab + soft)))

    a, b = 0.0, math.log((n_neg + 1.0) / (n_pos + 1.0))
    sigma = 1e-12
    val = nll(a, b)
    converged = False
    for _ in range(max_iter):
        p = platt_probability(f, a, b)  # = 1/(1+exp(fab))
        d1 = t - p
        d2 = p * (1.0 - p)
        g1 = float(f @ d1)
        g2 = float(d1.sum())
        if math.hypot(g1, g2) < tol:
            converged = True
            break
        h11 = float(f * f @ d2) + sigma
        h22 = float(d2.sum()) + sigma
        h21 = float(f @ d2)
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= 1e-10:
            na, nb = a + step * da, b + step * db
            nv = nll(na, nb)
            if nv < val + 1e-4 * step * gd:
                a, b, val = na, nb, nv
                break
            step /= 2.0
        else:
            break
    if not converged:
        p = platt_probability(f, a, b)
        converged = math.hypot(float(f @ (t - p)), float((t - p).sum())) < max(tol, 1e-5)
        if not converged:
            warnings.warn("Platt scaling did not converge; returning the last iterate", RuntimeWarning)
    return a, b


def class_weights(labels: np.ndarray, balance: bool = True) -> tuple[float, float]:
    """Penalty multipliers (positive, negative): positives get #neg / #pos."""
    y = np.asarray(labels).astype(bool)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise TrainingError(f"training data must contain both classes (pos={n_pos}, neg={n_neg})")
    return (n_neg / n_pos if balance else 1.0), 1.0


def _dual_cd(x: np.ndarray, y: np.ndarray, upper: np.ndarray, cfg: SvmConfig) -> np.ndarray:
    """Dual coordinate descent for the L1-loss linear SVM (Hsieh et al. 2008)."""
    n, d = x.shape
    rows = x.tolist()
    ys = y.tolist()
    ub = upper.tolist()
    qii = (x * x).sum(axis=1).tolist()
    alpha = [0.0] * n
    w = [0.0] * d
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.max_epochs):
        pg_max, pg_min = -math.inf, math.inf
        for i in rng.permutation(n).tolist():
            xi = rows[i]
            yi = ys[i]
            g = yi * sum(wk * xk for wk, xk in zip(w, xi)) - 1.0
            ai = alpha[i]
            if ai == 0.0:
                pg = min(g, 0.0)
            elif ai == ub[i]:
                pg = max(g, 0.0)
            else:
                pg = g
            pg_max = max(pg_max, pg)
            pg_min = min(pg_min, pg)
            if pg != 0.0 and qii[i] > 0.0:
                new = min(max(ai - g / qii[i], 0.0), ub[i])
                delta = (new - ai) * yi
                if delta != 0.0:
                    alpha[i] = new
                    w = [wk + delta * xk for wk, xk in zip(w, xi)]
        if pg_max - pg_min < cfg.tol:
            break
    return np.array(w)


def _stratified_split(y: np.ndarray, frac: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed + 1)
    train, hold = [], []
    for cls in (False, True):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(len(idx))]
        k = int(round(frac * len(idx)))
        hold.append(idx[:k])
        train.append(idx[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(hold))


def train_svm_arrays(x: np.ndarray, y: np.ndarray, balance: bool = True, cfg: SvmConfig | None = None) -> LinearModel:
    cfg = cfg or SvmConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y).astype(bool)
    if x.ndim != 2 or x.shape[1] != N_FEATURES:
        raise TrainingError(f"expected an (n, {N_FEATURES}) feature matrix")
    class_weights(y, balance)
    tr, ho = _stratified_split(y, cfg.holdout, cfg.seed)
    if ho.size == 0 or y[ho].all() or not y[ho].any():
        tr, ho = np.arange(len(y)), np.arange(len(y))
    w_pos, w_neg = class_weights(y[tr], balance)
    ys = np.where(y[tr], 1.0, -1.0)
    cost = np.where(y[tr], w_pos, w_neg)
    upper = cost / (cfg.lam * len(tr))
    xa = np.hstack([x[tr], np.ones((len(tr), 1))])
    w = _dual_cd(xa, ys, upper, cfg)
    model = LinearModel(w[:-1], float(w[-1]), 0.0, 0.0)
    a, b = fit_platt(model.decision_function(x[ho]), y[ho])
    model.platt_a, model.platt_b = a, b
    model.meta.update(n_train=str(len(tr)), n_holdout=str(len(ho)), positive_weight=repr(w_pos), lam=repr(cfg.lam))
    return model


def train_svm(examples, balance: bool = True, cfg: SvmConfig | None = None) -> LinearModel:
    """Train from a list of :class:`~mlaco.training.TrainingExample`."""
    if not examples:
        raise TrainingError("no training examples")
    x = np.array([e.features for e in examples], dtype=float)
    y = np.array([e.label for e in examples], dtype=bool)
    return train_svm_arrays(x, y, balance, cfg)


def accuracy(model: LinearModel, x: np.ndarray, y: np.ndarray) -> float:
    pred = model.decision_function(x) > 0
    return float(np.mean(pred == np.asarray(y).astype(bool)))


def dump_model(model: LinearModel) -> str:
    """Serialize as ``key value...`` lines; floats use shortest round-trip repr."""
    lines = [
        f"format {MODEL_FORMAT}",
        f"version {MODEL_VERSION}",
        "features " + " ".join(model.feature_names),
        f"normalization {model.normalization}",
        "weights " + " ".join(repr(float(v)) for v in model.weights),
        f"bias {float(model.bias)!r}",
        f"platt_a {float(model.platt_a)!r}",
        f"platt_b {float(model.platt_b)!r}",
    ]
    for k in sorted(model.meta):
        lines.append(f"meta.{k} {model.meta[k]}")
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> LinearModel:
    fields: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(" ")
        fields[key] = value.strip()
    if fields.get("format") != MODEL_FORMAT:
        raise ValueError("not a model file")
    if int(fields.get("version", "0")) != MODEL_VERSION:
        raise ValueError(f"unsupported model version {fields.get('version')}")
    names = tuple(fields["features"].split())
    if names != FEATURE_NAMES:
        raise ValueError(f"model features {names} differ from {FEATURE_NAMES}")
    if fields["normalization"] != NORMALIZATION_POLICY:
        raise ValueError(f"unsupported normalization {fields['normalization']}")
    meta = {k[5:]: v for k, v in fields.items() if k.startswith("meta.")}
    return LinearModel(
        weights=np.array([float(v) for v in fields["weights"].split()]),
        bias=float(fields["bias"]),
        platt_a=float(fields["platt_a"]),
        platt_b=float(fields["platt_b"]),
        normalization=fields["normalization"],
        feature_names=names,
        meta=meta,
    )
