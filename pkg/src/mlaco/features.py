"""Per-item features for predicting membership in the optimal pricing solution.

Columns of the feature matrix, in order:

=========  ==========================================================
f1_profit  profit, min-max scaled within the instance
f2_ratio   profit / weight
f3_degree  conflict degree, min-max scaled
f4_bound   profit of the item plus all items it does not conflict with
fc_corr    Pearson correlation of sample membership with sample objective
fr_rank    sum over samples containing the item of 1 / rank(sample)
=========  ==========================================================

f2, f4 and fr are also min-max scaled per instance; fc is left in [-1, 1].
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .pricing import CompactProblem, PricingProblem, PricingSolution

FEATURE_NAMES = ("f1_profit", "f2_ratio", "f3_degree", "f4_bound", "fc_corr", "fr_rank")
N_FEATURES = len(FEATURE_NAMES)
# features that get min-max scaled per instance
SCALED = ("f1_profit", "f2_ratio", "f3_degree", "f4_bound", "fr_rank")
NORMALIZATION_POLICY = "instance-minmax:" + ",".join(SCALED)


def minmax(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return x
    lo, hi = x.min(), x.max()
    if hi <= lo:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


def sample_objectives(profits: np.ndarray, membership: np.ndarray) -> np.ndarray:
    """Exactly rounded objective of each sample row, independent of storage order."""
    return np.array([math.fsum(profits[np.flatnonzero(row)]) for row in membership], dtype=float)


def correlation_feature(membership: np.ndarray, objectives: np.ndarray) -> np.ndarray:
    s = np.asarray(membership, dtype=float)
    o = np.asarray(objectives, dtype=float)
    if s.shape[0] < 2:
        return np.zeros(s.shape[1])
    ds = s - s.mean(axis=0)
    do = o - o.mean()
    o_norm = math.sqrt(float(do @ do))
    if o_norm <= 1e-12 * max(1.0, float(np.abs(o).max())):
        return np.zeros(s.shape[1])
    s_norm = np.sqrt((ds * ds).sum(axis=0))
    num = ds.T @ do
    out = np.zeros(s.shape[1])
    ok = s_norm > 0
    out[ok] = num[ok] / (s_norm[ok] * o_norm)
    return np.clip(out, -1.0, 1.0)


def competition_ranks(objectives: np.ndarray) -> np.ndarray:
    """1-based descending ranks; equal objectives share the smallest rank."""
    o = np.asarray(objectives, dtype=float)
    sorted_desc = np.sort(o)[::-1]
    # number of strictly larger values = position of first occurrence in descending order
    return 1 + np.searchsorted(-sorted_desc, -o, side="left")


def rank_feature(membership: np.ndarray, objectives: np.ndarray) -> np.ndarray:
    if membership.shape[0] == 0:
        return np.zeros(membership.shape[1])
    ranks = competition_ranks(objectives).astype(float)
    return (np.asarray(membership, dtype=float) / ranks[:, None]).sum(axis=0)


def raw_features(cp: CompactProblem, membership: np.ndarray) -> np.ndarray:
    """Unscaled feature matrix (n_items x 6) for a compact problem and sample membership."""
    n = cp.n
    profits = cp.profits
    f = np.zeros((n, N_FEATURES))
    if n == 0:
        return f
    f[:, 0] = profits
    f[:, 1] = profits / cp.weights
    f[:, 2] = cp.adjacency.sum(axis=1)
    f[:, 3] = profits.sum() - cp.adjacency.astype(float) @ profits
    objs = sample_objectives(profits, membership)
    f[:, 4] = correlation_feature(membership, objs)
    f[:, 5] = rank_feature(membership, objs)
    return f


def normalize(raw: np.ndarray) -> np.ndarray:
    out = raw.copy()
    for k, name in enumerate(FEATURE_NAMES):
        if name in SCALED:
            out[:, k] = minmax(raw[:, k])
    return out


def compact_features(cp: CompactProblem, membership: np.ndarray) -> np.ndarray:
    return normalize(raw_features(cp, membership))


def membership_matrix(cp: CompactProblem, samples: Sequence[PricingSolution]) -> np.ndarray:
    """Map samples given in original item indices onto the compact problem's items."""
    where = {}
    for k, g in enumerate(cp.groups):
        for i in g:
            where[i] = k
    m = np.zeros((len(samples), cp.n), dtype=bool)
    for r, s in enumerate(samples):
        for i in s.items:
            if i in where:
                m[r, where[i]] = True
    return m


def extract_features(problem: PricingProblem, samples: Sequence[PricingSolution]) -> np.ndarray:
    """Scaled features for every (super-)item of ``problem``.

    Rows follow ``problem.compact().groups``; without branching constraints
    that is simply the item order.
    """
    cp = problem.compact()
    return compact_features(cp, membership_matrix(cp, samples))
