"""Training data from exactly priced column generation runs."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .aco import random_samples
from .cg import EPS_RC, ColumnPool, init_rmp
from .features import FEATURE_NAMES, compact_features
from .instance import Instance
from .ml import LinearModel, SvmConfig, train_svm
from .pricing import PricingProblem, solve_exact
from .simplex import LpStatus, RevisedSimplex

log = logging.getLogger(__name__)

RECORD_ITERATIONS = (10, 15, 20, 25, 30)


@dataclass(frozen=True)
class TrainingExample:
    features: tuple[float, ...]
    label: int
    instance_tag: str

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError("label must be 0 or 1")


def snapshot_examples(problem: PricingProblem, optimal_items: Sequence[int], rng: np.random.Generator, tag: str) -> list[TrainingExample]:
    """One example per item: features from N = n fresh random samples, label = in optimum."""
    cp = problem.compact()
    sweep = random_samples(cp, cp.n, rng)
    feats = compact_features(cp, sweep.membership)
    chosen = set(optimal_items)
    out = []
    for k, group in enumerate(cp.groups):
        label = int(all(i in chosen for i in group))
        out.append(TrainingExample(tuple(float(v) for v in feats[k]), label, tag))
    return out


def collect_instance(
    instance: Instance,
    rng: np.random.Generator,
    record_iterations: Sequence[int] = RECORD_ITERATIONS,
    node_budget: int | None = None,
    time_limit: float | None = None,
) -> list[TrainingExample] | None:
    """Run exact-pricing CG up to the last recording iteration; None if a budget ran out."""
    start = time.monotonic()
    deadline = None if time_limit is None else start + time_limit
    pool = ColumnPool()
    rmp = [pool.add(p)[0] for p in init_rmp(instance, rng)]
    simplex = RevisedSimplex(instance.n_items)
    last = max(record_iterations)
    examples: list[TrainingExample] = []
    for iteration in range(1, last + 1):
        sol = simplex.solve(rmp)
        if sol.status is not LpStatus.OPTIMAL:
            return None
        problem = PricingProblem.from_instance(instance, sol.duals)
        best, proven = solve_exact(problem, node_budget, deadline)
        if not proven:
            log.warning("skipping %s: pricing budget exhausted at iteration %d", instance.name, iteration)
            return None
        if iteration in record_iterations:
            examples += snapshot_examples(problem, best.items, rng, f"{instance.name}@{iteration}")
        if best.reduced_cost >= -EPS_RC:
            break  # converged before the recording window closed
        col, new = pool.add(best.items)
        if new:
            rmp.append(col)
    return examples


def collect_training_data(
    instances: Sequence[Instance],
    seed: int = 0,
    record_iterations: Sequence[int] = RECORD_ITERATIONS,
    node_budget: int | None = None,
    time_limit: float | None = None,
) -> list[TrainingExample]:
    rng = np.random.default_rng(seed)
    data: list[TrainingExample] = []
    for inst in instances:
        got = collect_instance(inst, rng, record_iterations, node_budget, time_limit)
        if got is None:
            continue
        data += got
    return data


def train_model(instances: Sequence[Instance], seed: int = 0, cfg: SvmConfig | None = None, **kwargs) -> tuple[LinearModel, list[TrainingExample]]:
    data = collect_training_data(instances, seed, **kwargs)
    return train_svm(data, cfg=cfg or SvmConfig(seed=seed)), data


def write_training_csv(examples: Sequence[TrainingExample], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(FEATURE_NAMES) + ["label", "tag"])
        for e in examples:
            w.writerow([repr(v) for v in e.features] + [e.label, e.instance_tag])


def read_training_csv(path) -> list[TrainingExample]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if tuple(header[: len(FEATURE_NAMES)]) != FEATURE_NAMES:
        raise ValueError("unexpected training CSV header")
    k = len(FEATURE_NAMES)
    return [TrainingExample(tuple(float(v) for v in r[:k]), int(r[k]), r[k + 1]) for r in body]
