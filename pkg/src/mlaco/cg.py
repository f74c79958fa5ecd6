"""Column generation for the LP relaxation of the pattern formulation."""

from __future__ import annotations

import csv
import enum
import io
import logging
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .aco import AcoConfig, ConfigurationError, StrategyKind, random_samples, run_strategy
from .instance import Instance
from .ml import LinearModel
from .pricing import PricingProblem, PricingSolution, pool_search, solve_exact
from .simplex import Column, LpSolution, LpStatus, RevisedSimplex, reduced_cost

log = logging.getLogger(__name__)

EPS_RC = 1e-6
ITERATION_LOG_HEADER = ("iteration", "lp_objective", "columns_added", "min_reduced_cost", "elapsed_seconds")


class PricingKind(enum.Enum):
    EXACT_SINGLE = "exact"
    EXACT_POOL = "exact-pool"
    PLAIN_ACO = "aco"
    MLPH = "mlph"
    MLACO_PREDICTED_ETA = "mlaco"
    MLACO_PRED_HEU_ETA = "mlaco-pred-heu-eta"
    MLACO_PREDICTED_TAU = "mlaco-pred-tau"

    @property
    def strategy(self) -> StrategyKind | None:
        try:
            return StrategyKind(self.value)
        except ValueError:
            return None

    @property
    def is_heuristic(self) -> bool:
        return self.strategy is not None

    @property
    def needs_model(self) -> bool:
        return self.strategy is not None and self.strategy.needs_model


class CgStatus(enum.Enum):
    OPTIMAL = "Optimal"
    TIME_LIMIT = "TimeLimit"
    INFEASIBLE = "Infeasible"


@dataclass
class CgConfig:
    pricing_kind: PricingKind = PricingKind.EXACT_SINGLE
    time_limit: float = 1800.0
    rc_threshold: float = -EPS_RC
    rng_seed: int = 0
    aco: AcoConfig = field(default_factory=AcoConfig)
    model_path: str | None = None
    model: LinearModel | None = None
    max_cols_per_iter: int | None = None
    pool_size: int | None = None  # None: n_items
    exact_node_budget: int | None = None

    def __post_init__(self):
        if isinstance(self.pricing_kind, str):
            self.pricing_kind = PricingKind(self.pricing_kind)
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")

    def resolve_model(self) -> LinearModel | None:
        if self.model is None and self.model_path:
            self.model = LinearModel.load(self.model_path)
        if self.pricing_kind.needs_model and self.model is None:
            raise ConfigurationError(
                f"pricing kind {self.pricing_kind.value!r} needs a model (pass --model PATH)"
            )
        return self.model


@dataclass
class Constraints:
    """Ryan-Foster branching state: merged (together) groups and apart pairs."""

    merged_groups: tuple[tuple[int, ...], ...] = ()
    apart: tuple[tuple[int, int], ...] = ()

    def group_of(self) -> dict[int, tuple[int, ...]]:
        out = {}
        for g in self.merged_groups:
            for i in g:
                out[i] = g
        return out

    def allows(self, items: Sequence[int]) -> bool:
        s = set(items)
        for i, j in self.apart:
            if i in s and j in s:
                return False
        for g in self.merged_groups:
            k = len(s.intersection(g))
            if 0 < k < len(g):
                return False
        return True

    def pricing_problem(self, instance: Instance, duals: Sequence[float]) -> PricingProblem:
        return PricingProblem.from_instance(instance, duals, merged_groups=self.merged_groups, extra_conflicts=self.apart)

    def is_trivial(self) -> bool:
        return not self.merged_groups and not self.apart


class ColumnPool:
    """Append-only store of distinct feasible patterns, shared across B&P nodes."""

    def __init__(self):
        self.columns: list[Column] = []
        self._index: dict[tuple[int, ...], Column] = {}

    def __len__(self) -> int:
        return len(self.columns)

    def __contains__(self, items) -> bool:
        return tuple(sorted(items)) in self._index

    def add(self, items: Iterable[int]) -> tuple[Column, bool]:
        key = tuple(sorted(set(items)))
        col = self._index.get(key)
        if col is not None:
            return col, False
        col = Column(key, len(self.columns))
        self.columns.append(col)
        self._index[key] = col
        return col, True


@dataclass
class IterationLog:
    iteration: int
    lp_objective: float
    columns_added: int
    min_reduced_cost: float
    elapsed_seconds: float
    exact_fallback: bool = False


@dataclass
class CgResult:
    lp_objective: float
    iterations: int
    columns_generated: int
    exact_fallback_calls: int
    pricing_calls: int
    wall_time: float
    status: CgStatus
    final_columns: list[Column]
    primal: np.ndarray
    duals: np.ndarray
    history: list[IterationLog] = field(default_factory=list)

    def iteration_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ITERATION_LOG_HEADER)
        for h in self.history:
            w.writerow([h.iteration, repr(h.lp_objective), h.columns_added, repr(h.min_reduced_cost), f"{h.elapsed_seconds:.6f}"])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "lp_objective": self.lp_objective,
            "iterations": self.iterations,
            "columns_generated": self.columns_generated,
            "exact_fallback_calls": self.exact_fallback_calls,
            "pricing_calls": self.pricing_calls,
            "wall_time": self.wall_time,
            "final_columns": len(self.final_columns),
        }


def init_rmp(instance: Instance, rng: np.random.Generator, constraints: Constraints | None = None) -> list[tuple[int, ...]]:
    """Random feasible patterns until every item is covered.

    After ``n_items`` random patterns, any item still uncovered gets a
    singleton (its merged group, under branching).
    """
    constraints = constraints or Constraints()
    n = instance.n_items
    problem = constraints.pricing_problem(instance, np.ones(n))
    cp = problem.compact()
    covered = np.zeros(n, dtype=bool)
    patterns: list[tuple[int, ...]] = []
    seen = set()
    attempts = 0
    while not covered.all() and attempts < n:
        batch = random_samples(cp, 1, rng)
        items = cp.expand(np.flatnonzero(batch.membership[0]))
        attempts += 1
        if items and items not in seen:
            seen.add(items)
            patterns.append(items)
            covered[list(items)] = True
    for g in cp.groups:
        if not covered[g[0]]:
            patterns.append(tuple(g))
            covered[list(g)] = True
    return patterns


def certify_optimality(instance: Instance, duals: Sequence[float], constraints: Constraints | None = None) -> bool:
    """True iff no feasible pattern prices out below -EPS_RC under ``duals``."""
    problem = (constraints or Constraints()).pricing_problem(instance, duals)
    sol, proven = solve_exact(problem)
    return proven and sol.reduced_cost >= -EPS_RC


def _check_pattern(instance: Instance, constraints: Constraints, items: Sequence[int]) -> None:
    if not items:
        raise AssertionError("pricer returned an empty pattern")
    if sum(instance.weights[i] for i in items) > instance.capacity:
        raise AssertionError(f"pattern {items} exceeds capacity")
    masks = instance.conflicts.masks
    chosen = sum(1 << i for i in items)
    if any(masks[i] & chosen for i in items):
        raise AssertionError(f"pattern {items} violates a conflict")
    if not constraints.allows(items):
        raise AssertionError(f"pattern {items} violates a branching decision")


def run_cg(
    instance: Instance,
    cfg: CgConfig,
    *,
    pool: ColumnPool | None = None,
    constraints: Constraints | None = None,
    initial: Iterable[Sequence[int]] | None = None,
    deadline: float | None = None,
    rng: np.random.Generator | None = None,
) -> CgResult:
    """Solve the master LP by column generation.

    ``pool`` collects every generated column (shared between B&P nodes);
    the RMP starts from ``initial`` patterns, or random ones when omitted.
    """
    start = time.monotonic()
    limit = start + cfg.time_limit
    deadline = limit if deadline is None else min(deadline, limit)
    constraints = constraints or Constraints()
    pool = pool if pool is not None else ColumnPool()
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
    model = cfg.resolve_model()
    kind = cfg.pricing_kind
    n = instance.n_items

    patterns = list(initial) if initial is not None else init_rmp(instance, rng, constraints)
    rmp: list[Column] = []
    in_rmp: set[int] = set()
    rmp_items: set[tuple[int, ...]] = set()
    for items in patterns:
        _check_pattern(instance, constraints, items)
        col, _ = pool.add(items)
        if col.id not in in_rmp:
            in_rmp.add(col.id)
            rmp_items.add(col.items)
            rmp.append(col)

    simplex = RevisedSimplex(n)
    history: list[IterationLog] = []
    generated = fallbacks = pricing_calls = iterations = 0
    status = CgStatus.TIME_LIMIT
    sol: LpSolution | None = None
    last_obj = np.inf

    while True:
        if time.monotonic() > deadline:
            break
        sol = simplex.solve(rmp)
        if sol.status is LpStatus.INFEASIBLE:
            status = CgStatus.INFEASIBLE
            break
        iterations += 1
        if sol.objective > last_obj + 1e-7:
            raise AssertionError("master LP objective increased after adding columns")
        last_obj = sol.objective
        problem = constraints.pricing_problem(instance, sol.duals)

        found: list[PricingSolution] = []
        exact_rc = None
        timed_out = False
        fell_back = False
        pricing_calls += 1
        if kind is PricingKind.EXACT_SINGLE:
            best, proven = _exact(problem, cfg, deadline)
            timed_out = not proven
            exact_rc = best.reduced_cost
            found = [best]
        elif kind is PricingKind.EXACT_POOL:
            found, best, proven = pool_search(problem, cfg.pool_size or n, cfg.rc_threshold, cfg.exact_node_budget, deadline)
            exact_rc = best.reduced_cost
            timed_out = not proven
            if not found:
                found = [best]
        else:
            found = run_strategy(problem, kind.strategy, cfg.aco, model, rng, deadline)
            found = [s for s in found if s.reduced_cost < -EPS_RC and s.items not in rmp_items]
            if not found:
                fallbacks += 1
                fell_back = True
                best, proven = _exact(problem, cfg, deadline)
                timed_out = not proven
                exact_rc = best.reduced_cost
                found = [best]

        improving = sorted((s for s in found if s.reduced_cost < -EPS_RC), key=lambda s: (s.reduced_cost, s.items))
        if cfg.max_cols_per_iter is not None:
            improving = improving[: cfg.max_cols_per_iter]
        added = 0
        for s in improving:
            _check_pattern(instance, constraints, s.items)
            col, new = pool.add(s.items)
            if col.id in in_rmp:
                continue
            in_rmp.add(col.id)
            rmp_items.add(col.items)
            rmp.append(col)
            generated += new
            added += 1
        min_rc = min((s.reduced_cost for s in found), default=np.inf)
        if exact_rc is not None:
            min_rc = min(min_rc, exact_rc)
        history.append(IterationLog(iterations, sol.objective, added, float(min_rc), time.monotonic() - start, fell_back))
        if added == 0:
            if timed_out:
                break
            if exact_rc is None or exact_rc < -EPS_RC:
                raise AssertionError("pricing found an improving column already in the RMP")
            status = CgStatus.OPTIMAL
            break

    wall = time.monotonic() - start
    if sol is None or sol.status is LpStatus.INFEASIBLE:
        obj = np.inf if status is CgStatus.INFEASIBLE else np.nan
        return CgResult(obj, iterations, generated, fallbacks, pricing_calls, wall, status, list(rmp),
                        np.zeros(len(rmp)), np.zeros(n), history)
    primal = np.zeros(len(rmp))
    primal[: len(sol.primal)] = sol.primal
    return CgResult(sol.objective, iterations, generated, fallbacks, pricing_calls, wall, status, list(rmp),
                    primal, sol.duals, history)


def _exact(problem: PricingProblem, cfg: CgConfig, deadline: float) -> tuple[PricingSolution, bool]:
    return solve_exact(problem, cfg.exact_node_budget, deadline=deadline)


__all__ = [
    "CgConfig",
    "CgResult",
    "CgStatus",
    "ColumnPool",
    "Constraints",
    "IterationLog",
    "PricingKind",
    "certify_optimality",
    "init_rmp",
    "reduced_cost",
    "run_cg",
]
