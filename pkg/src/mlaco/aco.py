"""Sampling-based pricing: random sampling, diversity-aware ACO, MLPH and MLACO variants.

All routines operate on the compact problem (branching constraints folded in)
and return :class:`~mlaco.pricing.PricingSolution` objects in original item
indices. Ant constructions are vectorized: every ant of a sweep advances one
pick per step, each with its own row of the candidate mask.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .features import compact_features, sample_objectives
from .ml import LinearModel, predict_probability
from .pricing import CompactProblem, PricingProblem, PricingSolution

TAU_MIN = 1e-6
P_FLOOR = 1e-6


class ConfigurationError(ValueError):
    pass


class StrategyKind(enum.Enum):
    PLAIN_ACO = "aco"
    MLPH = "mlph"
    MLACO_PREDICTED_ETA = "mlaco"
    MLACO_PRED_HEU_ETA = "mlaco-pred-heu-eta"
    MLACO_PREDICTED_TAU = "mlaco-pred-tau"

    @property
    def needs_model(self) -> bool:
        return self is not StrategyKind.PLAIN_ACO


@dataclass
class AcoConfig:
    alpha: float = 1.0
    beta: float = 1.0
    rho: float = 0.95
    lam: float = 1.0
    iterations: int = 10
    population: int | None = None  # None: one ant per eligible item
    rc_threshold: float = -1e-6
    tau_min: float = TAU_MIN
    # False: tau <- (1 - rho) tau + deposits; True: tau <- rho tau + deposits
    rho_is_persistence: bool = False
    diversity: bool = True

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if not 0.0 < self.rho <= 1.0:
            raise ValueError("rho must lie in (0, 1]")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.population is not None and self.population < 1:
            raise ValueError("population must be >= 1")


@dataclass
class AcoState:
    tau: np.ndarray
    eta: np.ndarray
    c_best: float = 0.0
    best_solution: tuple[int, ...] = ()

    @classmethod
    def uniform(cls, n: int) -> "AcoState":
        return cls(np.ones(n), np.ones(n))


@dataclass
class Sweep:
    """Raw result of one round of ant constructions (compact indices)."""

    membership: np.ndarray
    objectives: np.ndarray
    seeds: list[int] = field(default_factory=list)


def selection_probabilities(candidates, state: AcoState, cfg: AcoConfig) -> np.ndarray:
    """Probability of picking each item next; zero outside ``candidates``.

    ``candidates`` is a boolean mask or a collection of item indices.
    """
    n = len(state.tau)
    mask = np.zeros(n, dtype=bool)
    cand = np.asarray(candidates)
    if cand.dtype == bool:
        mask[:] = cand
    else:
        mask[cand.astype(int)] = True
    if not mask.any():
        raise ValueError("candidate set must not be empty")
    score = _scores(state, cfg)
    p = np.where(mask, score, 0.0)
    total = p.sum()
    if not total > 0.0 or not np.isfinite(total):
        p = mask.astype(float)
        total = p.sum()
    return p / total


def _scores(state: AcoState, cfg: AcoConfig) -> np.ndarray:
    # 0 ** 0 == 1, so zero exponents ignore tau / eta entirely
    return np.power(state.tau, cfg.alpha) * np.power(state.eta, cfg.beta)


def construct(
    cp: CompactProblem,
    score: np.ndarray | None,
    n_ants: int,
    rng: np.random.Generator,
    seeds: Sequence[int] | None = None,
) -> Sweep:
    """Build ``n_ants`` maximal feasible solutions.

    Each step picks an item with probability proportional to ``score`` over
    the ant's candidates (uniform when ``score`` is None or sums to zero),
    then drops the item, its conflict neighbours and anything that no longer
    fits. With ``seeds`` the ant's first item is fixed.
    """
    n = cp.n
    weights = cp.weights
    adj = cp.adjacency
    member = np.zeros((n_ants, n), dtype=bool)
    rem = np.full(n_ants, cp.capacity, dtype=np.int64)
    cand = np.broadcast_to(weights <= cp.capacity, (n_ants, n)).copy()
    if n == 0:
        return Sweep(member, np.zeros(n_ants), list(seeds or []))

    def take(rows: np.ndarray, items: np.ndarray):
        member[rows, items] = True
        rem[rows] -= weights[items]
        cand[rows] &= ~adj[items]
        cand[rows, items] = False
        cand[rows] &= weights[None, :] <= rem[rows, None]

    if seeds is not None:
        seeds = list(seeds)
        take(np.arange(n_ants), np.asarray(seeds, dtype=np.int64))

    while True:
        active = np.flatnonzero(cand.any(axis=1))
        if active.size == 0:
            break
        c = cand[active]
        if score is None:
            w = c.astype(float)
        else:
            w = np.where(c, score[None, :], 0.0)
            dead = ~(w.sum(axis=1) > 0.0)
            if dead.any():
                w[dead] = c[dead].astype(float)
        cum = np.cumsum(w, axis=1)
        u = rng.random(active.size) * cum[:, -1]
        picks = np.argmax(cum > u[:, None], axis=1)
        take(active, picks)
    return Sweep(member, sample_objectives(cp.profits, member), list(seeds or []))


def random_samples(problem: PricingProblem | CompactProblem, n_samples: int, rng: np.random.Generator) -> Sweep:
    cp = problem.compact() if isinstance(problem, PricingProblem) else problem
    return construct(cp, None, n_samples, rng)


def random_sample(problem: PricingProblem, rng: np.random.Generator) -> PricingSolution:
    """One uniformly random maximal feasible solution."""
    cp = problem.compact()
    sweep = construct(cp, None, 1, rng)
    return cp.solution(np.flatnonzero(sweep.membership[0]))


def sweep_constructions(cp: CompactProblem, state: AcoState, cfg: AcoConfig, rng: np.random.Generator) -> Sweep:
    """Raw constructions of one sweep.

    With diversity on, ant k starts from item k mod n; slots whose item does
    not fit in an empty bin are dropped, so the population shrinks instead of
    seeding some item twice.
    """
    eligible = cp.weights <= cp.capacity
    n_ants = cfg.population if cfg.population is not None else cp.n
    score = _scores(state, cfg)
    if cfg.diversity:
        seeds = [k % cp.n for k in range(n_ants) if cp.n and eligible[k % cp.n]]
        if not seeds:
            return Sweep(np.zeros((0, cp.n), dtype=bool), np.zeros(0))
        return construct(cp, score, len(seeds), rng, seeds)
    if not eligible.any() or n_ants == 0:
        return Sweep(np.zeros((0, cp.n), dtype=bool), np.zeros(0))
    return construct(cp, score, n_ants, rng)


def _improving(cp: CompactProblem, sweep: Sweep, threshold: float, seen: set, out: list) -> None:
    for row, obj in zip(sweep.membership, sweep.objectives):
        if 1.0 - obj < threshold:
            sol = cp.solution(np.flatnonzero(row))
            if sol.items not in seen:
                seen.add(sol.items)
                out.append(sol)


def compact_state(cp: CompactProblem, state: AcoState, n_original: int) -> AcoState:
    size = len(state.tau)
    if size == cp.n:
        return state
    if size != n_original:
        raise ValueError(f"state has {size} items; expected {cp.n} (compact) or {n_original} (original)")
    tau = np.array([state.tau[list(g)].mean() for g in cp.groups])
    eta = np.array([state.eta[list(g)].mean() for g in cp.groups])
    return AcoState(tau, eta, state.c_best)


def diversity_sweep(problem: PricingProblem, state: AcoState, cfg: AcoConfig, rng: np.random.Generator) -> list[PricingSolution]:
    """One sweep of seeded constructions; returns improving, de-duplicated columns.

    ``state`` may address the problem's original items or its compact
    super-items; an original-item state is averaged over each super-item.
    """
    cp = problem.compact()
    sweep = sweep_constructions(cp, compact_state(cp, state, problem.conflicts.n_vertices), cfg, rng)
    out: list[PricingSolution] = []
    _improving(cp, sweep, cfg.rc_threshold, set(), out)
    return out


def deposit(state: AcoState, membership: np.ndarray, objectives: np.ndarray, cfg: AcoConfig) -> AcoState:
    """Evaporate, then add c_n / c_best / lambda to every item of sample n."""
    objectives = np.asarray(objectives, dtype=float)
    if objectives.size:
        k = int(np.argmax(objectives))
        if objectives[k] > state.c_best:
            state.c_best = float(objectives[k])
            state.best_solution = tuple(int(i) for i in np.flatnonzero(membership[k]))
    keep = cfg.rho if cfg.rho_is_persistence else 1.0 - cfg.rho
    tau = keep * state.tau
    if state.c_best > 0.0 and objectives.size:
        tau = tau + (objectives / state.c_best / cfg.lam) @ np.asarray(membership, dtype=float)
    state.tau = np.maximum(tau, cfg.tau_min)
    return state


def update_pheromone(state: AcoState, samples: Sequence[PricingSolution], cfg: AcoConfig) -> AcoState:
    """Pheromone update from solutions whose item indices address ``state.tau``."""
    n = len(state.tau)
    membership = np.zeros((len(samples), n), dtype=bool)
    for r, s in enumerate(samples):
        membership[r, list(s.items)] = True
    return deposit(state, membership, np.array([s.profit for s in samples]), cfg)


def predicted_membership(cp: CompactProblem, model: LinearModel, rng: np.random.Generator, n_samples: int | None = None) -> np.ndarray:
    """ML probability that each item is in the optimal solution, floored at ``P_FLOOR``."""
    n = cp.n
    sweep = construct(cp, None, n_samples or n, rng)
    feats = compact_features(cp, sweep.membership)
    return np.maximum(predict_probability(model, feats), P_FLOOR)


def initial_state(cp: CompactProblem, kind: StrategyKind, p: np.ndarray | None, cfg: AcoConfig) -> AcoState:
    n = cp.n
    state = AcoState.uniform(n)
    ratio = cp.profits / cp.weights
    if kind is StrategyKind.PLAIN_ACO:
        state.eta = ratio
    elif kind in (StrategyKind.MLACO_PREDICTED_ETA, StrategyKind.MLPH):
        state.eta = p.copy()
    elif kind is StrategyKind.MLACO_PRED_HEU_ETA:
        state.eta = p * ratio
    elif kind is StrategyKind.MLACO_PREDICTED_TAU:
        state.tau = np.maximum(p, cfg.tau_min)
    return state


def run_strategy(
    problem: PricingProblem,
    kind: StrategyKind,
    cfg: AcoConfig,
    model: LinearModel | None,
    rng: np.random.Generator,
    deadline: float | None = None,
) -> list[PricingSolution]:
    """Heuristic pricing; returns all distinct improving columns found, best first."""
    if kind.needs_model and model is None:
        raise ConfigurationError(f"pricing strategy {kind.value!r} needs a trained model")
    cp = problem.compact()
    if cp.n == 0:
        return []
    p = predicted_membership(cp, model, rng) if kind.needs_model else None
    state = initial_state(cp, kind, p, cfg)
    found: list[PricingSolution] = []
    seen: set = set()
    for _ in range(cfg.iterations):
        sweep = sweep_constructions(cp, state, cfg, rng)
        _improving(cp, sweep, cfg.rc_threshold, seen, found)
        if kind is not StrategyKind.MLPH:
            deposit(state, sweep.membership, sweep.objectives, cfg)
        if deadline is not None and time.monotonic() > deadline:
            break
    found.sort(key=lambda s: (-s.profit, s.items))
    return found
