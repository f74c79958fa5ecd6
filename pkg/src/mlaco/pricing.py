"""Pricing problem (knapsack with conflicts) and its exact solvers.

Branching constraints are folded in once, by :meth:`PricingProblem.compact`:
forbidden items disappear, every merged group becomes a single super-item
(summed weight and profit, union of conflicts), and all solvers work on the
resulting plain 1DKPC.
"""

from __future__ import annotations

import bisect
import math
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .instance import ConflictGraph, Instance

EPS_PRUNE = 1e-9
BRUTE_FORCE_LIMIT = 25


@dataclass(frozen=True)
class PricingSolution:
    items: tuple[int, ...]
    profit: float

    @property
    def reduced_cost(self) -> float:
        return 1.0 - self.profit


@dataclass(frozen=True)
class CompactProblem:
    """Plain 1DKPC over super-items; ``groups[k]`` lists the original items of super-item k."""

    groups: tuple[tuple[int, ...], ...]
    profits: np.ndarray
    weights: np.ndarray
    capacity: int
    adjacency: np.ndarray  # dense bool matrix

    @property
    def n(self) -> int:
        return len(self.groups)

    @cached_property
    def masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << int(j) for j in np.flatnonzero(row)) for row in self.adjacency)

    @cached_property
    def neighbors(self) -> tuple[np.ndarray, ...]:
        return tuple(np.flatnonzero(row) for row in self.adjacency)

    def expand(self, selected: Iterable[int]) -> tuple[int, ...]:
        return tuple(sorted(i for k in selected for i in self.groups[k]))

    def solution(self, selected: Iterable[int]) -> PricingSolution:
        # correctly rounded, so the value depends only on the set, not its order
        profit = math.fsum(float(self.profits[k]) for k in selected)
        return PricingSolution(self.expand(selected), profit)


@dataclass
class PricingProblem:
    profits: np.ndarray
    weights: np.ndarray
    capacity: int
    conflicts: ConflictGraph
    forbidden_items: frozenset[int] = frozenset()
    merged_groups: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        self.profits = np.asarray(self.profits, dtype=float)
        self.weights = np.asarray(self.weights, dtype=np.int64)
        self.forbidden_items = frozenset(self.forbidden_items)
        n = self.conflicts.n_vertices
        if len(self.profits) != n or len(self.weights) != n:
            raise ValueError("profits, weights and conflict graph must have the same size")

    @classmethod
    def from_instance(
        cls,
        instance: Instance,
        duals: Sequence[float],
        forbidden: Iterable[int] = (),
        merged_groups: Sequence[Sequence[int]] = (),
        extra_conflicts: Sequence[tuple[int, int]] = (),
    ) -> "PricingProblem":
        graph = instance.conflicts.with_edges(extra_conflicts) if extra_conflicts else instance.conflicts
        return cls(
            profits=np.maximum(np.asarray(duals, dtype=float), 0.0),
            weights=instance.weight_array,
            capacity=instance.capacity,
            conflicts=graph,
            forbidden_items=frozenset(forbidden),
            merged_groups=tuple(tuple(sorted(g)) for g in merged_groups if len(g) > 1),
        )

    @property
    def n_items(self) -> int:
        return len(self.profits)

    def compact(self) -> CompactProblem:
        cached = getattr(self, "_compact", None)
        if cached is not None:
            return cached
        n = self.n_items
        owner = list(range(n))
        for g in self.merged_groups:
            root = min(g)
            for i in g:
                owner[i] = root
        members: dict[int, list[int]] = {}
        for i in range(n):
            members.setdefault(owner[i], []).append(i)
        masks = self.conflicts.masks
        groups = []
        for root in sorted(members):
            g = members[root]
            if any(i in self.forbidden_items for i in g):
                continue
            if int(self.weights[g].sum()) > self.capacity:
                continue
            gmask = sum(1 << i for i in g)
            if any(masks[i] & gmask for i in g):
                continue  # internally conflicting group can never be packed
            groups.append(tuple(g))
        m = len(groups)
        adj = np.zeros((m, m), dtype=bool)
        group_masks = [sum(1 << i for i in g) for g in groups]
        nbr_masks = []
        for g in groups:
            acc = 0
            for i in g:
                acc |= masks[i]
            nbr_masks.append(acc)
        for a in range(m):
            for b in range(a + 1, m):
                if nbr_masks[a] & group_masks[b]:
                    adj[a, b] = adj[b, a] = True
        cp = CompactProblem(
            groups=tuple(groups),
            profits=np.array([self.profits[list(g)].sum() for g in groups], dtype=float),
            weights=np.array([self.weights[list(g)].sum() for g in groups], dtype=np.int64),
            capacity=int(self.capacity),
            adjacency=adj,
        )
        object.__setattr__(self, "_compact", cp)
        return cp

    def is_feasible(self, items: Iterable[int]) -> bool:
        items = set(items)
        if items & self.forbidden_items:
            return False
        if int(sum(self.weights[i] for i in items)) > self.capacity:
            return False
        masks = self.conflicts.masks
        chosen = sum(1 << i for i in items)
        if any(masks[i] & chosen for i in items):
            return False
        return all(len(items & set(g)) in (0, len(g)) for g in self.merged_groups)


class _Search:
    """Depth-first branch-and-bound over a compact problem, items in ratio order."""

    def __init__(
        self,
        cp: CompactProblem,
        node_budget: int | None,
        pool: dict | None,
        threshold: float,
        deadline: float | None = None,
    ):
        keep = [k for k in range(cp.n) if cp.profits[k] > 0.0]
        # ratio descending, ties by lower index
        keep.sort(key=lambda k: (-cp.profits[k] / cp.weights[k], k))
        self.order = keep
        pos = {k: p for p, k in enumerate(keep)}
        self.profit = [float(cp.profits[k]) for k in keep]
        self.weight = [int(cp.weights[k]) for k in keep]
        self.nbr = []
        for k in keep:
            m = 0
            for j in cp.neighbors[k]:
                p = pos.get(int(j))
                if p is not None:
                    m |= 1 << p
            self.nbr.append(m)
        # items sorted by weight descending; heavy_prefix[t] = mask of the t heaviest
        by_weight = sorted(range(len(keep)), key=lambda p: -self.weight[p])
        self.sorted_neg_w = [-self.weight[p] for p in by_weight]
        self.heavy_prefix = [0]
        for p in by_weight:
            self.heavy_prefix.append(self.heavy_prefix[-1] | (1 << p))
        self.budget = node_budget
        self.deadline = deadline
        self.nodes = 0
        self.exhausted = False
        self.best = 0.0
        self.best_mask = 0
        self.pool = pool
        self.threshold = threshold

    def heavier_than(self, rem: int) -> int:
        """Mask of items with weight > rem."""
        t = bisect.bisect_left(self.sorted_neg_w, -rem)
        return self.heavy_prefix[t]

    def bound(self, cand: int, rem: int) -> float:
        """Fractional knapsack over ``cand`` in ratio order (conflicts among candidates ignored)."""
        total = 0.0
        profit, weight = self.profit, self.weight
        while cand:
            low = cand & -cand
            p = low.bit_length() - 1
            w = weight[p]
            if w <= rem:
                rem -= w
                total += profit[p]
            else:
                return total + profit[p] * rem / w
            cand ^= low
        return total

    def clique_bound(self, cand: int) -> float:
        """Greedy clique cover of ``cand``: each clique holds at most one chosen item."""
        total = 0.0
        nbr, profit = self.nbr, self.profit
        rest = cand
        while rest:
            low = rest & -rest
            p = low.bit_length() - 1
            rest ^= low
            best = profit[p]
            inside = rest & nbr[p]
            while inside:
                low = inside & -inside
                q = low.bit_length() - 1
                rest ^= low
                if profit[q] > best:
                    best = profit[q]
                inside &= nbr[q]
            total += best
        return total

    def run(self, capacity: int) -> None:
        n = len(self.order)
        root = ((1 << n) - 1) & ~self.heavier_than(capacity)
        self.root_bound = min(self.bound(root, capacity), self.clique_bound(root))
        self._dfs(root, capacity, 0.0, 0)

    def _record(self, mask: int, value: float) -> None:
        if self.pool is not None and 1.0 - value < self.threshold:
            self.pool[mask] = value

    def _pruned(self, bound: float) -> bool:
        # the pool keeps exploring ties so that equally good solutions get recorded
        if self.pool is None:
            return bound <= self.best + EPS_PRUNE
        return bound < self.best - EPS_PRUNE

    def _dfs(self, cand: int, rem: int, value: float, chosen: int) -> None:
        if self.exhausted:
            return
        self.nodes += 1
        if self.budget is not None and self.nodes > self.budget:
            self.exhausted = True
            return
        if self.deadline is not None and self.nodes & 1023 == 0 and time.monotonic() > self.deadline:
            self.exhausted = True
            return
        if value > self.best + EPS_PRUNE:
            self.best = value
            self.best_mask = chosen
            self._record(chosen, value)
        if not cand:
            if self.pool is not None and value >= self.best - EPS_PRUNE:
                self._record(chosen, value)
            return
        if self._pruned(value + self.bound(cand, rem)) or self._pruned(value + self.clique_bound(cand)):
            return
        low = cand & -cand
        p = low.bit_length() - 1
        r = rem - self.weight[p]
        self._dfs(cand & ~self.nbr[p] & ~low & ~self.heavier_than(r), r, value + self.profit[p], chosen | low)
        self._dfs(cand ^ low, rem, value, chosen)

    def selected(self, mask: int) -> list[int]:
        out = []
        while mask:
            low = mask & -mask
            out.append(self.order[low.bit_length() - 1])
            mask ^= low
        return out


def solve_exact(
    problem: PricingProblem, node_budget: int | None = None, deadline: float | None = None
) -> tuple[PricingSolution, bool]:
    """Maximum-profit feasible item set.

    The flag is False when the node budget or the ``time.monotonic()``
    deadline ran out; the solution is then the best one found.
    """
    cp = problem.compact()
    search = _Search(cp, node_budget, None, 0.0, deadline)
    search.run(cp.capacity)
    sol = cp.solution(search.selected(search.best_mask))
    proven = not search.exhausted
    assert search.root_bound + 1e-9 >= sol.profit, "root bound is not admissible"
    return sol, proven


def solve_pool(
    problem: PricingProblem,
    max_solutions: int | None = None,
    rc_threshold: float = -1e-6,
    node_budget: int | None = None,
) -> list[PricingSolution]:
    """Distinct improving solutions met during the search, best first.

    Records every new incumbent and every maximal leaf whose profit ties or
    beats the incumbent at the time it is reached, keeping those with reduced
    cost below ``rc_threshold``.
    """
    return pool_search(problem, max_solutions, rc_threshold, node_budget)[0]


def pool_search(
    problem: PricingProblem,
    max_solutions: int | None = None,
    rc_threshold: float = -1e-6,
    node_budget: int | None = None,
    deadline: float | None = None,
) -> tuple[list[PricingSolution], PricingSolution, bool]:
    """:func:`solve_pool` plus the search optimum and its proven-optimal flag."""
    cp = problem.compact()
    if max_solutions is None:
        max_solutions = max(1, problem.n_items)
    if max_solutions < 1:
        raise ValueError("max_solutions must be >= 1")
    pool: dict[int, float] = {}
    search = _Search(cp, node_budget, pool, rc_threshold, deadline)
    search.run(cp.capacity)
    best = cp.solution(search.selected(search.best_mask))
    ranked = sorted(pool.items(), key=lambda kv: (-kv[1], kv[0]))
    out, seen = [], set()
    for mask, _ in ranked:
        sol = cp.solution(search.selected(mask))
        if sol.items in seen:
            continue
        seen.add(sol.items)
        out.append(sol)
        if len(out) == max_solutions:
            break
    return out, best, not search.exhausted


def brute_force_pricing(problem: PricingProblem) -> PricingSolution:
    """Exhaustive enumeration of every subset of super-items (test oracle)."""
    cp = problem.compact()
    n = cp.n
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force refuses n={n} > {BRUTE_FORCE_LIMIT}")
    if n == 0:
        return PricingSolution((), 0.0)
    low_n = min(n, 18)
    high_n = n - low_n
    profits = cp.profits
    weights = cp.weights
    masks = np.array([m for m in cp.masks], dtype=object)

    # table of all subsets of the low items: profit, weight, internal feasibility
    size = 1 << low_n
    idx = np.arange(size, dtype=np.int64)
    prof = np.zeros(size)
    wt = np.zeros(size, dtype=np.int64)
    ok = np.ones(size, dtype=bool)
    for k in range(low_n):
        has = (idx >> k) & 1 == 1
        prof[has] += profits[k]
        wt[has] += weights[k]
        low_nbrs = int(masks[k]) & (size - 1)
        ok &= ~(has & ((idx & low_nbrs) != 0))

    best_val, best_sel = 0.0, ()
    for hi in range(1 << high_n):
        hi_items = [low_n + t for t in range(high_n) if (hi >> t) & 1]
        if any(int(masks[a]) >> b & 1 for a in hi_items for b in hi_items):
            continue
        hi_w = int(sum(weights[k] for k in hi_items))
        if hi_w > cp.capacity:
            continue
        hi_p = float(sum(profits[k] for k in hi_items))
        forbid = 0
        for a in hi_items:
            forbid |= int(masks[a])
        forbid &= size - 1
        feasible = ok & (wt + hi_w <= cp.capacity) & ((idx & forbid) == 0)
        if not feasible.any():
            continue
        vals = np.where(feasible, prof, -np.inf)
        j = int(np.argmax(vals))
        if vals[j] + hi_p > best_val:
            best_val = float(vals[j] + hi_p)
            best_sel = tuple([k for k in range(low_n) if (j >> k) & 1] + hi_items)
    return cp.solution(best_sel)
