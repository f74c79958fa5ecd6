"""Branch-and-price with Ryan-Foster branching and column generation at every node."""

from __future__ import annotations

import csv
import enum
import heapq
import io
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cg import CgConfig, CgStatus, ColumnPool, Constraints, run_cg
from .instance import Instance
from .simplex import Column

INT_TOL = 1e-6
BOUND_TOL = 1e-6
BRUTE_FORCE_IP_LIMIT = 10
NODE_LOG_HEADER = ("node_id", "depth", "lp_bound", "status", "incumbent", "gap", "elapsed")


class BranchKind(enum.Enum):
    TOGETHER = "Together"
    APART = "Apart"


class NodeStatus(enum.Enum):
    OPEN = "Open"
    PRUNED_BOUND = "PrunedBound"
    PRUNED_INFEASIBLE = "PrunedInfeasible"
    BRANCHED = "Branched"
    INTEGRAL = "Integral"
    UNSOLVED = "Unsolved"


class BnpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    TIME_LIMIT = "TimeLimit"


class InconsistentBranchError(ValueError):
    pass


@dataclass(frozen=True)
class BranchDecision:
    i: int
    j: int
    kind: BranchKind

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("a branching pair needs two distinct items")
        if self.i > self.j:
            a, b = self.j, self.i
            object.__setattr__(self, "i", a)
            object.__setattr__(self, "j", b)


@dataclass
class BnpNode:
    decisions: tuple[BranchDecision, ...] = ()
    lp_bound: float = 0.0
    status: NodeStatus = NodeStatus.OPEN
    node_id: int = 0
    depth: int = 0

    def constraints(self) -> Constraints:
        return constraints_for(self.decisions)


@dataclass
class BnpResult:
    incumbent_value: int | None
    incumbent_patterns: list[Column]
    global_lower_bound: float
    gap_percent: float
    nodes_explored: int
    status: BnpStatus
    root_lp: float = math.nan
    wall_time: float = 0.0
    node_log: list[tuple] = field(default_factory=list)

    def node_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(NODE_LOG_HEADER)
        w.writerows(self.node_log)
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "incumbent_value": self.incumbent_value,
            "global_lower_bound": self.global_lower_bound,
            "gap_percent": self.gap_percent,
            "nodes_explored": self.nodes_explored,
            "root_lp": self.root_lp,
            "wall_time": self.wall_time,
            "incumbent_patterns": [list(c.items) for c in self.incumbent_patterns],
        }


def constraints_for(decisions: Sequence[BranchDecision]) -> Constraints:
    """Merge Together pairs transitively (union-find) and collect Apart pairs.

    Raises :class:`InconsistentBranchError` when an Apart pair ends up inside
    one merged group.
    """
    parent: dict[int, int] = {}

    def find(x: int) -> int:
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    apart = []
    for d in decisions:
        if d.kind is BranchKind.TOGETHER:
            a, b = find(d.i), find(d.j)
            if a != b:
                parent[max(a, b)] = min(a, b)
        else:
            apart.append((d.i, d.j))
    groups: dict[int, list[int]] = {}
    for x in list(parent):
        groups.setdefault(find(x), []).append(x)
    merged = tuple(sorted(tuple(sorted(g)) for g in groups.values() if len(g) > 1))
    for i, j in apart:
        if i in parent and j in parent and find(i) == find(j):
            raise InconsistentBranchError(f"items {i} and {j} are both together and apart")
    return Constraints(merged, tuple(sorted(set(apart))))


def apply_branch(node: BnpNode, decision: BranchDecision, columns: Sequence[Column]) -> tuple[BnpNode, list[Column]]:
    """Child node for ``decision`` and the pool columns that survive in its RMP."""
    decisions = node.decisions + (decision,)
    cons = constraints_for(decisions)
    child = BnpNode(decisions, node.lp_bound, NodeStatus.OPEN, depth=node.depth + 1)
    return child, [c for c in columns if cons.allows(c.items)]


def select_branching_pair(primal: np.ndarray, columns: Sequence[Column]) -> tuple[int, int]:
    """Ryan-Foster pair whose together-mass psi_ij is closest to 0.5.

    Only pairs that split the support are eligible: some positive column holds
    both items and another holds exactly one of them, so both children cut off
    the current LP point. Ties go to the lexicographically smallest pair.
    """
    z = np.asarray(primal, dtype=float)
    support = [(c, float(v)) for c, v in zip(columns, z) if v > INT_TOL]
    if all(abs(v - round(v)) <= INT_TOL for _, v in support):
        raise ValueError("LP solution is integral; nothing to branch on")
    psi: dict[tuple[int, int], float] = {}
    for c, v in support:
        for pair in itertools.combinations(c.items, 2):
            psi[pair] = psi.get(pair, 0.0) + v
    best, best_key = None, None
    for (i, j), value in psi.items():
        splits = any((i in c.items) != (j in c.items) for c, _ in support)
        if not splits:
            continue
        key = (abs(value - 0.5), i, j)
        if best_key is None or key < best_key:
            best, best_key = (i, j), key
    if best is None:
        raise AssertionError("no Ryan-Foster pair in a fractional covering solution")
    return best


def is_integral(primal: np.ndarray) -> bool:
    z = np.asarray(primal, dtype=float)
    return bool(np.all(np.abs(z - np.round(z)) <= INT_TOL))


def patterns_to_partition(patterns: Sequence[Sequence[int]], n_items: int) -> list[tuple[int, ...]]:
    """Drop repeated items so every item appears in exactly one pattern (subsets stay feasible)."""
    seen: set[int] = set()
    out = []
    for p in patterns:
        keep = tuple(i for i in p if i not in seen)
        if keep:
            seen.update(keep)
            out.append(keep)
    if len(seen) != n_items:
        raise AssertionError("patterns do not cover every item")
    return out


def greedy_rounding(primal: np.ndarray, columns: Sequence[Column], n_items: int) -> list[tuple[int, ...]] | None:
    """Invented incumbent heuristic: take columns by descending z, skipping covered items."""
    order = sorted(range(len(columns)), key=lambda k: (-primal[k], k))
    covered: set[int] = set()
    chosen = []
    for k in order:
        new = tuple(i for i in columns[k].items if i not in covered)
        if new:
            chosen.append(new)
            covered.update(new)
        if len(covered) == n_items:
            return chosen
    return None


def brute_force_ip(instance: Instance) -> int:
    """Minimum number of bins by exhaustive assignment search (tiny instances only).

    Item k may go into any open bin or open bin ``max_open + 1``, which
    removes bin-relabelling symmetry.
    """
    n = instance.n_items
    if n > BRUTE_FORCE_IP_LIMIT:
        raise ValueError(f"brute force refuses n={n} > {BRUTE_FORCE_IP_LIMIT}")
    if n == 0:
        return 0
    w = instance.weights
    cap = instance.capacity
    masks = instance.conflicts.masks
    best = n
    loads: list[int] = []
    members: list[int] = []

    def place(k: int):
        nonlocal best
        if len(loads) >= best:
            return
        if k == n:
            best = len(loads)
            return
        for b in range(len(loads)):
            if loads[b] + w[k] <= cap and not (members[b] & masks[k]):
                loads[b] += w[k]
                members[b] |= 1 << k
                place(k + 1)
                loads[b] -= w[k]
                members[b] &= ~(1 << k)
        if len(loads) + 1 < best:
            loads.append(w[k])
            members.append(1 << k)
            place(k + 1)
            loads.pop()
            members.pop()

    place(0)
    return best


def _node_patterns(instance: Instance, cons: Constraints, pool: ColumnPool) -> list[tuple[int, ...]]:
    patterns = [c.items for c in pool.columns if cons.allows(c.items)]
    covered = set(i for p in patterns for i in p)
    groups = {i: g for g in cons.merged_groups for i in g}
    for i in range(instance.n_items):
        if i not in covered:
            g = groups.get(i, (i,))
            patterns.append(tuple(g))
            covered.update(g)
    return patterns


def _group_feasible(instance: Instance, cons: Constraints) -> bool:
    masks = instance.conflicts.masks
    apart = set(cons.apart)
    for g in cons.merged_groups:
        if sum(instance.weights[i] for i in g) > instance.capacity:
            return False
        gm = sum(1 << i for i in g)
        if any(masks[i] & gm for i in g):
            return False
        if any((a, b) in apart for a, b in itertools.combinations(g, 2)):
            return False
    return True


def run_bnp(
    instance: Instance,
    cfg: CgConfig,
    node_limit: int | None = None,
    time_limit: float | None = None,
) -> BnpResult:
    """Best-first branch-and-price; ``time_limit`` defaults to ``cfg.time_limit``.

    The reported lower bound is the smallest LP bound among open nodes; a node
    whose CG run was cut short keeps its parent's bound.
    """
    start = time.monotonic()
    deadline = start + (time_limit if time_limit is not None else cfg.time_limit)
    rng = np.random.default_rng(cfg.rng_seed)
    n = instance.n_items
    pool = ColumnPool()
    incumbent: list[tuple[int, ...]] | None = None
    inc_value: int | None = None
    counter = itertools.count()
    root = BnpNode(node_id=next(counter))
    heap: list[tuple[float, int, BnpNode]] = [(0.0, root.node_id, root)]
    node_log: list[tuple] = []
    explored = 0
    root_lp = math.nan
    timed_out = False
    last_gap = math.inf

    def lower_bound() -> float:
        bounds = [b for b, _, _ in heap]
        if not bounds:
            return float(inc_value) if inc_value is not None else math.inf
        return min(bounds)

    def gap() -> float:
        if inc_value is None:
            return math.inf
        lb = math.ceil(lower_bound() - BOUND_TOL)
        return max(0.0, 100.0 * (inc_value - lb) / inc_value)

    def update_incumbent(patterns):
        nonlocal incumbent, inc_value
        part = patterns_to_partition(patterns, n)
        if inc_value is None or len(part) < inc_value:
            incumbent, inc_value = part, len(part)

    if n == 0:
        return BnpResult(0, [], 0.0, 0.0, 0, BnpStatus.OPTIMAL)

    while heap:
        if time.monotonic() > deadline or (node_limit is not None and explored >= node_limit):
            timed_out = True
            break
        bound, _, node = heapq.heappop(heap)
        if inc_value is not None and math.ceil(bound - BOUND_TOL) >= inc_value:
            node.status = NodeStatus.PRUNED_BOUND
            node_log.append(_log_row(node, inc_value, gap(), start))
            continue
        explored += 1
        cons = node.constraints()
        if not _group_feasible(instance, cons):
            node.status = NodeStatus.PRUNED_INFEASIBLE
            node_log.append(_log_row(node, inc_value, gap(), start))
            continue
        res = run_cg(instance, cfg, pool=pool, constraints=cons, initial=_node_patterns(instance, cons, pool),
                     deadline=deadline, rng=rng)
        if res.status is CgStatus.INFEASIBLE:
            node.status = NodeStatus.PRUNED_INFEASIBLE
            node_log.append(_log_row(node, inc_value, gap(), start))
            continue
        if res.status is not CgStatus.OPTIMAL:
            # bound not proven; put the node back so the reported bound stays valid
            node.status = NodeStatus.UNSOLVED
            heapq.heappush(heap, (bound, node.node_id, node))
            timed_out = True
            break
        if res.lp_objective < node.lp_bound - 1e-7:
            raise AssertionError("child LP bound below its parent's")
        node.lp_bound = res.lp_objective
        if node.depth == 0:
            root_lp = res.lp_objective
        cols, z = res.final_columns, res.primal
        if is_integral(z):
            update_incumbent([c.items for c, v in zip(cols, z) if v > 0.5])
            node.status = NodeStatus.INTEGRAL
        else:
            rounded = greedy_rounding(z, cols, n)
            if rounded is not None:
                update_incumbent(rounded)
            if inc_value is not None and math.ceil(node.lp_bound - BOUND_TOL) >= inc_value:
                node.status = NodeStatus.PRUNED_BOUND
            else:
                i, j = select_branching_pair(z, cols)
                node.status = NodeStatus.BRANCHED
                for kind in (BranchKind.TOGETHER, BranchKind.APART):
                    child, _ = apply_branch(node, BranchDecision(i, j, kind), ())
                    child.node_id = next(counter)
                    heapq.heappush(heap, (child.lp_bound, child.node_id, child))
        g = gap()
        if g > last_gap + 1e-9:
            raise AssertionError("optimality gap increased")
        last_gap = g
        node_log.append(_log_row(node, inc_value, g, start))

    status = BnpStatus.TIME_LIMIT if timed_out and heap else BnpStatus.OPTIMAL
    glb = lower_bound()
    final_gap = gap()
    if status is BnpStatus.OPTIMAL:
        final_gap = 0.0
    patterns = [Column(p, k) for k, p in enumerate(incumbent or [])]
    return BnpResult(inc_value, patterns, glb, final_gap, explored, status, root_lp,
                     time.monotonic() - start, node_log)


def _log_row(node: BnpNode, inc_value, gap: float, start: float) -> tuple:
    return (node.node_id, node.depth, repr(node.lp_bound), node.status.value,
            "" if inc_value is None else inc_value, repr(gap), f"{time.monotonic() - start:.6f}")
