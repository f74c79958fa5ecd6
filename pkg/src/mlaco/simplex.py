"""Revised primal simplex for the set-covering master LP.

    min  sum_P z_P
    s.t. sum_{P contains i} z_P - s_i = 1   for every item i
         z, s >= 0

Columns are 0/1 item sets with unit cost. The basis inverse is kept
explicitly and updated with one elementary (eta) transformation per pivot;
it is recomputed from scratch every ``REFACTOR_EVERY`` pivots and once more
before the final solution is read off.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

EPS_FEAS = 1e-9
EPS_GAP = 1e-7
EPS_PRICE = 1e-11
EPS_PIVOT = 1e-9
REFACTOR_EVERY = 64
DEGENERATE_BUDGET = 50


class LpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"


class CertificationError(RuntimeError):
    """An LP solution failed its optimality certificate (a solver bug)."""


@dataclass(frozen=True)
class Column:
    items: tuple[int, ...]
    id: int

    def __post_init__(self):
        items = tuple(sorted(set(int(i) for i in self.items)))
        if not items:
            raise ValueError("a column must contain at least one item")
        object.__setattr__(self, "items", items)

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, item: int) -> bool:
        return item in self.items


@dataclass(frozen=True)
class Basis:
    """Opaque warm-start token: basic variables keyed by column id / surplus row."""

    keys: tuple[tuple[str, int], ...]


@dataclass
class LpSolution:
    objective: float
    primal: np.ndarray
    duals: np.ndarray
    status: LpStatus
    surplus: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pivots: int = 0

    def __post_init__(self):
        self.primal = np.asarray(self.primal, dtype=float)
        self.duals = np.asarray(self.duals, dtype=float)


def reduced_cost(column: Column | Sequence[int], duals: Sequence[float]) -> float:
    items = column.items if isinstance(column, Column) else column
    return 1.0 - float(sum(duals[i] for i in items))


def coverage_matrix(columns: Sequence[Column], n_items: int) -> np.ndarray:
    a = np.zeros((n_items, len(columns)))
    for k, col in enumerate(columns):
        a[list(col.items), k] = 1.0
    return a


def certify(a: np.ndarray, z: np.ndarray, duals: np.ndarray, tol: float = EPS_FEAS) -> dict[str, float]:
    """Return the worst violation of each optimality condition.

    Raises :class:`CertificationError` if any exceeds its tolerance.
    """
    cover = a @ z
    rc = 1.0 - duals @ a
    primal_obj = float(z.sum())
    dual_obj = float(duals.sum())
    worst = {
        "primal": float(max(0.0, np.max(1.0 - cover, initial=0.0), np.max(-z, initial=0.0))),
        "dual": float(max(0.0, np.max(-rc, initial=0.0), np.max(-duals, initial=0.0))),
        "slackness": float(
            max(np.max(np.abs(z * rc), initial=0.0), np.max(np.abs(duals * (cover - 1.0)), initial=0.0))
        ),
        "gap": abs(primal_obj - dual_obj),
    }
    gap_tol = EPS_GAP * (1.0 + abs(primal_obj))
    # slackness products scale with the size of z and pi
    scale = 1.0 + max(np.max(np.abs(z), initial=0.0), np.max(np.abs(duals), initial=0.0))
    if worst["primal"] > tol or worst["dual"] > tol or worst["slackness"] > tol * scale or worst["gap"] > gap_tol:
        raise CertificationError(f"LP certificate failed: {worst}")
    return worst


class RevisedSimplex:
    """Solver object carrying the warm basis between calls.

    Not thread-safe; use one instance per problem.
    """

    def __init__(self, n_items: int, bland_budget: int = DEGENERATE_BUDGET):
        self.n_items = n_items
        self.bland_budget = bland_budget
        self.basis: Basis | None = None
        self.calls = 0
        self.certified = 0
        self.total_pivots = 0

    def solve(self, columns: Sequence[Column], warm_basis: Basis | None = None) -> LpSolution:
        sol, basis = solve_rmp(columns, self.n_items, warm_basis or self.basis, self.bland_budget)
        self.calls += 1
        self.total_pivots += sol.pivots
        if sol.status is LpStatus.OPTIMAL:
            self.certified += 1
            self.basis = basis
        return sol


def solve_rmp(
    columns: Sequence[Column],
    n_items: int,
    warm_basis: Basis | None = None,
    bland_budget: int = DEGENERATE_BUDGET,
) -> tuple[LpSolution, Basis | None]:
    """Solve the covering LP over ``columns``; returns the solution and a warm-start token.

    An item no column covers makes the LP infeasible; that is reported through
    ``status`` rather than raised.
    """
    m, k = n_items, len(columns)
    a = coverage_matrix(columns, m)
    if m == 0:
        return LpSolution(0.0, np.zeros(k), np.zeros(0), LpStatus.OPTIMAL), Basis(())
    if k == 0 or np.any(a.sum(axis=1) == 0):
        return LpSolution(np.inf, np.zeros(k), np.zeros(m), LpStatus.INFEASIBLE), None

    lp = _Tableau(a, bland_budget)
    start = lp.basis_from_token(warm_basis, columns) if warm_basis is not None else None
    if start is None:
        lp.cold_start()
        lp.run(phase=1)
        if lp.objective(phase=1) > 1e-7:
            # cannot happen when every row is covered; kept as a guard
            return LpSolution(np.inf, np.zeros(k), np.zeros(m), LpStatus.INFEASIBLE), None
        lp.drive_out_artificials()
    lp.run(phase=2)

    z, s, duals = lp.solution()
    certify(a, z, duals)
    sol = LpSolution(float(z.sum()), z, duals, LpStatus.OPTIMAL, s, lp.pivots)
    return sol, lp.token(columns)


class _Tableau:
    """Working state of one solve: variables are [columns | surplus | artificials]."""

    def __init__(self, a: np.ndarray, bland_budget: int):
        m, k = a.shape
        self.m, self.k = m, k
        self.full = np.hstack([a, -np.eye(m), np.eye(m)])
        self.n_vars = k + 2 * m
        self.cost2 = np.concatenate([np.ones(k), np.zeros(2 * m)])
        self.cost1 = np.concatenate([np.zeros(k + m), np.ones(m)])
        self.rhs = np.ones(m)
        self.bland_budget = bland_budget
        self.pivots = 0
        self.basic: np.ndarray = np.empty(0, dtype=np.int64)
        self.binv: np.ndarray = np.empty((0, 0))
        self.xb: np.ndarray = np.empty(0)

    def cold_start(self):
        self.basic = np.arange(self.k + self.m, self.k + 2 * self.m)
        self.binv = np.eye(self.m)
        self.xb = self.rhs.copy()

    def basis_from_token(self, token: Basis, columns: Sequence[Column]) -> bool | None:
        if len(token.keys) != self.m:
            return None
        by_id = {c.id: idx for idx, c in enumerate(columns)}
        basic = []
        for kind, key in token.keys:
            if kind == "col":
                if key not in by_id:
                    return None
                basic.append(by_id[key])
            elif kind == "sur" and 0 <= key < self.m:
                basic.append(self.k + key)
            else:
                return None
        self.basic = np.array(basic, dtype=np.int64)
        try:
            self.refactor()
        except np.linalg.LinAlgError:
            return None
        if np.any(self.xb < -EPS_FEAS):
            return None
        self.xb = np.maximum(self.xb, 0.0)
        return True

    def refactor(self):
        b = self.full[:, self.basic]
        self.binv = np.linalg.inv(b)
        if not np.all(np.isfinite(self.binv)):
            raise np.linalg.LinAlgError("singular basis")
        self.xb = self.binv @ self.rhs

    def objective(self, phase: int) -> float:
        cost = self.cost1 if phase == 1 else self.cost2
        return float(cost[self.basic] @ self.xb)

    def _allowed(self, phase: int) -> np.ndarray:
        allowed = np.ones(self.n_vars, dtype=bool)
        allowed[self.basic] = False
        if phase == 2:
            allowed[self.k + self.m:] = False
        return allowed

    def run(self, phase: int):
        cost = self.cost1 if phase == 1 else self.cost2
        degenerate_streak = 0
        since_refactor = 0
        while True:
            duals = cost[self.basic] @ self.binv
            d = cost - duals @ self.full
            d[~self._allowed(phase)] = np.inf
            bland = degenerate_streak >= self.bland_budget
            if bland:
                cands = np.flatnonzero(d < -EPS_PRICE)
                if cands.size == 0:
                    q = -1
                else:
                    q = int(cands[0])
            else:
                q = int(np.argmin(d))
                if d[q] >= -EPS_PRICE:
                    q = -1
            if q < 0:
                if since_refactor == 0:
                    return
                # confirm optimality on a fresh factorization
                self.refactor()
                since_refactor = 0
                continue
            u = self.binv @ self.full[:, q]
            pos = u > EPS_PIVOT
            if not np.any(pos):
                raise RuntimeError("covering LP reported unbounded; this indicates a numerical failure")
            ratios = np.full(self.m, np.inf)
            ratios[pos] = np.maximum(self.xb[pos], 0.0) / u[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + EPS_FEAS)
            if bland:
                r = int(ties[np.argmin(self.basic[ties])])
            else:
                r = int(ties[np.argmax(u[ties])])
            degenerate_streak = degenerate_streak + 1 if best <= EPS_FEAS else 0
            self._pivot(r, q, u)
            since_refactor += 1
            if since_refactor >= REFACTOR_EVERY:
                self.refactor()
                since_refactor = 0

    def _pivot(self, r: int, q: int, u: np.ndarray):
        theta = max(self.xb[r], 0.0) / u[r]
        self.xb = self.xb - theta * u
        self.xb[r] = theta
        self.xb[np.abs(self.xb) < 1e-13] = 0.0
        pivot_row = self.binv[r] / u[r]
        self.binv -= np.outer(u, pivot_row)
        self.binv[r] = pivot_row
        self.basic[r] = q
        self.pivots += 1

    def drive_out_artificials(self):
        first_art = self.k + self.m
        for r in range(self.m):
            if self.basic[r] < first_art:
                continue
            row = self.binv[r] @ self.full[:, :first_art]
            row[self.basic[self.basic < first_art]] = 0.0
            # surplus columns come last among candidates; prefer pattern columns
            q = int(np.argmax(np.abs(row)))
            if abs(row[q]) <= EPS_PIVOT:
                raise RuntimeError("redundant covering row; cannot happen with surplus columns")
            u = self.binv @ self.full[:, q]
            self._pivot(r, q, u)
        self.refactor()

    def solution(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        self.refactor()
        self.xb = np.maximum(self.xb, 0.0)
        x = np.zeros(self.n_vars)
        x[self.basic] = self.xb
        duals = self.cost2[self.basic] @ self.binv
        duals[np.abs(duals) < 1e-14] = 0.0
        return x[: self.k], x[self.k: self.k + self.m], duals

    def token(self, columns: Sequence[Column]) -> Basis:
        keys = []
        for v in self.basic:
            if v < self.k:
                keys.append(("col", columns[v].id))
            else:
                keys.append(("sur", int(v - self.k)))
        return Basis(tuple(keys))


def format_tableau(columns: Sequence[Column], n_items: int, sol: LpSolution) -> str:
    """Plain-text dump of a solved master LP.

    Layout: a header line ``# rmp items=<m> columns=<k> status=<s> objective=<v>``,
    then one ``dual <i> <pi_i> <surplus_i>`` line per item, then one
    ``col <id> <z> <reduced_cost> <items...>`` line per column.
    """
    out = [f"# rmp items={n_items} columns={len(columns)} status={sol.status.value} objective={float(sol.objective)!r}"]
    surplus = sol.surplus if sol.surplus.size else np.zeros(n_items)
    for i in range(n_items):
        out.append(f"dual {i} {float(sol.duals[i])!r} {float(surplus[i])!r}")
    for col, z in zip(columns, sol.primal):
        rc = reduced_cost(col, sol.duals)
        out.append(f"col {col.id} {float(z)!r} {float(rc)!r} " + " ".join(map(str, col.items)))
    return "\n".join(out) + "\n"
