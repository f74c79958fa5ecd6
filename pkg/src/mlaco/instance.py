"""Bin packing with conflicts: instance model, text I/O and generators.

File format (plain text, whitespace tolerant, ``#`` starts a comment)::

    <n_items>
    <capacity>
    <w_0>
    ...
    <w_{n-1}>

Conflict files hold one edge ``i j`` per line with 0-based indices.

Hard28 files from the BPPLib distribution use the same layout (item count,
capacity, one weight per line), so they parse directly; files that list
``weight multiplicity`` pairs must be expanded to one line per item first.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .rng import SplitMix64


class ParseError(ValueError):
    """Malformed instance or conflict text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InfeasibleItemError(ValueError):
    """An item is heavier than the bin capacity."""

    def __init__(self, item: int, weight: int, capacity: int):
        self.item = item
        super().__init__(f"item {item} has weight {weight} > capacity {capacity}")


class ConflictGraph:
    """Undirected simple graph stored as sorted adjacency lists.

    ``masks`` gives the same adjacency as Python integers used as bitsets,
    which is what the exact pricer works on.
    """

    __slots__ = ("n_vertices", "adjacency", "edge_count", "_masks", "_matrix")

    def __init__(self, n_vertices: int, edges: Iterable[tuple[int, int]] = ()):
        adj: list[set[int]] = [set() for _ in range(n_vertices)]
        for i, j in edges:
            i, j = int(i), int(j)
            if not (0 <= i < n_vertices and 0 <= j < n_vertices):
                raise ParseError(f"edge ({i}, {j}) out of range for {n_vertices} vertices")
            if i == j:
                raise ParseError(f"self-loop on vertex {i}")
            adj[i].add(j)
            adj[j].add(i)
        self.n_vertices = n_vertices
        self.adjacency: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(a)) for a in adj)
        self.edge_count = sum(len(a) for a in adj) // 2
        self._masks: tuple[int, ...] | None = None
        self._matrix: np.ndarray | None = None

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, nbrs in enumerate(self.adjacency) for j in nbrs if i < j]

    def has_edge(self, i: int, j: int) -> bool:
        return (self.masks[i] >> j) & 1 == 1

    def degree(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    @property
    def masks(self) -> tuple[int, ...]:
        if self._masks is None:
            self._masks = tuple(sum(1 << j for j in nbrs) for nbrs in self.adjacency)
        return self._masks

    @property
    def matrix(self) -> np.ndarray:
        """Dense boolean adjacency matrix (read-only)."""
        if self._matrix is None:
            m = np.zeros((self.n_vertices, self.n_vertices), dtype=bool)
            for i, nbrs in enumerate(self.adjacency):
                m[i, list(nbrs)] = True
            m.setflags(write=False)
            self._matrix = m
        return self._matrix

    def with_edges(self, extra: Iterable[tuple[int, int]]) -> "ConflictGraph":
        return ConflictGraph(self.n_vertices, self.edges() + list(extra))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConflictGraph):
            return NotImplemented
        return self.n_vertices == other.n_vertices and self.adjacency == other.adjacency

    def __hash__(self) -> int:
        return hash((self.n_vertices, self.adjacency))

    def __repr__(self) -> str:
        return f"ConflictGraph(n_vertices={self.n_vertices}, edge_count={self.edge_count})"


@dataclass(frozen=True, eq=True)
class Instance:
    """A BPPC instance. Immutable; share freely between workers."""

    capacity: int
    weights: tuple[int, ...]
    conflicts: ConflictGraph
    name: str = "instance"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")
        if self.conflicts.n_vertices != len(self.weights):
            raise ValueError("conflict graph size does not match the number of weights")
        for i, w in enumerate(self.weights):
            if w <= 0:
                raise ValueError(f"item {i} has non-positive weight {w}")
            if w > self.capacity:
                raise InfeasibleItemError(i, w, self.capacity)

    @property
    def n_items(self) -> int:
        return len(self.weights)

    @property
    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.int64)


@dataclass(frozen=True)
class GenConfig:
    density: float = 0.5
    seed: int = 0
    capacity_multiplier: int = 1

    def __post_init__(self):
        if not 0.0 <= self.density <= 1.0:
            raise ValueError(f"density must lie in [0, 1], got {self.density}")
        if self.capacity_multiplier < 1:
            raise ValueError("capacity multiplier must be >= 1")


@dataclass
class PatternReport:
    feasible: bool
    weight: int
    capacity_violation: tuple[int, int] | None = None  # (weight, capacity)
    conflict_violations: list[tuple[int, int]] = field(default_factory=list)


def _tokens(text: str) -> list[tuple[int, str]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((lineno, line))
    return out


def _int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"expected an integer, got {token!r}", lineno) from None


def parse_conflicts(text: str, n_items: int) -> ConflictGraph:
    edges = []
    for lineno, line in _tokens(text):
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'i j', got {line!r}", lineno)
        i, j = _int(parts[0], lineno), _int(parts[1], lineno)
        if not (0 <= i < n_items and 0 <= j < n_items):
            raise ParseError(f"edge index out of range 0..{n_items - 1}", lineno)
        if i == j:
            raise ParseError("self-loop", lineno)
        edges.append((i, j))
    return ConflictGraph(n_items, edges)


def parse_instance(text: str, conflict_text: str | None = None, name: str = "instance") -> Instance:
    lines = _tokens(text)
    for lineno, line in lines:
        if len(line.split()) != 1:
            raise ParseError(f"expected a single integer, got {line!r}", lineno)
    if len(lines) < 2:
        raise ParseError("missing item count or capacity", lines[-1][0] if lines else 1)
    n = _int(lines[0][1], lines[0][0])
    capacity = _int(lines[1][1], lines[1][0])
    if n < 0:
        raise ParseError("negative item count", lines[0][0])
    if capacity <= 0:
        raise ParseError("capacity must be positive", lines[1][0])
    body = lines[2:]
    if len(body) != n:
        where = body[n][0] if len(body) > n else (lines[-1][0])
        raise ParseError(f"expected {n} weights, found {len(body)}", where)
    weights = []
    for k, (lineno, tok) in enumerate(body):
        w = _int(tok, lineno)
        if w <= 0:
            raise ParseError("weights must be positive", lineno)
        if w > capacity:
            raise InfeasibleItemError(k, w, capacity)
        weights.append(w)
    graph = parse_conflicts(conflict_text, n) if conflict_text else ConflictGraph(n)
    return Instance(capacity, tuple(weights), graph, name)


def serialize_instance(instance: Instance) -> str:
    lines = [str(instance.n_items), str(instance.capacity)] + [str(w) for w in instance.weights]
    return "\n".join(lines) + "\n"


def serialize_conflicts(graph: ConflictGraph) -> str:
    return "".join(f"{i} {j}\n" for i, j in graph.edges())


def read_instance(path, conflict_path=None) -> Instance:
    path = Path(path)
    conflict_text = Path(conflict_path).read_text() if conflict_path else None
    return parse_instance(path.read_text(), conflict_text, name=path.stem)


def write_instance(instance: Instance, path, conflict_path=None) -> None:
    Path(path).write_text(serialize_instance(instance))
    if conflict_path is not None:
        Path(conflict_path).write_text(serialize_conflicts(instance.conflicts))


def generate_conflicts(instance: Instance, cfg: GenConfig) -> Instance:
    """Replace the conflict graph with a G(n, p) graph, p = ``cfg.density``.

    Pairs are visited in lexicographic order (i < j) and each consumes exactly
    one SplitMix64 draw, so the graph depends only on ``(n, density, seed)``.
    """
    gen = SplitMix64(cfg.seed)
    n = instance.n_items
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if gen.random() < cfg.density:
                edges.append((i, j))
    return dataclasses.replace(instance, conflicts=ConflictGraph(n, edges))


def apply_capacity_multiplier(instance: Instance, m: int) -> Instance:
    if m < 1:
        raise ValueError("capacity multiplier must be >= 1")
    name = instance.name if m == 1 else f"{instance.name}_x{m}"
    return dataclasses.replace(instance, capacity=instance.capacity * m, name=name)


def generate_instance(
    n_items: int,
    capacity: int,
    weight_range: tuple[int, int],
    cfg: GenConfig,
    name: str | None = None,
) -> Instance:
    """Uniform integer weights plus a random conflict graph.

    Weights are drawn first from the ``cfg.seed`` stream; the conflict graph
    uses the next value of that stream as its own seed.
    """
    lo, hi = weight_range
    if not 1 <= lo <= hi <= capacity:
        raise ValueError(f"weight range {weight_range} incompatible with capacity {capacity}")
    gen = SplitMix64(cfg.seed)
    weights = tuple(gen.randint(lo, hi) for _ in range(n_items))
    graph_seed = gen.next_u64()
    base = Instance(capacity, weights, ConflictGraph(n_items), name or f"u{n_items}_s{cfg.seed}")
    inst = generate_conflicts(base, GenConfig(cfg.density, graph_seed, 1))
    return apply_capacity_multiplier(inst, cfg.capacity_multiplier)


def validate_pattern(instance: Instance, items: Iterable[int]) -> PatternReport:
    items = sorted(set(int(i) for i in items))
    n = instance.n_items
    for i in items:
        if not 0 <= i < n:
            raise ParseError(f"item index {i} out of range 0..{n - 1}")
    weight = sum(instance.weights[i] for i in items)
    report = PatternReport(feasible=True, weight=weight)
    if weight > instance.capacity:
        report.feasible = False
        report.capacity_violation = (weight, instance.capacity)
    chosen = set(items)
    for i in items:
        for j in instance.conflicts.adjacency[i]:
            if j > i and j in chosen:
                report.feasible = False
                report.conflict_violations.append((i, j))
    return report


def is_feasible_pattern(instance: Instance, items: Sequence[int]) -> bool:
    return validate_pattern(instance, items).feasible
