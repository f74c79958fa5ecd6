import itertools
import math

import numpy as np
import pytest

from mlaco.instance import ConflictGraph, Instance


def make_instance(weights, capacity, edges=(), name="t"):
    return Instance(capacity, tuple(weights), ConflictGraph(len(weights), edges), name)


def random_graph(n, density, rng):
    return [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < density]


def covering_lp_by_vertices(a):
    """Optimal value of min 1'z s.t. a z >= 1, z >= 0 by enumerating every basis.

    Works on the standard form [a, -I] with m rows. All m-subsets of the
    columns are solved in one batched call; nonsingular, nonnegative ones
    are the vertices.
    """
    m, k = a.shape
    full = np.hstack([a, -np.eye(m)])
    cost = np.concatenate([np.ones(k), np.zeros(m)])
    combos = np.array(list(itertools.combinations(range(k + m), m)))
    mats = full[:, combos].transpose(1, 0, 2)  # (C, m, m)
    dets = np.linalg.det(mats)
    ok = np.abs(dets) > 1e-9
    xb = np.linalg.solve(mats[ok], np.ones((ok.sum(), m, 1)))[..., 0]
    feasible = np.all(xb >= -1e-9, axis=1)
    values = (cost[combos[ok]] * xb).sum(axis=1)
    return float(values[feasible].min())


def naive_pearson(x, y):
    """Two-pass textbook Pearson correlation; 0 when either side is constant."""
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        return 0.0
    return sxy / math.sqrt(sxx * syy)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1][1:])):
            terminalreporter.write_line(line)
