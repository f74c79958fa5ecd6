"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

The lines are collected in ``conftest.ACCEPTANCE_LINES`` and printed in the
terminal summary. Criteria 9 and 10 are directional; a failure there is
reported like any other.
"""

import time

import numpy as np
import pytest

import mlaco.simplex as simplex
from mlaco.aco import (
    AcoConfig,
    AcoState,
    TAU_MIN,
    construct,
    deposit,
    diversity_sweep,
    selection_probabilities,
    sweep_constructions,
    update_pheromone,
)
from mlaco.bnp import BnpStatus, brute_force_ip, run_bnp
from mlaco.cg import CgConfig, CgStatus, PricingKind, run_cg
from mlaco.features import FEATURE_NAMES, compact_features
from mlaco.instance import ConflictGraph, GenConfig, generate_instance
from mlaco.ml import LinearModel, accuracy, dump_model, parse_model, platt_probability, predict_probability, train_svm_arrays
from mlaco.pricing import PricingProblem, PricingSolution, brute_force_pricing, solve_exact
from mlaco.rng import derive_seeds
from mlaco.simplex import Column, LpStatus, coverage_matrix, solve_rmp
from mlaco.training import train_model

from conftest import ACCEPTANCE_LINES, covering_lp_by_vertices, random_graph

pytestmark = pytest.mark.slow

CAPACITY = 150
WEIGHTS = (20, 100)
DENSITY = 0.5

GRID_SIZES = (20, 40, 60)
GRID_MULTIPLIERS = (1, 2, 5)
GRID_SEED = 2024
GRID_TIME_LIMIT = 60.0

TRAIN_SEED = 1000
TRAIN_COUNT = 20
TRAIN_MULTIPLIER = 5
BENCH_SEED = 9000
BENCH_COUNT = 10
BENCH_ITEMS = 120
BENCH_MULTIPLIER = 5


def report(number: int, title: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} C{number} {title}: {detail}")
    print(ACCEPTANCE_LINES[-1])
    return ok


def grid_instances():
    out = []
    for k, seed in enumerate(derive_seeds(GRID_SEED, 30)):
        n = GRID_SIZES[k % 3]
        mult = GRID_MULTIPLIERS[(k // 3) % 3]
        out.append(generate_instance(n, CAPACITY, WEIGHTS, GenConfig(DENSITY, seed, mult)))
    return out


@pytest.fixture(scope="session")
def trained_model():
    """SVM trained on 20 instances of the benchmark distribution, none of them benchmarked."""
    assert not set(derive_seeds(TRAIN_SEED, TRAIN_COUNT)) & set(derive_seeds(BENCH_SEED, BENCH_COUNT))
    train = [
        generate_instance(BENCH_ITEMS, CAPACITY, WEIGHTS, GenConfig(DENSITY, s, TRAIN_MULTIPLIER))
        for s in derive_seeds(TRAIN_SEED, TRAIN_COUNT)
    ]
    model, data = train_model(train, seed=0)
    assert data, "training produced no examples"
    return model


@pytest.fixture(scope="session")
def grid_runs(trained_model):
    """Every pricing kind on the 30 grid instances: {kind: [CgResult]}."""
    runs = {kind: [] for kind in PricingKind}
    for inst in grid_instances():
        for kind in PricingKind:
            cfg = CgConfig(pricing_kind=kind, model=trained_model, time_limit=GRID_TIME_LIMIT)
            runs[kind].append(run_cg(inst, cfg))
    return runs


def random_pricing_problem(rng, n, density, forbidden=()):
    weights = rng.integers(1, 30, n)
    capacity = int(rng.integers(1, max(2, weights.sum())))
    profits = rng.random(n) * rng.choice([0.2, 1.0, 3.0])
    return PricingProblem(profits, weights, capacity, ConflictGraph(n, random_graph(n, density, rng)), frozenset(forbidden))


def test_c1_exact_pricing_matches_brute_force():
    rng = np.random.default_rng(101)
    densities = (0.0, 0.25, 0.5, 1.0)
    start = time.monotonic()
    mismatches = 0
    for k in range(200):
        n = int(rng.integers(1, 21))
        problem = random_pricing_problem(rng, n, densities[k % 4])
        got, proven = solve_exact(problem)
        want = brute_force_pricing(problem)
        mismatches += (not proven) or got.profit != want.profit or not problem.is_feasible(got.items)
    elapsed = time.monotonic() - start
    ok = mismatches == 0 and elapsed < 60.0
    assert report(1, "exact pricing oracle", ok, f"{200 - mismatches}/200 exact matches in {elapsed:.1f} s (limit 60 s)")


def test_c2_lp_objective_is_strategy_independent(grid_runs):
    statuses_ok = all(r.status is CgStatus.OPTIMAL for runs in grid_runs.values() for r in runs)
    objs = np.array([[r.lp_objective for r in runs] for runs in grid_runs.values()])
    spread = float(np.max(objs.max(axis=0) - objs.min(axis=0))) if statuses_ok else float("inf")
    unsolved = sum(r.status is not CgStatus.OPTIMAL for runs in grid_runs.values() for r in runs)
    ok = statuses_ok and spread <= 1e-6
    assert report(2, "LP strategy independence", ok,
                  f"{len(PricingKind)} kinds x 30 instances, {unsolved} unsolved, max spread {spread:.2e} (tol 1e-6)")


def independent_certificate(columns, n_items, sol):
    """Worst primal, dual, slackness violations and the duality gap, computed from scratch."""
    a = coverage_matrix(columns, n_items)
    z, pi = sol.primal, sol.duals
    cover = a @ z
    rc = 1.0 - pi @ a
    primal = max(0.0, float(np.max(1.0 - cover, initial=0.0)), float(np.max(-z, initial=0.0)))
    dual = max(0.0, float(np.max(-rc, initial=0.0)), float(np.max(-pi, initial=0.0)))
    slack = max(float(np.max(np.abs(z * rc), initial=0.0)), float(np.max(np.abs(pi * (cover - 1.0)), initial=0.0)))
    gap = abs(float(z.sum()) - float(pi.sum()))
    return primal, dual, slack, gap, abs(sol.objective)


def test_c3_simplex_self_certification(monkeypatch):
    certs = []

    def spy(columns, n_items, *args, **kwargs):
        sol, basis = solve_rmp(columns, n_items, *args, **kwargs)
        if sol.status is LpStatus.OPTIMAL:
            certs.append(independent_certificate(list(columns), n_items, sol))
        return sol, basis

    monkeypatch.setattr(simplex, "solve_rmp", spy)
    for k, seed in enumerate(derive_seeds(303, 6)):
        inst = generate_instance(GRID_SIZES[k % 3], CAPACITY, WEIGHTS, GenConfig(DENSITY, seed, 1 + k % 2))
        for kind in ("exact", "exact-pool", "aco"):
            run_cg(inst, CgConfig(pricing_kind=kind))
    for seed in derive_seeds(304, 5):
        run_bnp(generate_instance(10, 90, (10, 50), GenConfig(DENSITY, seed)), CgConfig())
    monkeypatch.undo()

    tol = 1e-7
    bad = sum(p > tol or d > tol or s > tol or g > 1e-7 * (1 + obj) for p, d, s, g, obj in certs)

    rng = np.random.default_rng(305)
    worst = 0.0
    for _ in range(100):
        m = int(rng.integers(1, 6))
        k = int(rng.integers(1, 8))
        a = (rng.random((m, k)) < 0.5).astype(float)
        for row in np.flatnonzero(a.sum(axis=1) == 0):
            a[row, rng.integers(k)] = 1.0
        columns = [Column(tuple(np.flatnonzero(a[:, j]).tolist()), j) for j in range(k) if a[:, j].any()]
        sol, _ = solve_rmp(columns, m)
        worst = max(worst, abs(sol.objective - covering_lp_by_vertices(coverage_matrix(columns, m))))
    ok = bad == 0 and len(certs) > 0 and worst <= 1e-7
    assert report(3, "simplex self-certification", ok,
                  f"{len(certs) - bad}/{len(certs)} CG solves certified, vertex enumeration max error {worst:.1e} (tol 1e-7)")


def test_c4_branch_and_price_matches_brute_force():
    wrong = branched = 0
    for seed in derive_seeds(404, 30):
        inst = generate_instance(10, 90, (10, 50), GenConfig(DENSITY, seed))
        res = run_bnp(inst, CgConfig())
        branched += res.nodes_explored > 1
        wrong += not (res.status is BnpStatus.OPTIMAL and res.incumbent_value == brute_force_ip(inst) and res.gap_percent == 0.0)
    assert report(4, "branch-and-price oracle", wrong == 0, f"{30 - wrong}/30 optimal with gap 0, {branched} needed branching")


def test_c5_sampling_contracts():
    rng = np.random.default_rng(505)
    bad = total = 0
    for _ in range(10_000):
        n = int(rng.integers(1, 26))
        forbidden = np.flatnonzero(rng.random(n) < 0.1)
        problem = random_pricing_problem(rng, n, rng.choice([0.0, 0.2, 0.5, 0.9]), forbidden)
        state = AcoState(rng.random(n) + 1e-3, rng.random(n) + 1e-3)
        pop = None if rng.random() < 0.5 else int(rng.integers(1, 2 * n + 1))
        cfg = AcoConfig(alpha=rng.uniform(0, 3), beta=rng.uniform(0, 3), population=pop)
        out = diversity_sweep(problem, state, cfg, rng)
        total += len(out)
        sets = [s.items for s in out]
        bad += len(set(sets)) != len(sets)
        bad += sum(not problem.is_feasible(s.items) or s.reduced_cost >= cfg.rc_threshold for s in out)

    seed_errors = 0
    for _ in range(1000):
        n = int(rng.integers(1, 26))
        problem = random_pricing_problem(rng, n, rng.choice([0.0, 0.3, 0.7]))
        cp = problem.compact()
        if cp.n == 0:
            continue
        sweep = sweep_constructions(cp, AcoState.uniform(cp.n), AcoConfig(population=cp.n), rng)
        eligible = np.flatnonzero(cp.weights <= cp.capacity).tolist()
        seed_errors += sorted(sweep.seeds) != eligible
        seed_errors += not all(sweep.membership[r, s] for r, s in enumerate(sweep.seeds))
    ok = bad == 0 and seed_errors == 0 and total > 0
    assert report(5, "sampling contracts", ok,
                  f"{total} columns from 10^4 sweeps, {bad} violations; seeding errors {seed_errors}/1000")


def test_c6_pheromone_arithmetic():
    cfg = AcoConfig(rho=0.95, lam=1.0)
    a = update_pheromone(AcoState(np.ones(2), np.ones(2), c_best=1.0), [PricingSolution((0,), 1.0)], cfg).tau[1]
    b = update_pheromone(AcoState(np.ones(1), np.ones(1)), [PricingSolution((0,), 2.0)], cfg).tau[0]
    c = update_pheromone(AcoState(np.ones(1), np.ones(1)),
                         [PricingSolution((0,), 1.0), PricingSolution((0,), 2.0)], cfg).tau[0]
    err = max(abs(a - 0.05), abs(b - 1.05), abs(c - 1.55))

    rng = np.random.default_rng(606)
    n = 30
    problem = random_pricing_problem(rng, n, 0.3)
    cp = problem.compact()
    state = AcoState(np.ones(cp.n), cp.profits / cp.weights + 1e-3)
    fuzz = AcoConfig(lam=0.5)
    ants = cp.n
    ceiling = max(1.0, ants / fuzz.lam / fuzz.rho)
    finite = True
    lo, hi = np.inf, 0.0
    for _ in range(10_000):
        sweep = sweep_constructions(cp, state, fuzz, rng)
        deposit(state, sweep.membership, sweep.objectives, fuzz)
        finite &= bool(np.all(np.isfinite(state.tau)))
        lo, hi = min(lo, state.tau.min()), max(hi, state.tau.max())
    ok = err <= 1e-12 and finite and lo >= TAU_MIN and hi <= ceiling * (1 + 1e-12)
    assert report(6, "pheromone arithmetic", ok,
                  f"hand examples max error {err:.1e}; 10^4 updates tau in [{lo:.1e}, {hi:.2f}], bound {ceiling:.1f}")


def test_c7_selection_probabilities():
    rng = np.random.default_rng(707)
    sum_err = scale_err = uniform_err = 0.0
    for _ in range(10_000):
        n = int(rng.integers(1, 40))
        state = AcoState(rng.random(n) * 10 + 1e-6, rng.random(n) * 10 + 1e-6)
        mask = rng.random(n) < 0.6
        mask[rng.integers(n)] = True
        cfg = AcoConfig(alpha=rng.uniform(0, 3), beta=rng.uniform(0, 3))
        p = selection_probabilities(mask, state, cfg)
        sum_err = max(sum_err, abs(p.sum() - 1.0))
        scaled = AcoState(state.tau, state.eta * rng.uniform(1e-3, 1e3))
        scale_err = max(scale_err, float(np.max(np.abs(selection_probabilities(mask, scaled, cfg) - p))))
        flat = selection_probabilities(mask, state, AcoConfig(alpha=0, beta=0))
        uniform_err = max(uniform_err, float(np.max(np.abs(flat - mask / mask.sum()))))
    ok = sum_err <= 1e-12 and scale_err <= 1e-12 and uniform_err <= 1e-12
    assert report(7, "selection probabilities", ok,
                  f"sum error {sum_err:.1e}, scale error {scale_err:.1e}, uniform error {uniform_err:.1e} (tol 1e-12)")


def test_c8_ml_pipeline(tmp_path):
    rng = np.random.default_rng(808)
    items = 0
    lo = np.full(3, np.inf)
    hi = np.full(3, -np.inf)
    while items < 100_000:
        n = int(rng.integers(1, 200))
        problem = random_pricing_problem(rng, n, rng.uniform(0, 1))
        cp = problem.compact()
        if cp.n == 0:
            continue
        sweep = construct(cp, None, int(rng.integers(0, n + 1)), rng)
        f = compact_features(cp, sweep.membership)[:, [0, 2, 4]]
        lo = np.minimum(lo, f.min(axis=0))
        hi = np.maximum(hi, f.max(axis=0))
        items += cp.n
    ranges_ok = lo[0] >= 0 and hi[0] <= 1 and lo[1] >= 0 and hi[1] <= 1 and lo[2] >= -1 and hi[2] <= 1

    y = rng.random(2000) < 0.3
    x = rng.normal(0, 0.3, (2000, len(FEATURE_NAMES)))
    x[:, 2] = np.where(y, 1.0, -1.0) + rng.normal(0, 0.05, 2000)
    model = train_svm_arrays(x, y)
    acc = accuracy(model, x, y)

    scores = np.sort(np.concatenate([model.decision_function(x), np.linspace(-50, 50, 1001)]))
    p = platt_probability(scores, model.platt_a, model.platt_b)
    monotone = model.platt_a < 0 and bool(np.all(np.diff(p) >= 0))

    model.save(tmp_path / "model.txt")
    again = LinearModel.load(tmp_path / "model.txt")
    probe = rng.normal(size=(1000, len(FEATURE_NAMES)))
    exact = (dump_model(again) == dump_model(model)
             and np.array_equal(again.weights, model.weights)
             and again.bias == model.bias and again.platt_a == model.platt_a and again.platt_b == model.platt_b
             and np.array_equal(predict_probability(again, probe), predict_probability(model, probe))
             and dump_model(parse_model(dump_model(again))) == dump_model(model))
    ok = ranges_ok and acc >= 0.99 and monotone and exact
    assert report(8, "ML pipeline", ok,
                  f"{items} items, f1 [{lo[0]:.2f},{hi[0]:.2f}] f3 [{lo[1]:.2f},{hi[1]:.2f}] fc [{lo[2]:.2f},{hi[2]:.2f}]; "
                  f"separable accuracy {acc:.4f}; Platt monotone {monotone}; bit-exact round trip {exact}")


def test_c9_mlaco_directional_benefit(trained_model):
    runs = {kind: [] for kind in ("aco", "mlph", "mlaco")}
    for seed in derive_seeds(BENCH_SEED, BENCH_COUNT):
        inst = generate_instance(BENCH_ITEMS, CAPACITY, WEIGHTS, GenConfig(DENSITY, seed, BENCH_MULTIPLIER))
        for kind in runs:
            runs[kind].append(run_cg(inst, CgConfig(pricing_kind=kind, model=trained_model, time_limit=600)))
    solved = all(r.status is CgStatus.OPTIMAL for rs in runs.values() for r in rs)
    fallbacks = {k: float(np.median([r.exact_fallback_calls for r in rs])) for k, rs in runs.items()}
    iters = {k: float(np.median([r.iterations for r in rs])) for k, rs in runs.items()}
    fb_ok = fallbacks["mlaco"] <= fallbacks["aco"]
    it_ok = iters["mlaco"] <= iters["mlph"]
    ok = solved and fb_ok and it_ok
    assert report(9, "MLACO directional benefit (soft)", ok,
                  f"median fallbacks mlaco {fallbacks['mlaco']:g} vs aco {fallbacks['aco']:g} ({'ok' if fb_ok else 'worse'}); "
                  f"median iterations mlaco {iters['mlaco']:g} vs mlph {iters['mlph']:g} ({'ok' if it_ok else 'worse'})")


def columns_per_productive_iteration(result) -> float:
    """Mean columns added over iterations whose columns came from the heuristic alone."""
    added = [h.columns_added for h in result.history if not h.exact_fallback and h.columns_added > 0]
    return float(np.mean(added)) if added else 0.0


def test_c10_diversity_ablation(grid_runs, trained_model):
    with_div = grid_runs[PricingKind.MLACO_PREDICTED_ETA]
    cfg = CgConfig(pricing_kind="mlaco", model=trained_model, time_limit=GRID_TIME_LIMIT, aco=AcoConfig(diversity=False))
    without = [run_cg(inst, cfg) for inst in grid_instances()]
    solved_with = sum(r.status is CgStatus.OPTIMAL for r in with_div)
    solved_without = sum(r.status is CgStatus.OPTIMAL for r in without)
    cols_with = float(np.median([columns_per_productive_iteration(r) for r in with_div]))
    cols_without = float(np.median([columns_per_productive_iteration(r) for r in without]))
    ok = solved_without <= solved_with and cols_without <= cols_with
    assert report(10, "diversity ablation (soft)", ok,
                  f"solved {solved_without}/30 without vs {solved_with}/30 with; median columns per "
                  f"heuristic iteration {cols_without:.1f} without vs {cols_with:.1f} with")
