"""
The pricing knapsack, exactly and by sampling
=============================================

One pricing problem built from random duals: compare the exact solver with
the brute-force oracle, then see what the ant sampler produces.
"""

# %%
import numpy as np

from mlaco.aco import AcoConfig, AcoState, StrategyKind, diversity_sweep, run_strategy, selection_probabilities, update_pheromone
from mlaco.instance import GenConfig, generate_instance
from mlaco.pricing import PricingProblem, brute_force_pricing, solve_exact, solve_pool

rng = np.random.default_rng(3)
inst = generate_instance(18, 150, (20, 100), GenConfig(0.3, seed=11, capacity_multiplier=2))
duals = rng.uniform(0.05, 0.6, inst.n_items)
problem = PricingProblem.from_instance(inst, duals)

best, proven = solve_exact(problem)
oracle = brute_force_pricing(problem)
print("exact", best.items, best.profit, "proven", proven)
print("oracle profit", oracle.profit, "identical", best.profit == oracle.profit)

# %%
# The k best improving columns from the same search.
for sol in solve_pool(problem, 5, -1e-6):
    print(round(sol.reduced_cost, 4), sol.items)

# %% [markdown]
# Selection probabilities are proportional to tau^alpha * eta^beta over the
# items that still fit. Scaling eta changes nothing.

# %%
state = AcoState(np.ones(inst.n_items), duals / np.array(inst.weights))
cand = np.arange(6)
p = selection_probabilities(cand, state, AcoConfig())
q = selection_probabilities(cand, AcoState(state.tau, 10 * state.eta), AcoConfig())
print(np.round(p[:6], 4), "sum", p.sum(), "max diff after scaling", np.abs(p - q).max())

# %%
# One diversity sweep seeds every item once and keeps the improving columns.
cols = diversity_sweep(problem, state, AcoConfig(), rng)
print(len(cols), "improving columns; best rc", min(c.reduced_cost for c in cols))

# %%
# Pheromone after one update: 95% evaporates, each column deposits c_n / c_best.
update_pheromone(state, cols, AcoConfig())
print("tau range", state.tau.min(), state.tau.max())

# %%
found = run_strategy(problem, StrategyKind.PLAIN_ACO, AcoConfig(), None, rng)
print("plain ACO,", len(found), "columns; best profit", found[0].profit, "vs optimum", best.profit)
