"""
Solving the master LP by column generation
==========================================

Generate a small instance, solve its LP relaxation with exact pricing and
look at what each iteration did.
"""

# %%
import numpy as np

from mlaco.cg import CgConfig, run_cg
from mlaco.instance import GenConfig, generate_instance, serialize_instance
from mlaco.simplex import format_tableau

inst = generate_instance(40, 150, (20, 100), GenConfig(density=0.5, seed=7))
print(inst.n_items, "items, capacity", inst.capacity, "conflict edges", len(inst.conflicts.edges()))
print(serialize_instance(inst).splitlines()[:5])

# %% [markdown]
# The restricted master starts from random feasible patterns. Each iteration
# prices one column with the exact knapsack solver.

# %%
res = run_cg(inst, CgConfig(pricing_kind="exact"))
print(res.status.value, round(res.lp_objective, 6), "after", res.iterations, "iterations")
print(res.iteration_csv()[:400])

# %% [markdown]
# The LP bound rounded up is a lower bound on the number of bins.

# %%
print("bins needed >=", int(np.ceil(res.lp_objective - 1e-9)))
used = [(c.items, round(float(z), 3)) for c, z in zip(res.final_columns, res.primal) if z > 1e-9]
print(len(used), "columns in the optimal basis, e.g.", used[:3])

# %%
# Asking for a pool of columns per iteration usually cuts the iteration count.
pool = run_cg(inst, CgConfig(pricing_kind="exact-pool"))
print("exact-pool:", pool.iterations, "iterations, objective", round(pool.lp_objective, 6))

# %%
from mlaco.simplex import LpSolution, LpStatus

sol = LpSolution(res.lp_objective, res.primal, res.duals, LpStatus.OPTIMAL)
print(format_tableau(res.final_columns, inst.n_items, sol)[:300])
