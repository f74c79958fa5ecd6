"""
Integer solutions with branch-and-price
=======================================

Ryan-Foster branching on item pairs, checked against exhaustive search on a
tiny instance, then a larger run with a time limit.
"""

# %%
from mlaco.bnp import brute_force_ip, run_bnp
from mlaco.cg import CgConfig
from mlaco.instance import GenConfig, generate_instance, validate_pattern
from mlaco.rng import derive_seeds

for seed in derive_seeds(404, 8):
    inst = generate_instance(10, 90, (10, 50), GenConfig(0.5, seed))
    res = run_bnp(inst, CgConfig())
    print(f"root LP {res.root_lp:.3f}  bins {res.incumbent_value}  exhaustive {brute_force_ip(inst)}  nodes {res.nodes_explored}")

# %%
inst = generate_instance(40, 150, (20, 100), GenConfig(0.5, 1, 2))
res = run_bnp(inst, CgConfig(pricing_kind="aco"), time_limit=60)
print(res.status.value, res.incumbent_value, "bins, gap", res.gap_percent, "%")
print(res.node_csv()[:500])
assert all(validate_pattern(inst, c.items).feasible for c in res.incumbent_patterns)
