"""
Learning which items belong in the optimal column
=================================================

Collect labelled pricing problems from CG runs, train the linear SVM with
Platt calibration and use its probabilities to steer the sampler.
Sizes are kept small so this runs in about a minute.
"""

# %%
import numpy as np

from mlaco.cg import CgConfig, run_cg
from mlaco.features import FEATURE_NAMES
from mlaco.instance import GenConfig, generate_instance
from mlaco.ml import accuracy, dump_model
from mlaco.rng import derive_seeds
from mlaco.training import train_model

train = [generate_instance(60, 150, (20, 100), GenConfig(0.5, s, 5)) for s in derive_seeds(1, 6)]
model, data = train_model(train, seed=0)
x = np.array([e.features for e in data])
y = np.array([e.label for e in data])
print(len(data), "examples,", y.sum(), "positive")
print("training accuracy", round(accuracy(model, x, y), 3))

# %%
for name, w in zip(FEATURE_NAMES, model.weights):
    print(f"{name:10s} {w:+.3f}")
print(dump_model(model))

# %% [markdown]
# Every strategy reaches the same LP optimum; they differ in how many
# iterations and exact fallbacks they need.

# %%
inst = generate_instance(60, 150, (20, 100), GenConfig(0.5, 424242, 5))
for kind in ("exact", "aco", "mlph", "mlaco", "mlaco-pred-heu-eta", "mlaco-pred-tau"):
    r = run_cg(inst, CgConfig(pricing_kind=kind, model=model))
    print(f"{kind:20s} obj {r.lp_objective:.6f} iters {r.iterations:3d} fallbacks {r.exact_fallback_calls:3d} "
          f"cols {r.columns_generated:5d} {r.wall_time:.1f}s")
