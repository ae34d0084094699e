"""Choosing the forest size by spectral connectivity.

For each tree count T, the graph built from nested forests is probed
with the standard deviation of the smallest Laplacian eigenvector: large
while the graph is disconnected, numerically zero once a single
component remains. The first T below threshold is the elbow.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from rpfgcn import detect_elbow, gen_rings, sweep_trees

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

ds = gen_rings([(1.0, 100, 0.1), (3.0, 138, 0.1)], seed=7, name="ring238")
curve = sweep_trees(ds.X, list(range(1, 26)), max_leaf_size=20, seed=0, dataset=ds.name)
elbow = detect_elbow(curve)

print(" T  components  std(v0)")
for p in curve.points:
    print(f"{p.T:2d}  {p.components:10d}  {p.std_v0:.3e}")
print(f"\nelbow at T={elbow.t_star} (connected={elbow.connected})")

fig, ax = plt.subplots(figsize=(7, 4))
ax.plot([p.T for p in curve.points], [max(p.std_v0, 1e-16) for p in curve.points], marker="o")
ax.axvline(elbow.t_star, color="tab:red", linestyle="--", label=f"elbow T={elbow.t_star}")
ax.set_yscale("log")
ax.set_xlabel("trees in forest")
ax.set_ylabel("std of smallest eigenvector")
ax.legend()
ax.grid(alpha=0.3)
fig.tight_layout()
path = os.path.join(OUT, "connectivity_sweep.svg")
fig.savefig(path)
print(f"wrote {path}")
