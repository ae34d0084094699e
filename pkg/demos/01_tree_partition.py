"""How a single random projection tree carves a point cloud.

Builds one tree over a two-ring dataset and shows the leaf cells: every
point belongs to exactly one leaf, leaves respect the random-hyperplane
geometry, and no leaf exceeds the capacity.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from rpfgcn import build_tree, gen_rings, leaves

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

ds = gen_rings([(1.0, 100, 0.1), (3.0, 138, 0.1)], seed=7, name="ring238")
tree = build_tree(ds.X, max_leaf_size=20, seed=3)
cells = leaves(tree)

sizes = sorted(len(c) for c in cells)
print(f"{len(cells)} leaves over {ds.n} points")
print(f"leaf sizes: min={sizes[0]} median={sizes[len(sizes) // 2]} max={sizes[-1]}")
assert sum(sizes) == ds.n

fig, ax = plt.subplots(figsize=(6, 6))
colors = plt.cm.tab20(np.linspace(0, 1, 20))
for idx, cell in enumerate(cells):
    pts = ds.X[cell]
    ax.scatter(pts[:, 0], pts[:, 1], s=14, color=colors[idx % 20])
ax.set_aspect("equal")
ax.set_title(f"leaf cells of one projection tree (max_leaf_size=20, {len(cells)} leaves)")
fig.tight_layout()
path = os.path.join(OUT, "tree_partition.svg")
fig.savefig(path)
print(f"wrote {path}")
