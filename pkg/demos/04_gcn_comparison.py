"""Semi-supervised node classification with different graph builders.

Trains the two-layer GCN on a scattered-clumps dataset where a fixed
neighbor count is a real handicap: each clump holds 10 points, so k=10
forces every node to reach into foreign clumps, while forest leaves
adapt to the local density. Five seeds, means reported.

The full experiment grid lives in configs/compare.ini:
    rpfgcn compare --config configs/compare.ini
"""

import numpy as np

from rpfgcn import (
    GcnHyperparams,
    build_knn_graph,
    build_rpforest_graph,
    gen_clusters,
    normalize_adjacency,
    split_masks,
    train,
)

centers = np.random.default_rng(777).uniform(0, 20, (30, 2))
specs = [(tuple(c), 10, 0.25) for c in centers]

results = {"rpforest": [], "knn": []}
for seed in range(5):
    ds = gen_clusters(specs, seed=seed, name="clumps300")
    masks = split_masks(ds.n, 30, 30, ds.y, seed=seed)
    graphs = {
        "rpforest": build_rpforest_graph(ds.X, T=10, max_leaf_size=10, seed=seed, split_rule="range"),
        "knn": build_knn_graph(ds.X, k=10),
    }
    for name, g in graphs.items():
        _, report = train(ds, masks, normalize_adjacency(g), GcnHyperparams(seed=seed))
        results[name].append(report.test_accuracy)
        print(f"seed {seed} {name:9s} test accuracy {report.test_accuracy:.3f} "
              f"({report.epochs_run} epochs)")

print()
for name, accs in results.items():
    print(f"{name:9s} mean {np.mean(accs):.4f}  sd {np.std(accs, ddof=1):.4f}")
