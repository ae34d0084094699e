"""Graph construction via random projection forests plus a minimal GCN.

The pipeline: take a raw feature matrix, build a weighted graph (forest
leaf co-occurrence, k-nn, or a Gaussian kernel), check connectivity
spectrally to size the forest, then train a small two-layer graph
convolutional network for semi-supervised node classification.
"""

from .dataset import Dataset, SplitMasks, gen_clusters, gen_rings, load_csv, split_masks, standardize
from .errors import (
    ConfigError,
    ConvergenceError,
    DataError,
    GraphError,
    RpfgcnError,
    RunError,
    ShapeError,
    SpectralError,
    TrainingError,
)
from .gcn import (
    Grads,
    GcnHyperparams,
    GcnModel,
    NormalizedAdjacency,
    TrainReport,
    evaluate,
    forward,
    gradients,
    load_model,
    masked_cross_entropy,
    normalize_adjacency,
    save_model,
    train,
)
from .graph import (
    WeightedGraph,
    add_complement_edges,
    aggregate_leaf_partitions,
    build_heat_kernel_graph,
    build_knn_graph,
    build_rpforest_graph,
    build_rpforest_trees,
    build_self_tuning_graph,
    connected_components,
    forest_tree_seed,
    load_edge_list,
    make_graph,
    save_edge_list,
    total_weight,
)
from .linalg import matmul, sym_eig
from .rptree import RpTree, build_tree, leaves, project
from .spectral import (
    Elbow,
    SweepCurve,
    SweepPoint,
    connectivity_std,
    detect_elbow,
    graph_laplacian,
    smallest_eigenvector,
    sweep_trees,
    write_sweep_csv,
)

__version__ = "0.1.0"
