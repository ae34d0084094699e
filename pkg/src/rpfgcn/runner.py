"""Configuration-driven experiment execution.

Three experiment families share one result format: graph-builder
comparison, connectivity sweeps over the forest size, and the
extra-edges ablation. Cells (dataset x builder x seed) are independent;
they may run in a thread pool, and rows are ordered by (dataset,
builder, seed) afterwards so the output never depends on scheduling.

``results.csv`` is fully deterministic for a given config. Wall-clock
build/train times go to ``timings.csv``; the timing columns inside
``results.csv`` stay zero unless ``live_timings`` is set, because byte
reproducibility of the result file is part of its contract.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import config as cfgmod
from . import dataset as datamod
from . import gcn, graph, spectral
from .errors import ConfigError, RpfgcnError, RunError

RESULT_HEADER = "dataset,builder,seed,test_accuracy,total_weight,edge_count,build_ms,train_ms"
TIMING_HEADER = "dataset,builder,seed,build_ms,train_ms"
SUMMARY_HEADER = (
    "dataset,builder,n_seeds,mean_test_accuracy,sd_test_accuracy,"
    "mean_total_weight,sd_total_weight,mean_total_weight_doubled,mean_edge_count"
)


@dataclass(frozen=True)
class CellResult:
    dataset: str
    builder: str
    seed: int
    test_accuracy: float
    total_weight: float
    edge_count: int
    build_ms: float
    train_ms: float


def derived_seed(seed: int, stream: int) -> int:
    """Independent child seed for one purpose (data, split, graph, init)."""
    return int(np.random.SeedSequence([int(seed), int(stream)]).generate_state(1, np.uint64)[0])


DATA_STREAM, SPLIT_STREAM, GRAPH_STREAM, GCN_STREAM, EXTRA_STREAM = range(5)

_csv_cache: dict[tuple[str, str], datamod.Dataset] = {}


def resolve_dataset(cfg: dict, name: str, seed: int) -> datamod.Dataset:
    """Materialize one dataset for one run seed.

    Generated datasets are resampled per seed; CSV datasets are fixed
    (and cached), so only splits and graphs vary across their seeds.
    """
    section = f"dataset:{name}"
    if section not in cfg:
        raise ConfigError(f"no [{section}] section in config")
    spec = cfg[section]
    kind = spec.get("kind", "")
    data_seed = derived_seed(seed, DATA_STREAM)
    if kind == "rings":
        blob = None
        if spec.get("center_blob", "").strip():
            count, sd = spec["center_blob"].split(":")
            blob = (int(count), float(sd))
        ds = datamod.gen_rings(
            cfgmod.parse_ring_specs(spec["rings"]), center_blob=blob, seed=data_seed, name=name
        )
    elif kind == "clusters":
        ds = datamod.gen_clusters(
            cfgmod.parse_cluster_specs(spec["clusters"]), seed=data_seed, name=name
        )
    elif kind == "csv":
        label_col = cfg.get("cli_overrides", {}).get("label_col") or spec["label_col"]
        key = (spec["path"], label_col)
        if key not in _csv_cache:
            _csv_cache[key] = datamod.load_csv(spec["path"], label_col, name=name)
        ds = _csv_cache[key]
    else:
        raise ConfigError(f"[{section}] kind must be rings, clusters, or csv, got {kind!r}")
    if cfgmod.get_bool(cfg, "run", "standardize"):
        ds = datamod.standardize(ds)
    return ds


def builder_params(cfg: dict, name: str, dataset_name: str | None = None) -> dict[str, str]:
    """Effective builder parameters.

    Precedence for the forest leaf size: builder section < per-dataset
    ``max_leaf_size`` (leaf capacity is a spatial scale, so datasets may
    pin their own) < CLI override.
    """
    section = f"builder:{name}"
    if section not in cfg:
        raise ConfigError(f"no [{section}] section in config")
    params = dict(cfg[section])
    over = cfg.get("cli_overrides", {})
    kind = params.get("kind", name)
    if kind == "rpforest":
        params.setdefault("trees", "10")
        params.setdefault("max_leaf_size", "20")
        params.setdefault("split_rule", "quantile")
        if dataset_name is not None:
            ds_spec = cfg.get(f"dataset:{dataset_name}", {})
            if "max_leaf_size" in ds_spec:
                params["max_leaf_size"] = ds_spec["max_leaf_size"]
        if "trees" in over:
            params["trees"] = over["trees"]
        if "max_leaf_size" in over:
            params["max_leaf_size"] = over["max_leaf_size"]
        if "split_rule" in over:
            params["split_rule"] = over["split_rule"]
    elif kind == "knn":
        params.setdefault("k", "10")
        if "k" in over:
            params["k"] = over["k"]
    params["kind"] = kind
    return params


def build_graph(params: dict[str, str], X: np.ndarray, graph_seed: int) -> graph.WeightedGraph:
    kind = params["kind"]
    if kind == "rpforest":
        return graph.build_rpforest_graph(
            X,
            T=int(params["trees"]),
            max_leaf_size=int(params["max_leaf_size"]),
            seed=graph_seed,
            split_rule=params["split_rule"],
        )
    if kind == "knn":
        return graph.build_knn_graph(X, k=int(params["k"]))
    if kind == "heat":
        return graph.build_heat_kernel_graph(X, sigma=float(params["sigma"]))
    if kind == "selftuning":
        return graph.build_self_tuning_graph(X, K=int(params.get("k_scale", "7")))
    raise ConfigError(f"unknown builder kind {kind!r}")


def gcn_hyper(cfg: dict, seed: int) -> gcn.GcnHyperparams:
    return gcn.GcnHyperparams(
        hidden=cfgmod.get_int(cfg, "gcn", "hidden"),
        learning_rate=cfgmod.get_float(cfg, "gcn", "learning_rate"),
        weight_decay=cfgmod.get_float(cfg, "gcn", "weight_decay"),
        epochs=cfgmod.get_int(cfg, "gcn", "epochs"),
        patience=cfgmod.get_int(cfg, "gcn", "patience"),
        dropout=cfgmod.get_float(cfg, "gcn", "dropout"),
        seed=derived_seed(seed, GCN_STREAM),
    )


def split_for(cfg: dict, name: str, ds: datamod.Dataset, seed: int) -> datamod.SplitMasks:
    spec = cfg.get(f"dataset:{name}", {})
    n_train = int(spec.get("n_train", cfg["split"]["n_train"]))
    n_val = int(spec.get("n_val", cfg["split"]["n_val"]))
    return datamod.split_masks(ds.n, n_train, n_val, ds.y, seed=derived_seed(seed, SPLIT_STREAM))


def _train_on_graph(cfg, name, ds, masks, g, seed) -> tuple[float, float]:
    """(test accuracy, train wall-ms) for one graph."""
    t0 = time.perf_counter()
    a_hat = gcn.normalize_adjacency(g)
    _, report = gcn.train(ds, masks, a_hat, gcn_hyper(cfg, seed))
    return report.test_accuracy, (time.perf_counter() - t0) * 1000.0


def run_cell(cfg: dict, dataset_name: str, builder_name: str, seed: int) -> CellResult:
    try:
        ds = resolve_dataset(cfg, dataset_name, seed)
        masks = split_for(cfg, dataset_name, ds, seed)
        params = builder_params(cfg, builder_name, dataset_name)
        t0 = time.perf_counter()
        g = build_graph(params, ds.X, derived_seed(seed, GRAPH_STREAM))
        build_ms = (time.perf_counter() - t0) * 1000.0
        accuracy, train_ms = _train_on_graph(cfg, dataset_name, ds, masks, g, seed)
        return CellResult(
            dataset=dataset_name,
            builder=builder_name,
            seed=seed,
            test_accuracy=accuracy,
            total_weight=graph.total_weight(g),
            edge_count=len(g.edges),
            build_ms=build_ms,
            train_ms=train_ms,
        )
    except RpfgcnError as exc:
        raise RunError(
            f"cell failed (dataset={dataset_name}, builder={builder_name}, seed={seed}): {exc}"
        ) from exc


def _run_pool(cfg: dict, jobs: list, worker) -> list:
    workers = cfgmod.get_int(cfg, "run", "workers")
    if workers <= 1:
        return [worker(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: worker(*job), jobs))


def _format_float(v: float) -> str:
    return repr(float(v))


def _write_results(out_dir: str, cells: list[CellResult], live_timings: bool) -> None:
    cells = sorted(cells, key=lambda c: (c.dataset, c.builder, c.seed))
    with open(os.path.join(out_dir, "results.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(RESULT_HEADER + "\n")
        for c in cells:
            build_ms = _format_float(c.build_ms) if live_timings else "0"
            train_ms = _format_float(c.train_ms) if live_timings else "0"
            fh.write(
                f"{c.dataset},{c.builder},{c.seed},{_format_float(c.test_accuracy)},"
                f"{_format_float(c.total_weight)},{c.edge_count},{build_ms},{train_ms}\n"
            )
    with open(os.path.join(out_dir, "timings.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(TIMING_HEADER + "\n")
        for c in cells:
            fh.write(
                f"{c.dataset},{c.builder},{c.seed},"
                f"{_format_float(c.build_ms)},{_format_float(c.train_ms)}\n"
            )


def _write_summary(out_dir: str, cells: list[CellResult]) -> None:
    groups: dict[tuple[str, str], list[CellResult]] = {}
    for c in cells:
        groups.setdefault((c.dataset, c.builder), []).append(c)
    with open(os.path.join(out_dir, "summary.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for (ds_name, builder), group in sorted(groups.items()):
            acc = np.array([c.test_accuracy for c in group])
            tw = np.array([c.total_weight for c in group])
            ec = np.array([c.edge_count for c in group], dtype=float)
            sd_acc = acc.std(ddof=1) if acc.size > 1 else 0.0
            sd_tw = tw.std(ddof=1) if tw.size > 1 else 0.0
            fh.write(
                f"{ds_name},{builder},{acc.size},{_format_float(acc.mean())},"
                f"{_format_float(sd_acc)},{_format_float(tw.mean())},{_format_float(sd_tw)},"
                f"{_format_float(2.0 * tw.mean())},{_format_float(ec.mean())}\n"
            )


def _prepare_out(cfg: dict, command: str, force: bool) -> str:
    out_dir = cfg["run"]["out"]
    os.makedirs(out_dir, exist_ok=True)
    cfgmod.check_out_dir(out_dir, cfg, force)
    cfgmod.write_run_meta(out_dir, command, cfg)
    return out_dir


def run_seeds(cfg: dict) -> list[int]:
    seed0 = cfgmod.get_int(cfg, "run", "seed0")
    count = cfgmod.get_int(cfg, "run", "seeds")
    if count < 1:
        raise ConfigError(f"need at least one seed, got {count}")
    return list(range(seed0, seed0 + count))


def run_compare(cfg: dict, force: bool = False) -> str:
    """Train the GCN on every (dataset, builder, seed) cell; write results."""
    datasets = cfgmod.parse_name_list(cfg["run"]["datasets"])
    builders = cfgmod.parse_name_list(cfg["run"]["builders"])
    if not datasets:
        raise ConfigError("[run] datasets is empty")
    if not builders:
        raise ConfigError("[run] builders is empty")
    out_dir = _prepare_out(cfg, "compare", force)
    jobs = [
        (cfg, d, b, s) for d in datasets for b in builders for s in run_seeds(cfg)
    ]
    cells = _run_pool(cfg, jobs, run_cell)
    _write_results(out_dir, cells, cfgmod.get_bool(cfg, "run", "live_timings"))
    _write_summary(out_dir, cells)
    return out_dir


def _sweep_one(cfg: dict, dataset_name: str, seed: int):
    try:
        ds = resolve_dataset(cfg, dataset_name, seed)
        curve = spectral.sweep_trees(
            ds.X,
            cfgmod.parse_t_values(cfg["sweep"]["t_values"]),
            max_leaf_size=int(
                cfg.get("cli_overrides", {}).get("max_leaf_size", cfg["sweep"]["max_leaf_size"])
            ),
            seed=derived_seed(seed, GRAPH_STREAM),
            split_rule=cfg.get("cli_overrides", {}).get("split_rule", cfg["sweep"]["split_rule"]),
            dataset=dataset_name,
        )
        elbow = spectral.detect_elbow(curve)
        return dataset_name, seed, curve, elbow
    except RpfgcnError as exc:
        raise RunError(f"sweep failed (dataset={dataset_name}, seed={seed}): {exc}") from exc


def run_sweep(cfg: dict, force: bool = False) -> str:
    """Connectivity sweep per dataset and seed; one CSV each plus elbows.csv."""
    datasets = cfgmod.parse_name_list(cfg["run"]["datasets"])
    if not datasets:
        raise ConfigError("[run] datasets is empty")
    t_values = cfgmod.parse_t_values(cfg["sweep"]["t_values"])
    if len(t_values) < 3:
        raise ConfigError(f"sweep needs >= 3 tree counts for elbow detection, got {t_values}")
    out_dir = _prepare_out(cfg, "sweep", force)
    seed0 = cfgmod.get_int(cfg, "run", "seed0")
    n_seeds = cfgmod.get_int(cfg, "sweep", "seeds")
    jobs = [(cfg, d, s) for d in datasets for s in range(seed0, seed0 + n_seeds)]
    outcomes = _run_pool(cfg, jobs, _sweep_one)
    outcomes.sort(key=lambda item: (item[0], item[1]))
    with open(os.path.join(out_dir, "elbows.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("dataset,seed,t_star,connected\n")
        for name, seed, curve, elbow in outcomes:
            spectral.write_sweep_csv(curve, os.path.join(out_dir, f"sweep_{name}_seed{seed}.csv"))
            fh.write(f"{name},{seed},{elbow.t_star},{str(elbow.connected).lower()}\n")
    return out_dir


def _extra_edges_cell(cfg: dict, dataset_name: str, percent: float, seed: int) -> CellResult:
    builder_label = f"rpforest_extra{percent:g}"
    try:
        ds = resolve_dataset(cfg, dataset_name, seed)
        masks = split_for(cfg, dataset_name, ds, seed)
        params = builder_params(cfg, "rpforest", dataset_name)
        t0 = time.perf_counter()
        base = build_graph(params, ds.X, derived_seed(seed, GRAPH_STREAM))
        weight_raw = cfg["extra_edges"]["weight"].strip()
        weight = float(weight_raw) if weight_raw else 1.0 / int(params["trees"])
        g = graph.add_complement_edges(
            base, percent=percent, weight=weight, seed=derived_seed(seed, EXTRA_STREAM)
        )
        build_ms = (time.perf_counter() - t0) * 1000.0
        accuracy, train_ms = _train_on_graph(cfg, dataset_name, ds, masks, g, seed)
        return CellResult(
            dataset=dataset_name,
            builder=builder_label,
            seed=seed,
            test_accuracy=accuracy,
            total_weight=graph.total_weight(g),
            edge_count=len(g.edges),
            build_ms=build_ms,
            train_ms=train_ms,
        )
    except RpfgcnError as exc:
        raise RunError(
            f"cell failed (dataset={dataset_name}, builder={builder_label}, seed={seed}): {exc}"
        ) from exc


def run_extra_edges(cfg: dict, force: bool = False) -> str:
    """Ablation: retrain after adding a share of the missing edges."""
    datasets = cfgmod.parse_name_list(cfg["run"]["datasets"])
    if not datasets:
        raise ConfigError("[run] datasets is empty")
    percents = cfgmod.parse_percents(cfg["extra_edges"]["percents"])
    out_dir = _prepare_out(cfg, "extra-edges", force)
    jobs = [
        (cfg, d, p, s) for d in datasets for p in percents for s in run_seeds(cfg)
    ]
    cells = _run_pool(cfg, jobs, _extra_edges_cell)
    _write_results(out_dir, cells, cfgmod.get_bool(cfg, "run", "live_timings"))
    _write_summary(out_dir, cells)
    return out_dir
