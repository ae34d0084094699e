"""Experiment configuration: INI files, CLI overrides, canonical hashing.

A config is a plain ``{section: {key: value}}`` dict of strings. The
file format is standard INI (``key = value`` under ``[section]``).
Command-line flags override file values; the hash is computed over the
effective (post-override) config so a result directory is tied to
exactly what ran.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os

from .errors import ConfigError

DEFAULTS: dict[str, dict[str, str]] = {
    "run": {
        "datasets": "",
        "builders": "rpforest, knn",
        "seeds": "1",
        "seed0": "0",
        "out": "results",
        "standardize": "false",
        "workers": "1",
        "live_timings": "false",
    },
    "split": {"n_train": "20", "n_val": "40"},
    "gcn": {
        "hidden": "16",
        "learning_rate": "0.01",
        "weight_decay": "5e-4",
        "epochs": "200",
        "patience": "20",
        "dropout": "0.0",
    },
    "sweep": {"t_values": "1:25", "seeds": "5", "max_leaf_size": "20", "split_rule": "quantile"},
    "extra_edges": {"percents": "0, 25, 50, 75, 100", "weight": ""},
}


def load_config(path=None) -> dict[str, dict[str, str]]:
    """Read an INI file on top of the built-in defaults."""
    cfg = {section: dict(values) for section, values in DEFAULTS.items()}
    if path is not None:
        path = os.fspath(path)
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        for section in parser.sections():
            cfg.setdefault(section, {})
            for key, value in parser.items(section):
                cfg[section][key] = value.strip()
    return cfg


def apply_overrides(cfg: dict, args) -> dict:
    """Fold recognized CLI flags into the config dict (in place)."""
    mapping = {
        "seed": ("run", "seed0"),
        "out": ("run", "out"),
        "workers": ("run", "workers"),
        "k": ("cli_overrides", "k"),
        "trees": ("cli_overrides", "trees"),
        "max_leaf_size": ("cli_overrides", "max_leaf_size"),
        "split_rule": ("cli_overrides", "split_rule"),
        "label_col": ("cli_overrides", "label_col"),
        "extra_edge_weight": ("extra_edges", "weight"),
    }
    for attr, (section, key) in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            cfg.setdefault(section, {})[key] = str(value)
    if getattr(args, "seeds", None) is not None:
        # Seed count applies to whichever family runs.
        cfg["run"]["seeds"] = str(args.seeds)
        cfg["sweep"]["seeds"] = str(args.seeds)
    if getattr(args, "standardize", False):
        cfg["run"]["standardize"] = "true"
    if getattr(args, "live_timings", False):
        cfg["run"]["live_timings"] = "true"
    return cfg


def config_hash(cfg: dict) -> str:
    """Stable short hash of the effective configuration."""
    lines = sorted(
        f"{section}.{key}={value}"
        for section, values in cfg.items()
        for key, value in values.items()
    )
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:16]


def get_bool(cfg: dict, section: str, key: str) -> bool:
    raw = cfg[section][key].lower()
    if raw in ("true", "yes", "1", "on"):
        return True
    if raw in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"[{section}] {key}: expected a boolean, got {raw!r}")


def get_int(cfg: dict, section: str, key: str) -> int:
    try:
        return int(cfg[section][key])
    except ValueError:
        raise ConfigError(
            f"[{section}] {key}: expected an integer, got {cfg[section][key]!r}"
        ) from None


def get_float(cfg: dict, section: str, key: str) -> float:
    try:
        return float(cfg[section][key])
    except ValueError:
        raise ConfigError(
            f"[{section}] {key}: expected a number, got {cfg[section][key]!r}"
        ) from None


def parse_name_list(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


def parse_ring_specs(raw: str) -> list[tuple[float, int, float]]:
    """``radius:count:noise`` triples separated by ``;``."""
    specs = []
    for part in raw.split(";"):
        part = part.strip()
        if not part:
            continue
        fields = part.split(":")
        if len(fields) != 3:
            raise ConfigError(f"ring spec {part!r} must be radius:count:noise")
        specs.append((float(fields[0]), int(fields[1]), float(fields[2])))
    if not specs:
        raise ConfigError("empty ring spec")
    return specs


def parse_cluster_specs(raw: str) -> list[tuple[tuple[float, ...], int, float]]:
    """``cx,cy:count:sd`` triples separated by ``;``."""
    specs = []
    for part in raw.split(";"):
        part = part.strip()
        if not part:
            continue
        fields = part.split(":")
        if len(fields) != 3:
            raise ConfigError(f"cluster spec {part!r} must be cx,cy:count:sd")
        center = tuple(float(v) for v in fields[0].split(","))
        specs.append((center, int(fields[1]), float(fields[2])))
    if not specs:
        raise ConfigError("empty cluster spec")
    return specs


def parse_t_values(raw: str) -> list[int]:
    """Either an inclusive range ``a:b`` or a comma-separated list."""
    raw = raw.strip()
    if ":" in raw:
        lo, hi = raw.split(":", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in raw.split(",") if v.strip()]


def parse_percents(raw: str) -> list[float]:
    values = [float(v) for v in raw.split(",") if v.strip()]
    if not values:
        raise ConfigError("empty percent grid")
    for v in values:
        if not 0.0 <= v <= 100.0:
            raise ConfigError(f"percent {v} outside [0, 100]")
    return values


def write_run_meta(out_dir: str, command: str, cfg: dict) -> None:
    meta = {"command": command, "config_hash": config_hash(cfg), "config": cfg}
    with open(os.path.join(out_dir, "run_meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def check_out_dir(out_dir: str, cfg: dict, force: bool) -> None:
    """Refuse to reuse a result directory created from a different config."""
    meta_path = os.path.join(out_dir, "run_meta.json")
    if not os.path.exists(meta_path):
        return
    with open(meta_path, encoding="utf-8") as fh:
        previous = json.load(fh)
    if previous.get("config_hash") != config_hash(cfg) and not force:
        raise ConfigError(
            f"{out_dir} holds results for config {previous.get('config_hash')}, "
            f"current config is {config_hash(cfg)}; pass --force to overwrite"
        )
