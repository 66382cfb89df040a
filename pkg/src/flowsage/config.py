"""Declarative pipeline configuration: one YAML file plus CLI overrides.

The config hash used for artifact lineage covers everything except the
output directory, so identical runs into different directories produce
byte-identical artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .artifacts import config_hash
from .detectors import GridSpec
from .ingest import SplitSpec, get_schema
from .trainer import TrainConfig

MODES = ("benchmark", "deploy")


class ConfigError(ValueError):
    """Carries every validation problem found, not just the first."""

    def __init__(self, problems: list[str]):
        super().__init__("invalid config:\n  - " + "\n  - ".join(problems))
        self.problems = problems


@dataclass
class PipelineConfig:
    dataset_path: str
    dataset_schema: str
    out_dir: str
    seed: int = 0
    mode: str = "benchmark"
    encoder_kind: str = "frequency"
    downsample_fraction: float = 1.0
    train_fraction: float = 0.7
    contamination: float | None = None
    hidden_dim: int = 128
    depth: int = 1
    epochs: int = 200
    lr: float = 0.003
    readout_source: str = "edges"
    grid: GridSpec = field(default_factory=GridSpec)

    def split_spec(self) -> SplitSpec:
        return SplitSpec(
            downsample_fraction=self.downsample_fraction,
            train_fraction=self.train_fraction,
            contamination=self.contamination,
            rng_seed=self.seed,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, lr=self.lr, seed=self.seed,
                           readout_source=self.readout_source)

    def hash(self) -> str:
        payload = {
            "dataset_path": self.dataset_path,
            "dataset_schema": self.dataset_schema,
            "seed": self.seed,
            "mode": self.mode,
            "encoder_kind": self.encoder_kind,
            "downsample_fraction": self.downsample_fraction,
            "train_fraction": self.train_fraction,
            "contamination": self.contamination,
            "hidden_dim": self.hidden_dim,
            "depth": self.depth,
            "epochs": self.epochs,
            "lr": self.lr,
            "readout_source": self.readout_source,
            "grid": {
                "pca": list(self.grid.pca_n_components),
                "iforest": list(self.grid.iforest_n_estimators),
                "cblof": list(self.grid.cblof_n_clusters),
                "hbos": list(self.grid.hbos_n_bins),
                "contamination": list(self.grid.contamination),
            },
        }
        return config_hash(payload)

    def lineage(self) -> dict:
        return {"config_hash": self.hash(), "seed": self.seed}


def _get(mapping: dict, path: str, default=None):
    node = mapping
    for key in path.split("."):
        if not isinstance(node, dict) or key not in node:
            return default
        node = node[key]
    return node


def load_config(path, overrides: dict | None = None) -> PipelineConfig:
    """Load YAML, apply CLI overrides, and validate everything up front."""
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"config file not found: {path}"])
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError([f"config root must be a mapping, got {type(raw).__name__}"])

    overrides = overrides or {}
    problems: list[str] = []

    dataset_path = _get(raw, "dataset.path")
    if not dataset_path:
        problems.append("dataset.path is required")
    schema = _get(raw, "dataset.schema")
    if not schema:
        problems.append("dataset.schema is required")
    else:
        try:
            get_schema(schema)
        except ValueError as exc:
            problems.append(str(exc))

    out_dir = overrides.get("out") or raw.get("out")
    if not out_dir:
        problems.append("out (output directory) is required")

    seed = overrides.get("seed", raw.get("seed"))
    if seed is None:
        problems.append("seed is required")
    elif not isinstance(seed, int):
        problems.append(f"seed must be an integer, got {seed!r}")

    mode = overrides.get("mode") or raw.get("mode", "benchmark")
    if mode not in MODES:
        problems.append(f"mode must be one of {MODES}, got {mode!r}")

    encoder_kind = _get(raw, "preprocess.encoder", "frequency")
    if encoder_kind not in ("frequency", "target"):
        problems.append(f"preprocess.encoder must be 'frequency' or 'target', got {encoder_kind!r}")

    def _num(path_, default, caster, check, describe):
        value = _get(raw, path_, default)
        try:
            value = caster(value)
            if not check(value):
                raise ValueError
        except (TypeError, ValueError):
            problems.append(f"{path_} must be {describe}, got {value!r}")
            return default
        return value

    downsample = _num("split.downsample_fraction", 1.0, float,
                      lambda v: 0 < v <= 1, "a fraction in (0, 1]")
    train_frac = _num("split.train_fraction", 0.7, float,
                      lambda v: 0 < v < 1, "a fraction in (0, 1)")
    contamination = _get(raw, "split.contamination")
    if contamination is not None:
        try:
            contamination = float(contamination)
            if not (0 < contamination < 1):
                raise ValueError
        except (TypeError, ValueError):
            problems.append(f"split.contamination must be null or a fraction in (0, 1), "
                            f"got {contamination!r}")
            contamination = None

    hidden_dim = _num("encoder.hidden_dim", 128, int, lambda v: v > 0, "a positive integer")
    depth = _num("encoder.depth", 1, int, lambda v: v >= 1, "an integer >= 1")
    epochs = _num("train.epochs", 200, int, lambda v: v >= 1, "an integer >= 1")
    lr = _num("train.lr", 0.003, float, lambda v: v > 0, "positive")
    readout = _get(raw, "train.readout", "edges")
    if readout not in ("edges", "nodes"):
        problems.append(f"train.readout must be 'edges' or 'nodes', got {readout!r}")

    def _int_list(path_, default):
        value = _get(raw, path_, list(default))
        if (not isinstance(value, list) or not value
                or not all(isinstance(v, int) and v > 0 for v in value)):
            problems.append(f"{path_} must be a nonempty list of positive integers, got {value!r}")
            return default
        return tuple(value)

    grid_pca = _int_list("detectors.pca", (8,))
    grid_if = _int_list("detectors.iforest", (100,))
    grid_cblof = _int_list("detectors.cblof", (8,))
    grid_hbos = _int_list("detectors.hbos", (10,))
    grid_cont = _get(raw, "detectors.contamination", [0.04])
    if (not isinstance(grid_cont, list) or not grid_cont
            or not all(isinstance(v, (int, float)) and 0 < v <= 0.5 for v in grid_cont)):
        problems.append("detectors.contamination must be a nonempty list of fractions in (0, 0.5], "
                        f"got {grid_cont!r}")
        grid_cont = [0.04]

    if problems:
        raise ConfigError(problems)

    return PipelineConfig(
        dataset_path=str(dataset_path),
        dataset_schema=str(schema),
        out_dir=str(out_dir),
        seed=int(seed),
        mode=mode,
        encoder_kind=encoder_kind,
        downsample_fraction=downsample,
        train_fraction=train_frac,
        contamination=contamination,
        hidden_dim=hidden_dim,
        depth=depth,
        epochs=epochs,
        lr=lr,
        readout_source=readout,
        grid=GridSpec(
            pca_n_components=grid_pca,
            iforest_n_estimators=grid_if,
            cblof_n_clusters=grid_cblof,
            hbos_n_bins=grid_hbos,
            contamination=tuple(float(c) for c in grid_cont),
        ),
    )
