"""Pipeline stages over on-disk artifacts.

Each stage consumes the previous stage's artifacts and writes its own, all
stamped with the config hash and seed; a stage refuses inputs whose lineage
does not match the active config. Stages are restartable: deleting a
downstream artifact and rerunning its stage reproduces it bit-exact.
"""

from __future__ import annotations

import contextlib
import logging
import os
from pathlib import Path

from . import artifacts, metrics, preprocess
from .artifacts import MissingArtifactError, check_lineage
from .config import PipelineConfig
from .detectors import DETECTOR_KINDS, fitter, grid_search, predict
from .encoder import EncoderConfig, embed_graph
from .graph import build_graph
from .ingest import downsample, get_schema, load_csv, split
from .trainer import train

logger = logging.getLogger(__name__)

INPUT_KINDS = ("raw", "embeddings")


def _paths(out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    p = {
        "encoder": out / "encoder.json",
        "graph_train": out / "graph_train.bin",
        "graph_test": out / "graph_test.bin",
        "raw_train": out / "raw_train.bin",
        "raw_test": out / "raw_test.bin",
        "checkpoint": out / "checkpoint.bin",
        "loss_trace": out / "loss_trace.csv",
        "embeddings_train": out / "embeddings_train.bin",
        "embeddings_test": out / "embeddings_test.bin",
        "grid_report": out / "grid_report.csv",
        "report_csv": out / "report.csv",
        "report_txt": out / "report.txt",
        "report_jsonl": out / "report.jsonl",
    }
    for input_kind in INPUT_KINDS:
        for kind in DETECTOR_KINDS:
            p[f"detector_{input_kind}_{kind}"] = out / "detectors" / f"{input_kind}_{kind}.bin"
    return p


@contextlib.contextmanager
def output_lock(out_dir):
    """One pipeline run per output directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lock = out / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RuntimeError(f"output directory is locked by another run: {lock}") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise MissingArtifactError(path, what)
    return path


def _lineage_comment(cfg: PipelineConfig) -> str:
    return f"# config_hash={cfg.hash()} seed={cfg.seed}\n"


def stage_preprocess(cfg: PipelineConfig) -> None:
    """CSV → encoded train/test graphs + raw edge-feature matrices."""
    paths = _paths(cfg.out_dir)
    schema = get_schema(cfg.dataset_schema)
    records = load_csv(_require(Path(cfg.dataset_path), "dataset"), schema)
    records = [preprocess.drop_ports(r) for r in records]
    spec = cfg.split_spec()
    records = downsample(records, spec)
    train_records, test_records = split(records, spec)
    logger.info("split: %d train / %d test flows", len(train_records), len(test_records))

    if cfg.mode == "benchmark":
        if any(r.label is None for r in train_records + test_records):
            raise ValueError("benchmark mode requires labelled records")

    encoder = preprocess.fit_encoder(train_records, schema, kind=cfg.encoder_kind)
    normalizer = preprocess.Normalizer()
    x_train = preprocess.transform(train_records, schema, encoder, normalizer)
    x_test = preprocess.transform(test_records, schema, encoder, normalizer)

    graph_train = build_graph(train_records, x_train)
    graph_test = build_graph(test_records, x_test)

    lineage = cfg.lineage()
    preprocess.save_encoder(encoder, normalizer, paths["encoder"], meta=lineage)
    artifacts.save_graph(paths["graph_train"], graph_train, lineage)
    artifacts.save_graph(paths["graph_test"], graph_test, lineage)
    for name, graph in (("raw_train", graph_train), ("raw_test", graph_test)):
        artifacts.save_edge_matrix(paths[name], graph.edge_features,
                                   graph.edge_labels(), "raw", lineage)


def _load_graph_checked(path: Path, cfg: PipelineConfig, what: str):
    graph, meta = artifacts.load_graph(_require(path, what))
    check_lineage(meta, cfg.hash(), cfg.seed, path)
    return graph


def stage_train(cfg: PipelineConfig) -> None:
    """Training graph → self-supervised checkpoint + loss trace."""
    paths = _paths(cfg.out_dir)
    graph = _load_graph_checked(paths["graph_train"], cfg, "training graph (run preprocess)")
    enc_cfg = EncoderConfig(input_dim=graph.feature_dim,
                            hidden_dim=cfg.hidden_dim, depth=cfg.depth)
    result = train(graph, enc_cfg, cfg.train_config())
    artifacts.save_checkpoint(paths["checkpoint"], result.encoder_params,
                              result.discriminator_params, enc_cfg,
                              cfg.train_config(), cfg.lineage())
    with open(paths["loss_trace"], "w", encoding="utf-8") as fh:
        fh.write(_lineage_comment(cfg))
        fh.write("epoch,loss\n")
        for epoch, value in enumerate(result.loss_trace, start=1):
            fh.write(f"{epoch},{value!r}\n")
    logger.info("trained %d epochs, final loss %.6f", cfg.epochs, result.loss_trace[-1])


def stage_embed(cfg: PipelineConfig) -> None:
    """Graphs + checkpoint → per-edge embedding matrices."""
    paths = _paths(cfg.out_dir)
    enc, disc, enc_cfg, _, meta = artifacts.load_checkpoint(
        _require(paths["checkpoint"], "checkpoint (run train)"))
    check_lineage(meta, cfg.hash(), cfg.seed, paths["checkpoint"])
    del disc
    for side in ("train", "test"):
        graph = _load_graph_checked(paths[f"graph_{side}"], cfg,
                                    f"{side} graph (run preprocess)")
        emb = embed_graph(graph, enc, enc_cfg)
        artifacts.save_edge_matrix(paths[f"embeddings_{side}"], emb,
                                   graph.edge_labels(), "embeddings", cfg.lineage())


def _load_matrix_checked(path: Path, cfg: PipelineConfig, what: str):
    matrix, labels, meta = artifacts.load_edge_matrix(_require(path, what))
    check_lineage(meta, cfg.hash(), cfg.seed, path)
    return matrix, labels


def stage_detect(cfg: PipelineConfig) -> None:
    """Fit all four detectors on train rows for both input kinds.

    Benchmark mode grid-searches against the labelled test rows; deploy mode
    fits the first grid cell without labels.
    """
    paths = _paths(cfg.out_dir)
    (Path(cfg.out_dir) / "detectors").mkdir(parents=True, exist_ok=True)
    grid_rows: list[str] = []
    for input_kind in INPUT_KINDS:
        prefix = "raw" if input_kind == "raw" else "embeddings"
        x_train, _ = _load_matrix_checked(paths[f"{prefix}_train"], cfg,
                                          f"{input_kind} train matrix")
        x_val, val_labels = _load_matrix_checked(paths[f"{prefix}_test"], cfg,
                                                 f"{input_kind} test matrix")
        for kind in DETECTOR_KINDS:
            fit_fn = fitter(kind, seed=cfg.seed)
            if cfg.mode == "benchmark":
                if val_labels is None:
                    raise ValueError("benchmark mode requires labelled test rows")
                result = grid_search(fit_fn, kind, cfg.grid, x_train, x_val, val_labels)
                best = result.best
                for cell in result.cells:
                    selected = int(cell is result.best_cell)
                    grid_rows.append(
                        f"{input_kind},{kind},{cell.param},{cell.contamination!r},"
                        f"{cell.accuracy!r},{cell.macro_f1!r},{cell.detection_rate!r},"
                        f"{selected},{cell.error}\n")
            else:
                param = cfg.grid.params_for(kind)[0]
                contamination = cfg.grid.contamination[0]
                best = fit_fn(x_train, param, contamination)
                grid_rows.append(f"{input_kind},{kind},{param},{contamination!r},"
                                 f",,,1,\n")
            artifacts.save_detector(paths[f"detector_{input_kind}_{kind}"], best,
                                    cfg.lineage())
    paths["grid_report"].parent.mkdir(parents=True, exist_ok=True)
    with open(paths["grid_report"], "w", encoding="utf-8") as fh:
        fh.write(_lineage_comment(cfg))
        fh.write("input_kind,detector,param,contamination,accuracy,macro_f1,"
                 "detection_rate,selected,error\n")
        fh.writelines(grid_rows)


def stage_evaluate(cfg: PipelineConfig) -> list[metrics.ComparisonRow]:
    """Score the test rows with every fitted detector and emit comparison tables."""
    if cfg.mode != "benchmark":
        raise ValueError("evaluation requires benchmark mode (labelled data)")
    paths = _paths(cfg.out_dir)
    rows_by_kind: dict[str, list[metrics.ReportRow]] = {k: [] for k in INPUT_KINDS}
    for input_kind in INPUT_KINDS:
        prefix = "raw" if input_kind == "raw" else "embeddings"
        x_test, labels = _load_matrix_checked(paths[f"{prefix}_test"], cfg,
                                              f"{input_kind} test matrix")
        if labels is None:
            raise ValueError("evaluation requires labelled test rows")
        for kind in DETECTOR_KINDS:
            path = paths[f"detector_{input_kind}_{kind}"]
            model, meta = artifacts.load_detector(
                _require(path, f"{input_kind}/{kind} detector (run detect)"))
            check_lineage(meta, cfg.hash(), cfg.seed, path)
            _, flags = predict(model, x_test)
            rows_by_kind[input_kind].append(
                metrics.ReportRow(detector=kind, input_kind=input_kind,
                                  metrics=metrics.metrics(flags, labels)))

    comparison = metrics.compare(rows_by_kind["raw"], rows_by_kind["embeddings"])
    with open(paths["report_csv"], "w", encoding="utf-8") as fh:
        fh.write(_lineage_comment(cfg))
        fh.write(metrics.comparison_csv(comparison))
    with open(paths["report_txt"], "w", encoding="utf-8") as fh:
        fh.write(metrics.comparison_text(comparison))
    with open(paths["report_jsonl"], "w", encoding="utf-8") as fh:
        fh.write(metrics.report_jsonl(rows_by_kind["raw"] + rows_by_kind["embeddings"]))
    return comparison


STAGES = {
    "preprocess": stage_preprocess,
    "train": stage_train,
    "embed": stage_embed,
    "detect": stage_detect,
    "evaluate": stage_evaluate,
}


def run_all(cfg: PipelineConfig) -> list[metrics.ComparisonRow] | None:
    stage_preprocess(cfg)
    stage_train(cfg)
    stage_embed(cfg)
    stage_detect(cfg)
    if cfg.mode == "benchmark":
        return stage_evaluate(cfg)
    return None
