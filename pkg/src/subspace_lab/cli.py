"""``subspace-lab`` command line.

Exit codes: 0 success, 1 configuration or input-format error, 2 fit or
protocol error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import __version__
from .config import RunConfig, load_config, parse_dims, parse_floats
from .dataset import (
    LabeledDataset,
    load_csv_dataset,
    load_image_tree,
    make_splits,
    vectorize,
)
from .errors import (
    ConfigError,
    DataFormatError,
    DegenerateConstraintError,
    DegenerateDataError,
    DomainError,
    InsufficientRankError,
    ProtocolError,
    ShapeError,
)
from .evaluation import DEFAULT_BETAS, fit_pipeline, run_protocol, sweep_beta
from .export import write_csv, write_json
from .features import LbpParams, lbp_block_histograms
from .synthetic import make_blobs, make_image_blobs

logger = logging.getLogger("subspace_lab")

EXIT_CONFIG = 1
EXIT_FIT = 2
EXIT_IO = 3


def thread_count() -> int:
    raw = os.environ.get("SUBSPACE_LAB_THREADS")
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ConfigError(f"SUBSPACE_LAB_THREADS must be a positive integer, got {raw!r}")
    return n


def load_data(cfg: RunConfig):
    """Dataset per config: :class:`LabeledDataset` for 1D methods, images for 2D ones."""
    ds = cfg.dataset
    if ds.kind == "csv":
        return load_csv_dataset(ds.path)
    if ds.kind == "synthetic":
        return make_blobs(ds.classes, ds.per_class, ds.dim, ds.separation, ds.spread, ds.seed)
    if ds.kind == "synthetic-images":
        images = make_image_blobs(ds.classes, ds.per_class, (ds.height, ds.width), seed=ds.seed)
    else:
        images = load_image_tree(ds.path, ds.resize)

    if cfg.method.two_d:
        return images
    if cfg.features.kind == "lbp":
        params = LbpParams(cfg.features.block, cfg.features.overlap)
        X = np.column_stack([lbp_block_histograms(im, params) for im in images.images])
        return LabeledDataset(X, images.labels)
    return vectorize(images)


def _splits(cfg: RunConfig, labels):
    p = cfg.protocol
    return make_splits(labels, p.scheme, p.seed, k=p.k, n=p.n)


def _prepare_output(cfg: RunConfig) -> str:
    os.makedirs(cfg.output, exist_ok=True)
    write_json(os.path.join(cfg.output, "config.echo.json"), cfg.to_dict())
    return cfg.output


def cmd_run(cfg: RunConfig) -> int:
    data = load_data(cfg)
    splits = _splits(cfg, data.labels)
    report = run_protocol(data, cfg.method, splits, cfg.protocol.dims, threads=thread_count())
    model = fit_pipeline(data, cfg.method, max(report.dims))

    out = _prepare_output(cfg)
    write_json(os.path.join(out, "splits.json"), splits.to_dict())
    write_json(os.path.join(out, "report.json"), report.to_dict())
    write_csv(os.path.join(out, "curves.csv"), ["dim", "accuracy"], report.curves)
    write_json(os.path.join(out, "model.json"), model.to_dict())
    logger.info("timings: %s", {k: round(v, 3) for k, v in report.wall_time_s.items()})

    print(f"{cfg.method.name}: ARA {100 * report.ara:.2f} ± {100 * report.std:.2f}% "
          f"over {len(splits.folds)} folds; top rate {100 * report.top_rate:.2f}% "
          f"at dim {report.best_dim}")
    return 0


def cmd_sweep(cfg: RunConfig, axis: str, grid: str | None) -> int:
    if axis == "beta" and cfg.method.name not in ("glpp", "glpp2d", "lpp2d"):
        raise ConfigError(f"beta sweep needs method glpp or glpp2d, got {cfg.method.name}")
    values = (parse_dims(grid) if axis == "dim" else parse_floats(grid)) if grid else None
    data = load_data(cfg)
    splits = _splits(cfg, data.labels)
    threads = thread_count()

    rows = []
    if axis == "dim":
        dims = values or cfg.protocol.dims
        report = run_protocol(data, cfg.method, splits, dims, threads=threads)
        for d in report.dims:
            rows.append((d, *report.at_dim(d)))
    else:
        betas = values or DEFAULT_BETAS
        for beta, report in sweep_beta(data, cfg.method, splits, betas, cfg.protocol.dims,
                                       threads=threads):
            rows.append((beta, report.ara, report.std, report.top_rate))

    out = _prepare_output(cfg)
    write_csv(os.path.join(out, "sweep.csv"), ["value", "ara", "std", "top_rate"], rows)
    for row in rows:
        print(f"{axis}={row[0]}: ARA {100 * row[1]:.2f} ± {100 * row[2]:.2f}%, top {100 * row[3]:.2f}%")
    return 0


def cmd_features(cfg: RunConfig, out_path: str) -> int:
    data = load_data(cfg)
    if not isinstance(data, LabeledDataset):
        data = vectorize(data)
    rows = ([int(lab), *col] for lab, col in zip(data.labels, data.features.T))
    write_csv(out_path, ["label"] + [f"f{i + 1}" for i in range(data.m)], rows)
    print(f"wrote {data.n} feature vectors of dimension {data.m} to {out_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subspace-lab",
                                     description="GLPP and LPP-family subspace benchmarks")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="cross-validate one method and write report/curves/model")
    run.add_argument("--config", required=True)

    sweep = sub.add_parser("sweep", help="sweep the kept dimension or beta")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--axis", required=True, choices=("dim", "beta"))
    sweep.add_argument("--grid", help="dims as 1..10 or 1,2,5; betas as 0.1,1,10")

    feats = sub.add_parser("features", help="dump the configured feature vectors as CSV")
    feats.add_argument("--config", required=True)
    feats.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        cfg = load_config(args.config)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.axis, args.grid)
        return cmd_features(cfg, args.out)
    except (ConfigError, DataFormatError, ShapeError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ProtocolError, DegenerateDataError, DegenerateConstraintError,
            InsufficientRankError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
