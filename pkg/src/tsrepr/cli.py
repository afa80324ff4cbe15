"""Command-line interface: one subcommand per pipeline stage plus ``report``.

Examples::

    tsrepr extract --data m5=m5_long.csv --out run/
    tsrepr report --data m5=m5.csv --labels m5=m5_labels.csv --data shop=shop.csv --out run/
    tsrepr report --config run/report.json      # replay a previous run
"""
import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .dataset import DataError
from .embedding import Embedding2D, EmbeddingError
from .pipeline import (
    DatasetSpec,
    RunConfig,
    StageError,
    load_dataset,
    load_datasets,
    read_embedding,
    read_features,
    read_selection,
    read_targets,
    run_report,
    stage_classify,
    stage_coverage,
    stage_embed,
    stage_extract,
    stage_select,
    stage_targets,
)

log = logging.getLogger("tsrepr")


def _pair(text):
    name, sep, path = text.partition("=")
    if not sep or not name or not path:
        raise argparse.ArgumentTypeError(f"expected NAME=PATH, got {text!r}")
    return name, path


def _common(p):
    p.add_argument("--config", help="JSON run configuration (a previous report.json also works)")
    p.add_argument("--data", type=_pair, action="append", metavar="NAME=PATH",
                   help="dataset CSV; repeat for several datasets")
    p.add_argument("--labels", type=_pair, action="append", metavar="NAME=PATH",
                   help="label CSV (id column + one column per classification task)")
    p.add_argument("--format", choices=("long", "wide"), help="layout of the --data files")
    p.add_argument("--label-cols", help="comma-separated task columns of wide files")
    p.add_argument("--id-col")
    p.add_argument("--date-col", help="date column; pass '' to use file order")
    p.add_argument("--value-col")
    p.add_argument("--frequency", type=int, help="seasonal period of the daily data")
    p.add_argument("--levels", help="aggregation levels, e.g. d,w,m")
    p.add_argument("--catalog", help="feature catalog: table_a, validation or all")
    p.add_argument("--reference", help="dataset used for feature selection (default: first)")
    p.add_argument("--compare", help="comma-separated datasets to embed (default: all)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--k-neighbors", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--cluster-on", choices=("quality", "values"))
    p.add_argument("--relief-sample", type=int)
    p.add_argument("--holdout", type=int)
    p.add_argument("--target-mode", choices=("error", "forecast"))
    p.add_argument("--perplexity", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--grid", type=int, help="grid cells per side (default 30)")
    p.add_argument("--joint-grid", action="store_true", default=None,
                   help="one grid over all datasets instead of one per pair")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="tsrepr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tsrepr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "extract": "compute the feature matrix of every dataset",
        "classify": "demand-class table and profile of every dataset",
        "targets": "forecasting-error targets of the reference dataset",
        "select": "run the selection cascade on the reference dataset",
        "embed": "t-SNE instance space of the compared datasets",
        "coverage": "pairwise miscoverage and NOR from an embedding",
        "report": "run every stage and write report.json",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        _common(p)
        if name == "coverage":
            p.add_argument("--embedding", type=_pair, action="append", metavar="TAG=PATH",
                           help="embedding CSV whose rows all get TAG; repeat to combine files")
    return parser


def config_from_args(args):
    """Configuration file (if any) overridden by explicitly given flags."""
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.data:
        fmt = args.format or "long"
        cols = tuple(c for c in (args.label_cols or "").split(",") if c)
        cfg = replace(cfg, datasets=tuple(DatasetSpec(n, p, format=fmt, label_cols=cols)
                                          for n, p in args.data))
    elif args.format or args.label_cols:
        cols = tuple(c for c in (args.label_cols or "").split(",") if c)
        cfg = replace(cfg, datasets=tuple(
            replace(d, format=args.format or d.format, label_cols=cols or d.label_cols)
            for d in cfg.datasets))
    for name, path in args.labels or ():
        if name not in [d.name for d in cfg.datasets]:
            raise StageError("config", f"--labels given for unknown dataset {name!r}", code=2)
        cfg = replace(cfg, datasets=tuple(replace(d, labels=path) if d.name == name else d
                                          for d in cfg.datasets))
    over = {k: getattr(args, k) for k in (
        "id_col", "value_col", "frequency", "levels", "catalog", "reference", "alpha",
        "k_neighbors", "threshold", "cluster_on", "relief_sample", "holdout", "target_mode",
        "perplexity", "iterations", "grid", "joint_grid", "seed", "threads", "out")}
    if args.compare:
        over["compare"] = tuple(c for c in args.compare.split(",") if c)
    cfg = cfg.updated(**over)
    if args.date_col is not None:
        cfg = replace(cfg, date_col=args.date_col or None)
    return cfg


def _embedding_from_files(pairs):
    parts = [Embedding2D.from_csv(path, tag=tag) for tag, path in pairs]
    return Embedding2D([s for e in parts for s in e.series_ids],
                       np.vstack([e.points for e in parts]),
                       [t for e in parts for t in e.dataset_tags])


def dispatch(args):
    if args.command == "coverage":
        cfg = config_from_args(args).validate(require_data=False)
        emb = (_embedding_from_files(args.embedding) if args.embedding
               else read_embedding(cfg, "coverage"))
        stage_coverage(cfg, emb)
        return cfg
    cfg = config_from_args(args).validate()
    ref = cfg.reference_name
    if args.command == "extract":
        stage_extract(cfg, load_datasets(cfg))
    elif args.command == "classify":
        stage_classify(cfg, load_datasets(cfg))
    elif args.command == "targets":
        stage_targets(cfg, {ref: load_dataset(cfg, ref)})
    elif args.command == "select":
        m = read_features(cfg, [ref], "select")[ref]
        bank = read_targets(cfg, ref, "select")
        stage_select(cfg, load_dataset(cfg, ref), m, bank)
    elif args.command == "embed":
        selected = read_selection(cfg, "embed")
        stage_embed(cfg, read_features(cfg, cfg.compare_names, "embed"), selected)
    elif args.command == "report":
        run_report(cfg)
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = dispatch(args)
    except StageError as exc:
        print(f"tsrepr {args.command}: error {exc}", file=sys.stderr)
        return exc.code
    except (DataError, EmbeddingError) as exc:
        print(f"tsrepr {args.command}: error [{args.command}] {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"tsrepr {args.command}: error [{args.command}] I/O failure: {exc}\n"
              "  hint: check that --out is writable", file=sys.stderr)
        return 4
    log.info("%s finished; outputs in %s", args.command, cfg.out_dir)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
