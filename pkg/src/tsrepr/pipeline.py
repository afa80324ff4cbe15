"""Run configuration and the end-to-end stages behind the command line.

Every stage reads its inputs from, and writes its outputs to, the run's
output directory, so stages can be rerun one at a time. ``run_report``
chains all of them and emits a single JSON report.
"""
import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import backend
from ._io import atomic_write_json, atomic_write_text
from .benchmarks import METHODS, TargetBank, make_targets
from .coverage import CoverageError, coverage_matrix, coverage_report, occupancy_csv, pairwise_grids
from .dataset import LEVELS, attach_labels, load_long_csv, load_wide_csv, parse_levels
from .demand_class import ADI_CUTOFF, CV2_CUTOFF, UnclassifiableError, classify, demand_stats, profile
from .embedding import Embedding2D, TsneConfig, tsne
from .features import FeatureMatrix, extract_matrix, get_catalog, stack_rows
from .features.catalog import CATALOGS
from .selection import run_cascade
from .svg import render_scatter

log = logging.getLogger(__name__)

# fixed counter per stage; a stage seed is derived from (seed, counter)
STAGE_COUNTER = {"select": 1, "embed": 2}


class StageError(RuntimeError):
    """A stage failed; carries the stage name and a remediation hint."""

    def __init__(self, stage, message, hint=None, code=1):
        super().__init__(message)
        self.stage = stage
        self.hint = hint
        self.code = code

    def __str__(self):
        msg = f"[{self.stage}] {self.args[0]}"
        return msg + (f"\n  hint: {self.hint}" if self.hint else "")


class MissingUpstream(StageError):
    def __init__(self, stage, path, producer):
        super().__init__(stage, f"missing upstream artifact {path}",
                         f"run `tsrepr {producer}` with the same --out first", code=3)


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    path: str
    labels: str | None = None
    format: str = "long"
    label_cols: tuple = ()


@dataclass(frozen=True)
class RunConfig:
    datasets: tuple = ()
    id_col: str = "id"
    date_col: str | None = "date"
    value_col: str = "value"
    frequency: int = 7
    levels: tuple = LEVELS
    catalog: str = "all"
    reference: str | None = None
    compare: tuple | None = None
    alpha: float = 0.05
    k_neighbors: int = 10
    threshold: float = 0.2
    cluster_on: str = "quality"
    relief_sample: int | None = None
    holdout: int | None = None
    target_mode: str = "error"
    perplexity: float = 30.0
    iterations: int = 1000
    grid: int = 30
    joint_grid: bool = False
    skip_unclassifiable: bool = True
    seed: int = 0
    threads: int = 1
    out: str = "tsrepr_out"

    def validate(self, require_data=True):
        """Raise StageError("config", ...) on any invalid setting."""
        def bad(msg):
            raise StageError("config", msg, code=2)

        names = [d.name for d in self.datasets]
        if require_data and not names:
            bad("no datasets given (use --data NAME=PATH)")
        if len(set(names)) != len(names):
            bad("dataset names must be unique")
        for d in self.datasets:
            if d.format not in ("long", "wide"):
                bad(f"dataset {d.name}: format must be 'long' or 'wide'")
        if self.reference is not None and self.reference not in names:
            bad(f"reference {self.reference!r} is not a dataset name")
        for c in self.compare or ():
            if c not in names:
                bad(f"compare entry {c!r} is not a dataset name")
        try:
            if not parse_levels(self.levels):
                bad("at least one aggregation level is required")
        except ValueError as exc:
            bad(str(exc))
        if self.catalog not in CATALOGS:
            bad(f"catalog must be one of {sorted(CATALOGS)}")
        if not 0 < self.alpha < 1:
            bad("alpha must lie in (0, 1)")
        if self.k_neighbors < 1:
            bad("k_neighbors must be positive")
        if not 0 < self.threshold <= 2:
            bad("threshold must lie in (0, 2]")
        if self.cluster_on not in ("quality", "values"):
            bad("cluster_on must be 'quality' or 'values'")
        if self.relief_sample is not None and self.relief_sample < 1:
            bad("relief_sample must be positive")
        if self.holdout is not None and self.holdout < 1:
            bad("holdout must be positive")
        if self.target_mode not in ("error", "forecast"):
            bad("target_mode must be 'error' or 'forecast'")
        if self.perplexity <= 0:
            bad("perplexity must be positive")
        if self.iterations < 250:
            bad("iterations must be at least 250")
        if self.grid < 1:
            bad("grid must be positive")
        if self.frequency < 1 or self.threads < 1:
            bad("frequency and threads must be positive")
        return self

    @property
    def reference_name(self):
        return self.reference or self.datasets[0].name

    @property
    def compare_names(self):
        return tuple(self.compare) if self.compare else tuple(d.name for d in self.datasets)

    @property
    def out_dir(self):
        return Path(self.out)

    def dataset(self, name):
        return next(d for d in self.datasets if d.name == name)

    def stage_seed(self, stage):
        ss = np.random.SeedSequence([self.seed, STAGE_COUNTER[stage]])
        return int(ss.generate_state(1)[0])

    def tsne_config(self):
        return TsneConfig(perplexity=self.perplexity, iterations=self.iterations,
                          seed=self.stage_seed("embed"))

    def to_dict(self):
        d = asdict(self)
        d["datasets"] = [asdict(s) for s in self.datasets]
        for s in d["datasets"]:
            s["label_cols"] = list(s["label_cols"])
        d["levels"] = list(parse_levels(self.levels))
        d["compare"] = list(self.compare) if self.compare else None
        return d

    @classmethod
    def from_dict(cls, d):
        """Build a config from a mapping (a report's ``config`` block works too)."""
        d = dict(d.get("config", d))
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise StageError("config", f"unknown config key(s): {', '.join(unknown)}", code=2)
        if "datasets" in d:
            d["datasets"] = tuple(
                DatasetSpec(**{**s, "label_cols": tuple(s.get("label_cols", ()))})
                for s in d["datasets"])
        if "levels" in d:
            d["levels"] = parse_levels(d["levels"])
        if d.get("compare") is not None:
            d["compare"] = tuple(d["compare"])
        return cls(**d)

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise StageError("config", f"cannot read {path}: {exc}", code=2) from None

    def updated(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


# ---------------------------------------------------------------------------
# artifact paths
# ---------------------------------------------------------------------------


def features_path(cfg, name):
    return cfg.out_dir / f"features_{name}.csv"


def classes_path(cfg, name):
    return cfg.out_dir / f"classes_{name}.csv"


def targets_path(cfg, name):
    return cfg.out_dir / f"targets_{name}.csv"


def _require(stage, path, producer):
    if not Path(path).is_file():
        raise MissingUpstream(stage, path, producer)
    return path


def plain(obj):
    """Convert numpy containers/scalars to JSON-safe Python (NaN -> None)."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------


def load_dataset(cfg, name):
    entry = cfg.dataset(name)
    try:
        if entry.format == "wide":
            ds = load_wide_csv(entry.path, cfg.id_col, label_cols=entry.label_cols,
                               frequency=cfg.frequency, name=name)
        else:
            ds = load_long_csv(entry.path, cfg.id_col, cfg.date_col, cfg.value_col,
                               cfg.frequency, name=name)
        if entry.labels:
            ds = attach_labels(ds, entry.labels, cfg.id_col)
    except OSError as exc:
        raise StageError("load", f"dataset {name}: {exc}", "check the --data path", code=4) from None
    except ValueError as exc:
        raise StageError("load", f"dataset {name}: {exc}",
                         "check --id-col/--date-col/--value-col and the file contents",
                         code=4) from None
    return ds


def load_datasets(cfg, names=None):
    return {n: load_dataset(cfg, n) for n in (names or [d.name for d in cfg.datasets])}


def stage_extract(cfg, datasets):
    catalog = get_catalog(cfg.catalog, parse_levels(cfg.levels))
    out = {}
    for name, ds in datasets.items():
        m = extract_matrix(ds, catalog, parse_levels(cfg.levels), cfg.threads)
        m.to_csv(features_path(cfg, name))
        out[name] = m
    return out


def stage_classify(cfg, datasets):
    """Demand-class table per dataset plus the percentage profile."""
    result = {}
    for name, ds in datasets.items():
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["series_id", "adi", "cv2", "demand_class"])
        for s in ds:
            st = demand_stats(s.values)
            try:
                cls = classify(st).value
            except UnclassifiableError:
                cls = ""
            w.writerow([s.id, repr(st.adi), repr(st.cv2), cls])
        atomic_write_text(classes_path(cfg, name), buf.getvalue())
        try:
            pct, skipped = profile(ds, skip_unclassifiable=cfg.skip_unclassifiable)
        except UnclassifiableError as exc:
            raise StageError("classify", f"dataset {name}: {exc}",
                             "set skip_unclassifiable to leave such series out", code=5) from None
        result[name] = {"n_series": len(ds), "n_unclassifiable": skipped, "percent": pct,
                        "cutoffs": {"adi": ADI_CUTOFF, "cv2": CV2_CUTOFF}}
    atomic_write_json(cfg.out_dir / "demand_profile.json", plain(result))
    return result


def stage_targets(cfg, datasets):
    out = {}
    for name, ds in datasets.items():
        bank = make_targets(ds, cfg.holdout, cfg.target_mode)
        bank.to_csv(targets_path(cfg, name))
        out[name] = bank
    return out


def _columns_by_key(m, keys):
    by_key = {f.key: f for f in m.feature_ids}
    missing = [k for k in keys if k not in by_key]
    if missing:
        raise StageError("embed", f"feature matrix lacks selected column(s): {', '.join(missing)}",
                         "re-extract features with the same catalog and levels", code=5)
    return m.select_columns([by_key[k] for k in keys])


def stage_select(cfg, ref_ds, ref_matrix, bank):
    if not ref_ds.tasks:
        raise StageError("select", f"reference dataset {ref_ds.name} has no classification tasks",
                         "attach labels with --labels NAME=PATH (one column per task)", code=5)
    try:
        res = run_cascade(ref_matrix, ref_ds, bank, cfg.alpha, cfg.k_neighbors, cfg.threshold,
                          cfg.cluster_on, cfg.relief_sample, cfg.stage_seed("select"))
    except ValueError as exc:
        raise StageError("select", str(exc), code=5) from None
    except RuntimeError as exc:
        raise StageError("select", str(exc), "relax --alpha or supply more informative labels",
                         code=5) from None
    audit = plain({"reference": ref_ds.name, **res.audit})
    atomic_write_json(cfg.out_dir / "selection.json", audit)
    return audit


def stage_embed(cfg, matrices, selected):
    """Pooled z-scored t-SNE of the compared datasets on the selected features.

    Selected features with a missing cell anywhere in the pooled matrix are
    left out (every series stays in the space) and listed in the info.
    """
    parts, tags = [], []
    for name in cfg.compare_names:
        m = _columns_by_key(matrices[name], selected)
        parts.append(m)
        tags += [name] * len(m.series_ids)
    pooled = stack_rows(parts)
    complete = ~np.isnan(pooled.values).any(axis=0)
    dropped = [f.key for f, ok in zip(pooled.feature_ids, complete) if not ok]
    if not complete.any():
        raise StageError("embed", "every selected feature has missing cells in the compared datasets",
                         "check that the compared series are long enough for the selected levels",
                         code=5)
    used = [f.key for f, ok in zip(pooled.feature_ids, complete) if ok]
    x = pooled.values[:, complete]
    sd = x.std(axis=0, ddof=1)
    sd[~(sd > 0)] = 1.0
    x = (x - x.mean(axis=0)) / sd
    try:
        emb = tsne(x, cfg.tsne_config(), pooled.series_ids, tags)
    except RuntimeError as exc:
        raise StageError("embed", str(exc), "lower --perplexity or add series", code=5) from None
    emb.to_csv(cfg.out_dir / "embedding.csv")
    render_scatter(emb, cfg.out_dir / "instance_space.svg")
    info = {"n_points": {n: tags.count(n) for n in cfg.compare_names}, "dropped_features": dropped,
            "features": used, "kl_trace": [[i, v] for i, v in emb.kl_trace],
            "perplexity": cfg.perplexity, "iterations": cfg.iterations,
            "seed": cfg.stage_seed("embed")}
    atomic_write_json(cfg.out_dir / "embedding_info.json", plain(info))
    return emb, info


def stage_coverage(cfg, emb):
    reports = []
    try:
        for a, b, g in pairwise_grids(emb, cfg.grid, cfg.joint_grid):
            reports.append(coverage_report(g, a, b))
            occupancy_csv(g, a, b, cfg.out_dir / f"occupancy_{a}_{b}.csv")
    except CoverageError as exc:
        raise StageError("coverage", str(exc), "the embedding needs two or more dataset tags",
                         code=5) from None
    result = {"n_side": cfg.grid, "joint_grid": cfg.joint_grid,
              "pairs": [r.as_dict() for r in reports], **coverage_matrix(reports)}
    atomic_write_json(cfg.out_dir / "coverage.json", plain(result))
    return result


# ---------------------------------------------------------------------------
# stage entry points reading upstream artifacts
# ---------------------------------------------------------------------------


def read_features(cfg, names, stage):
    return {n: FeatureMatrix.from_csv(_require(stage, features_path(cfg, n), "extract"))
            for n in names}


def read_selection(cfg, stage):
    path = _require(stage, cfg.out_dir / "selection.json", "select")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)["selected"]


def read_targets(cfg, name, stage):
    return TargetBank.from_csv(_require(stage, targets_path(cfg, name), "targets"))


def read_embedding(cfg, stage):
    return Embedding2D.from_csv(_require(stage, cfg.out_dir / "embedding.csv", "embed"))


# ---------------------------------------------------------------------------
# full run
# ---------------------------------------------------------------------------


@dataclass
class _Clock:
    laps: dict = field(default_factory=dict)

    def run(self, name, fn, *args):
        t0 = time.perf_counter()
        out = fn(*args)
        self.laps[name] = time.perf_counter() - t0
        return out


def run_report(cfg):
    """All stages in sequence; writes ``report.json`` and returns the report.

    Everything except the ``timing`` block is a deterministic function of
    the configuration and input files.
    """
    cfg.validate()
    clock = _Clock()
    ref = cfg.reference_name
    names = list(dict.fromkeys([ref, *cfg.compare_names]))
    datasets = clock.run("load", load_datasets, cfg, names)
    matrices = clock.run("extract", stage_extract, cfg, datasets)
    profiles = clock.run("classify", stage_classify, cfg, datasets)
    banks = clock.run("targets", stage_targets, cfg, {ref: datasets[ref]})
    audit = clock.run("select", stage_select, cfg, datasets[ref], matrices[ref], banks[ref])
    emb, info = clock.run("embed", stage_embed, cfg, matrices, audit["selected"])
    cov = clock.run("coverage", stage_coverage, cfg, emb)
    report = {
        "tool": {"name": "tsrepr", "version": __version__, "backend": backend()},
        "config": cfg.to_dict(),
        "datasets": {n: {"n_series": len(d), "tasks": sorted(d.tasks),
                         "min_length": min(len(s) for s in d), "max_length": max(len(s) for s in d)}
                     for n, d in datasets.items()},
        "demand_profiles": profiles,
        "targets": {"reference": ref, "methods": list(METHODS),
                    "excluded": int((~banks[ref].complete_rows()).sum())},
        "selection": audit,
        "embedding": info,
        "coverage": cov,
        "timing": {k: round(v, 6) for k, v in clock.laps.items()},
    }
    report = plain(report)
    atomic_write_json(cfg.out_dir / "report.json", report)
    return report


__all__ = ["RunConfig", "DatasetSpec", "StageError", "MissingUpstream", "run_report",
           "load_datasets", "stage_extract", "stage_classify", "stage_targets", "stage_select",
           "stage_embed", "stage_coverage", "read_features", "read_selection", "read_targets",
           "read_embedding", "plain"]
