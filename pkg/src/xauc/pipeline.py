"""Repeated train/test audits of a trained scorer on a tabular CSV.

Each run splits the data with seed ``base_seed + run``, trains the chosen
model on the training part, scores the test part and audits it.  Curves are
interpolated onto a shared FPR grid and averaged; run 0 doubles as the
representative split for per-instance outputs.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from xauc.errors import DegenerateSplit, EmptyInput, MissingCell, MissingColumn, NonNumericFeature
from xauc.metrics import (
    CurveSeries,
    GroupedScores,
    TiePolicy,
    balanced_xroc_curve,
    conditional_xauc,
    roc_curve,
    xroc_curve,
)
from xauc.models import Scorer, TabularDataset, score, train_logistic, train_rankboost
from xauc.report import AuditReport, audit_report

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "RunResult",
    "AveragedCurve",
    "load_dataset",
    "split_indices",
    "split",
    "load_scored",
    "train_model",
    "audit_scores",
    "interpolate_curve",
    "average_curves",
    "curves_for",
    "run_single",
    "run_experiment",
    "write_outputs",
    "MODEL_KINDS",
]

log = logging.getLogger(__name__)

MODEL_KINDS = ("logistic", "rankboost", "rankboost-cal")


# -- loading and splitting --------------------------------------------------


def _labels_match(value: str, positive: str) -> bool:
    try:
        return float(value) == float(positive)
    except ValueError:
        return value.strip() == str(positive).strip()


def load_dataset(
    path,
    label_col: str,
    group_col: str,
    positive_label=None,
    group_map: Mapping | None = None,
    include_group: bool = False,
    drop_cols: Sequence[str] = (),
) -> TabularDataset:
    """Read a preprocessed numeric CSV with a header row.

    Every column other than the label, group and ``drop_cols`` is a
    feature and must parse as a number.  With ``positive_label`` the
    outcome is ``label == positive_label``; without it the label column
    must already hold 0/1.  ``group_map`` renames raw group values.  The
    group column only enters the features when ``include_group`` is set
    (as one indicator column per group value).
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyInput(f"{path} is empty") from None
        rows = [r for r in reader if r]
    for col in (label_col, group_col):
        if col not in header:
            raise MissingColumn(f"column {col!r} not in {path.name} (columns: {header[:10]}...)")
    li, gi = header.index(label_col), header.index(group_col)
    skip = {li, gi} | {header.index(c) for c in drop_cols if c in header}
    feat_idx = [j for j in range(len(header)) if j not in skip]
    if not rows:
        raise EmptyInput(f"{path} has no data rows")

    X = np.empty((len(rows), len(feat_idx)))
    labels = np.empty(len(rows), dtype=int)
    groups = []
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ValueError(f"row {i + 1} has {len(row)} fields, expected {len(header)}")
        for k, j in enumerate(feat_idx):
            try:
                X[i, k] = float(row[j])
            except ValueError:
                raise NonNumericFeature(i + 1, header[j], row[j]) from None
            if not math.isfinite(X[i, k]):
                raise NonNumericFeature(i + 1, header[j], row[j])
        raw = row[li].strip()
        if positive_label is not None:
            labels[i] = int(_labels_match(raw, positive_label))
        else:
            try:
                val = float(raw)
            except ValueError:
                raise ValueError(f"row {i + 1}: label {raw!r} is not 0/1; pass positive_label") from None
            if val not in (0.0, 1.0):
                raise ValueError(f"row {i + 1}: label {raw!r} is not 0/1; pass positive_label")
            labels[i] = int(val)
        grp = row[gi].strip()
        groups.append(group_map.get(grp, grp) if group_map else grp)

    names = [header[j] for j in feat_idx]
    groups = np.asarray(groups, dtype=object)
    if include_group:
        values = sorted(set(groups.tolist()))
        X = np.hstack([X, np.stack([(groups == v).astype(float) for v in values], axis=1)])
        names += [f"{group_col}={v}" for v in values]
    data = TabularDataset(X, labels, groups, names)
    log.info("loaded %s: n=%d p=%d groups=%s", path.name, data.n, data.p, data.group_counts())
    return data


def split_indices(n: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0 < fraction < 1:
        raise ValueError("train fraction must lie strictly between 0 and 1")
    n_train = int(round(fraction * n))
    if n_train < 1 or n_train > n - 1:
        raise DegenerateSplit(f"fraction {fraction} of {n} rows leaves an empty side")
    perm = np.random.default_rng(seed).permutation(n)
    return perm[:n_train], perm[n_train:]


def split(data: TabularDataset, fraction: float = 0.7, seed: int = 0):
    """Uniform random (not stratified) train/test split."""
    train_idx, test_idx = split_indices(data.n, fraction, seed)
    return data.subset(train_idx), data.subset(test_idx)


# -- configuration ----------------------------------------------------------


@dataclass
class ExperimentConfig:
    data_path: str
    label_col: str
    group_col: str
    positive_label: str | None = None
    group_map: dict | None = None
    groups: tuple | None = None  # audited groups, in report order
    model: str = "logistic"
    train_frac: float = 0.7
    n_runs: int = 50
    base_seed: int = 0
    ties: str = "strict"
    grid_size: int = 200
    out_dir: str | None = None
    workers: int = 1
    include_group: bool = False
    reg_strength: float = 1.0
    rankboost_rounds: int = 100
    drop_cols: tuple = ()

    def __post_init__(self):
        if not 0 < self.train_frac < 1:
            raise ValueError("train_frac must lie in (0, 1)")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        if self.model not in MODEL_KINDS:
            raise ValueError(f"model must be one of {MODEL_KINDS}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        self.ties = TiePolicy.coerce(self.ties).value
        if self.groups is not None:
            self.groups = tuple(self.groups)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["groups"] = list(self.groups) if self.groups is not None else None
        d["drop_cols"] = list(self.drop_cols)
        d.pop("out_dir")
        d.pop("workers")  # never affects results
        return d

    def load(self) -> TabularDataset:
        return load_dataset(
            self.data_path,
            self.label_col,
            self.group_col,
            self.positive_label,
            self.group_map,
            self.include_group,
            self.drop_cols,
        )


def load_scored(path, score_col: str, label_col: str, group_col: str, positive_label=None, group_map=None):
    """Read precomputed scores: returns ``(scores, labels, groups)``."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    with path.open(newline="") as fh:
        header = [h.strip() for h in next(csv.reader(fh), [])]
    if score_col not in header:
        raise MissingColumn(f"column {score_col!r} not in {path.name}")
    others = [c for c in header if c not in (score_col, label_col, group_col)]
    data = load_dataset(path, label_col, group_col, positive_label, group_map, drop_cols=others)
    return data.features[:, 0], data.labels, data.groups


def train_model(kind: str, data: TabularDataset, reg_strength: float = 1.0, rounds: int = 100) -> Scorer:
    if kind == "logistic":
        return train_logistic(data, reg_strength=reg_strength)
    if kind == "rankboost":
        return train_rankboost(data, rounds=rounds)
    if kind in ("rankboost-cal", "rankboost_calibrated"):
        return train_rankboost(data, rounds=rounds, calibrate=True)
    raise ValueError(f"unknown model kind {kind!r}")


def audit_scores(scores, labels, groups, group_order=None, ties="strict", with_se=True):
    """Audit precomputed scores; rows outside ``group_order`` are ignored."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    groups = np.asarray(groups, dtype=object)
    if group_order is not None:
        keep = np.isin(groups, list(group_order))
        scores, labels, groups = scores[keep], labels[keep], groups[keep]
    g = GroupedScores.from_arrays(scores, labels, groups, group_order)
    return g, audit_report(g, ties, with_se=with_se)


# -- curves -----------------------------------------------------------------


def interpolate_curve(curve: CurveSeries, grid) -> np.ndarray:
    """TPR of ``curve`` at each FPR in ``grid``.

    At a vertical run of vertices the top one is used, then the value is
    linear up to the next vertex; beyond the last vertex it stays flat.
    """
    grid = np.asarray(grid, dtype=float)
    x, y = curve.x, curve.y
    i = np.searchsorted(x, grid, side="right") - 1
    i = np.clip(i, 0, x.size - 1)
    nxt = np.minimum(i + 1, x.size - 1)
    dx = x[nxt] - x[i]
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(dx > 0, (grid - x[i]) / dx, 0.0)
    return y[i] + frac * (y[nxt] - y[i])


@dataclass
class AveragedCurve:
    kind: str
    grid: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    isotonic_deviation: float = 0.0

    def to_csv(self) -> str:
        lines = ["grid_fpr,mean_tpr,se_tpr"]
        lines += [f"{g!r},{m!r},{s!r}" for g, m, s in zip(self.grid.tolist(), self.mean.tolist(), self.se.tolist())]
        return "\n".join(lines) + "\n"


def average_curves(curves: Sequence[CurveSeries], fpr_grid) -> AveragedCurve:
    """Pointwise mean and standard error of the mean across curves.

    The mean is forced nondecreasing with a running maximum; the largest
    correction is kept in ``isotonic_deviation``.
    """
    if not curves:
        raise EmptyInput("no curves to average")
    grid = np.asarray(fpr_grid, dtype=float)
    if np.any(np.diff(grid) < 0) or grid.min() < 0 or grid.max() > 1:
        raise ValueError("fpr grid must be sorted within [0, 1]")
    stack = np.stack([interpolate_curve(c, grid) for c in curves])
    mean = stack.mean(axis=0)
    if len(curves) > 1:
        se = stack.std(axis=0, ddof=1) / math.sqrt(len(curves))
    else:
        se = np.zeros_like(mean)
    clipped = np.maximum.accumulate(mean)
    return AveragedCurve(curves[0].kind, grid, clipped, se, float(np.max(clipped - mean)))


# -- runs -------------------------------------------------------------------


@dataclass
class RunResult:
    index: int
    report: AuditReport
    curves: dict
    grouped: GroupedScores
    conditional: dict = field(default_factory=dict)


def curves_for(g: GroupedScores) -> dict:
    """Exact ROC, cross-ROC and balanced cross-ROC curves keyed by file stem."""
    curves = {"roc_pooled": roc_curve(g.pooled(1), g.pooled(0))}
    for c in g.groups:
        curves[f"roc_{c}"] = roc_curve(g.cell(c, 1), g.cell(c, 0))
        curves[f"xroc0_{c}"] = balanced_xroc_curve(g, "pooled_pos", c)
        curves[f"xroc1_{c}"] = balanced_xroc_curve(g, "pooled_neg", c)
    for a in g.groups:
        for b in g.groups:
            if a != b:
                curves[f"xroc_{a}_{b}"] = xroc_curve(g, a, b)
    return curves


def run_single(data: TabularDataset, config: ExperimentConfig, run: int) -> RunResult:
    train, test = split(data, config.train_frac, config.base_seed + run)
    model = train_model(config.model, train, config.reg_strength, config.rankboost_rounds)
    scores = score(model, test.features)
    groups = config.groups or tuple(sorted(set(data.groups.tolist()), key=str))
    try:
        g, report = audit_scores(scores, test.labels, test.groups, groups, config.ties)
    except MissingCell as err:
        raise MissingCell(err.group, err.outcome, f"run {run} test split") from None
    conditional = {}
    for a in g.groups:
        for b in g.groups:
            if a != b:
                conditional[(a, b)] = conditional_xauc(g, a, b, config.ties)
    return RunResult(run, report, curves_for(g), g, conditional)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: list
    aggregate: dict
    curves: dict
    representative: RunResult

    def histograms(self, bins: int = 20) -> dict:
        edges = np.linspace(0.0, 1.0, bins + 1)
        return {
            pair: np.histogram(values, bins=edges)[0]
            for pair, values in self.representative.conditional.items()
        }


def _aggregate(reports: Sequence[AuditReport]) -> dict:
    flats = [r.flat() for r in reports]
    ses = [r.flat_se() for r in reports]
    out = {}
    for key in flats[0]:
        vals = np.array([f[key] for f in flats])
        entry = {
            "mean": math.fsum(vals) / vals.size,
            "sd": float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
        }
        entry["se_mean"] = entry["sd"] / math.sqrt(vals.size)
        if all(key in s for s in ses) and ses:
            entry["delong_se"] = math.fsum(s[key] for s in ses) / len(ses)
        out[key] = entry
    return out


def run_experiment(config: ExperimentConfig, data: TabularDataset | None = None) -> ExperimentResult:
    """Run the repeated-split protocol; writes outputs when ``config.out_dir`` is set.

    Runs are independent and seeded by index, so ``config.workers`` only
    changes wall time.  A run whose test split misses a (group, outcome)
    cell aborts the experiment naming the run.
    """
    if data is None:
        data = config.load()

    def one(run: int) -> RunResult:
        return run_single(data, config, run)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            runs = list(pool.map(one, range(config.n_runs)))
    else:
        runs = [one(k) for k in range(config.n_runs)]

    grid = np.linspace(0.0, 1.0, config.grid_size)
    curves = {kind: average_curves([r.curves[kind] for r in runs], grid) for kind in runs[0].curves}
    result = ExperimentResult(config, runs, _aggregate([r.report for r in runs]), curves, runs[0])
    if config.out_dir:
        write_outputs(result, config.out_dir)
    return result


# -- output -----------------------------------------------------------------


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _safe(name) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in str(name))


def write_outputs(result: ExperimentResult, out_dir) -> None:
    """Write ``report.json``, ``curves/``, ``conditional/`` and ``scores/``.

    Files are written in a fixed order with deterministic float formatting,
    so identical configurations give byte-identical trees.
    """
    out = Path(out_dir)
    for sub in ("curves", "conditional", "scores"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    hist = result.histograms()
    doc = {
        "config": result.config.to_dict(),
        "aggregate": result.aggregate,
        "runs": [r.report.to_dict() for r in result.runs],
        "representative_run": result.representative.index,
        "conditional_histograms": {
            f"{a}|{b}": counts.tolist() for (a, b), counts in hist.items()
        },
        "isotonic_deviation": {k: c.isotonic_deviation for k, c in result.curves.items()},
    }
    _dump_json(doc, out / "report.json")
    for kind, curve in sorted(result.curves.items()):
        (out / "curves" / f"{_safe(kind)}.csv").write_text(curve.to_csv())
    rep = result.representative
    for (a, b), values in sorted(rep.conditional.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1]))):
        neg = rep.grouped.cell(b, 0)
        lines = ["negative_score,accuracy"] + [f"{s!r},{v!r}" for s, v in zip(neg.tolist(), values.tolist())]
        (out / "conditional" / f"{_safe(a)}_{_safe(b)}.csv").write_text("\n".join(lines) + "\n")
    for c in rep.grouped.groups:
        for y in (0, 1):
            vals = rep.grouped.cell(c, y) if rep.grouped.count(c, y) else np.empty(0)
            text = "score\n" + "".join(f"{v!r}\n" for v in vals.tolist())
            (out / "scores" / f"{_safe(c)}_{y}.csv").write_text(text)
    log.info("wrote outputs to %s", os.fspath(out))
