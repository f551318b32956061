"""Command-line entry point: ``xauc {audit,experiment,adjust,simulate}``.

Every flag can also come from an environment variable named ``XAUC_`` plus
the flag in upper snake case (``--label-col`` -> ``XAUC_LABEL_COL``); an
explicit flag wins.  Exit status: 0 success, 1 invalid input, 2 runtime
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from xauc import adjust, gaussian
from xauc.errors import XaucError
from xauc.metrics import decompose_auc, xauc, xroc_curve
from xauc.pipeline import (
    MODEL_KINDS,
    ExperimentConfig,
    curves_for,
    audit_scores,
    load_dataset,
    load_scored,
    run_experiment,
    split,
    train_model,
)
from xauc.models import score

ENV_PREFIX = "XAUC_"
log = logging.getLogger("xauc")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _env(dest: str, default=None):
    return os.environ.get(ENV_PREFIX + dest.upper(), default)


def _flag(p, name: str, default=None, **kw):
    dest = name.lstrip("-").replace("-", "_")
    if kw.get("action") == "store_true":
        raw = _env(dest)
        default = raw.lower() in ("1", "true", "yes") if raw is not None else False
    else:
        default = _env(dest, default)
    p.add_argument(name, dest=dest, default=default, **kw)


def _pair(text: str):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated numbers")
    return tuple(parts)


def _mapping(text: str | None):
    if not text:
        return None
    out = {}
    for item in text.split(","):
        raw, _, name = item.partition("=")
        out[raw.strip()] = name.strip()
    return out


def _data_flags(p):
    _flag(p, "--data", help="preprocessed numeric CSV")
    _flag(p, "--label-col", default="label")
    _flag(p, "--group-col", default="group")
    _flag(p, "--positive-label", help="label value meaning Y=1 (default: column already 0/1)")
    _flag(p, "--group-map", help="rename raw group values, e.g. 'African-American=black,Caucasian=white'")
    _flag(p, "--groups", help="comma-separated groups to audit, in report order (a,b)")
    _flag(p, "--model", default="logistic", choices=MODEL_KINDS)
    _flag(p, "--train-frac", default=0.7, type=float)
    _flag(p, "--seed", default=0, type=int)
    _flag(p, "--ties", default="strict", choices=("strict", "half"))
    _flag(p, "--include-group", action="store_true", help="add group indicators to the features")
    _flag(p, "--drop-cols", default="", help="comma-separated columns to ignore")
    _flag(p, "--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="xauc", description="Cross-group ranking audits of risk scores.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("audit", help="train on one split and audit the test scores")
    _data_flags(p)
    _flag(p, "--score-col", help="audit this precomputed score column instead of training")

    p = sub.add_parser("experiment", help="repeated split protocol with averaged curves")
    _data_flags(p)
    _flag(p, "--runs", default=50, type=int)
    _flag(p, "--grid-size", default=200, type=int)
    _flag(p, "--workers", default=1, type=int)

    p = sub.add_parser("adjust", help="post-process one group's scores to equalise cross-AUCs")
    _data_flags(p)
    _flag(p, "--score-col", help="adjust this precomputed score column instead of training")
    _flag(p, "--alpha-range", default="0,5", type=_pair)
    _flag(p, "--beta", default=-2.0, type=float)
    _flag(p, "--resolution", default=501, type=int)
    _flag(p, "--target-group", help="group to transform (default: the disadvantaged one)")

    p = sub.add_parser("simulate", help="Gaussian score models in closed form and by sampling")
    _flag(p, "--model-json", help="GaussianGroupModel JSON; default is the equal-AUC worked example")
    _flag(p, "--n", default=100000, type=int, help="samples per cell")
    _flag(p, "--seed", default=0, type=int)
    _flag(p, "--resolution", default=51, type=int)
    _flag(p, "--ties", default="strict", choices=("strict", "half"))
    _flag(p, "--out", help="output directory")
    return parser


# -- helpers ----------------------------------------------------------------


def _split_list(text):
    return tuple(x.strip() for x in text.split(",") if x.strip()) if text else ()


def _require(args, *names):
    for name in names:
        if getattr(args, name) in (None, ""):
            raise XaucError(f"--{name.replace('_', '-')} is required (or set {ENV_PREFIX}{name.upper()})")


def _write_json(obj, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _test_scores(args):
    """Scores, labels and groups to audit, plus where they came from."""
    groups = _split_list(args.groups) or None
    if getattr(args, "score_col", None):
        scores, labels, grp = load_scored(
            args.data, args.score_col, args.label_col, args.group_col, args.positive_label, _mapping(args.group_map)
        )
        return scores, labels, grp, groups, {"source": "score_col", "score_col": args.score_col}
    data = load_dataset(
        args.data,
        args.label_col,
        args.group_col,
        args.positive_label,
        _mapping(args.group_map),
        args.include_group,
        _split_list(args.drop_cols),
    )
    train, test = split(data, args.train_frac, args.seed)
    model = train_model(args.model, train)
    groups = groups or tuple(sorted(set(data.groups.tolist()), key=str))
    info = {"source": "trained", "model": args.model, "n_train": train.n, "n_test": test.n}
    if args.out:
        _write_json(model.to_dict(), Path(args.out) / "scorer.json")
    return score(model, test.features), test.labels, test.groups, groups, info


# -- commands ---------------------------------------------------------------


def cmd_audit(args) -> dict:
    _require(args, "data")
    scores, labels, grp, groups, info = _test_scores(args)
    g, report = audit_scores(scores, labels, grp, groups, args.ties)
    decomp = decompose_auc(g, args.ties)
    doc = {"info": info, "report": report.to_dict(), "decomposition_max_error": decomp.max_error}
    if args.out:
        out = Path(args.out)
        _write_json(doc, out / "report.json")
        (out / "curves").mkdir(parents=True, exist_ok=True)
        for kind, curve in sorted(curves_for(g).items()):
            (out / "curves" / f"{kind}.csv").write_text(curve.to_csv())
    return doc


def cmd_experiment(args) -> dict:
    _require(args, "data")
    config = ExperimentConfig(
        data_path=args.data,
        label_col=args.label_col,
        group_col=args.group_col,
        positive_label=args.positive_label,
        group_map=_mapping(args.group_map),
        groups=_split_list(args.groups) or None,
        model=args.model,
        train_frac=args.train_frac,
        n_runs=args.runs,
        base_seed=args.seed,
        ties=args.ties,
        grid_size=args.grid_size,
        out_dir=args.out,
        workers=args.workers,
        include_group=args.include_group,
        drop_cols=_split_list(args.drop_cols),
    )
    result = run_experiment(config)
    return {"aggregate": result.aggregate, "runs": len(result.runs)}


def cmd_adjust(args) -> dict:
    _require(args, "data")
    scores, labels, grp, groups, info = _test_scores(args)
    g, _ = audit_scores(scores, labels, grp, groups, args.ties, with_se=False)
    if len(g.groups) != 2:
        raise XaucError(f"adjust needs exactly two groups, got {list(g.groups)}; use --groups")
    a, b = g.groups
    target = args.target_group or adjust.disadvantaged_group(g, a, b, args.ties)
    if target not in g.groups:
        raise XaucError(f"--target-group {target!r} is not one of {list(g.groups)}")
    other = b if target == a else a
    res = adjust.fit_logistic_adjustment(
        g,
        target,
        other,
        alpha_range=args.alpha_range,
        beta=args.beta,
        resolution=args.resolution,
        ties=args.ties,
        with_se=True,
    )
    eqop = adjust.verify_eqop_identity(g, other, target, args.ties)
    doc = {"info": info, "logistic": res.to_dict(), "eqop": dataclasses.asdict(eqop)}
    if args.out:
        out = Path(args.out)
        _write_json(doc, out / "adjust.json")
        adjusted = adjust.apply_transform(g, res.transform)
        (out / "curves").mkdir(parents=True, exist_ok=True)
        for stage, grouped in (("before", g), ("after", adjusted)):
            for x, y in ((a, b), (b, a)):
                path = out / "curves" / f"xroc_{x}_{y}_{stage}.csv"
                path.write_text(xroc_curve(grouped, x, y).to_csv())
        grid = np.column_stack([res.grid_alpha, res.grid_objective])
        lines = ["alpha,abs_delta_xauc"] + [f"{al!r},{ob!r}" for al, ob in grid.tolist()]
        (out / "alpha_grid.csv").write_text("\n".join(lines) + "\n")
    return doc


def cmd_simulate(args) -> dict:
    if args.model_json:
        model = gaussian.GaussianGroupModel.from_dict(json.loads(Path(args.model_json).read_text()))
    else:
        found = gaussian.equal_auc_disparity_search(resolution=args.resolution)
        model = found.model()
    groups = model.groups
    g = gaussian.sample_scores(model, args.n, args.seed)
    closed, empirical = {}, {}
    for a in groups:
        for b in groups:
            key = f"{a}|{b}"
            closed[key] = gaussian.closed_form_xauc(model, a, b)
            empirical[key] = xauc(g, a, b, args.ties)
    doc = {"model": model.to_dict(), "closed_form_xauc": closed, "empirical_xauc": empirical, "n_per_cell": args.n}
    if len(groups) == 2:
        doc["closed_form_delta_xauc"] = gaussian.closed_form_delta_xauc(model, *groups)
    if not args.model_json:
        doc["search"] = dataclasses.asdict(found)
    if args.out:
        out = Path(args.out)
        _write_json(doc, out / "simulate.json")
        mu0, mu1, surface = gaussian.disparity_surface(resolution=21)
        lines = ["mu_b0,mu_b1,delta_xauc"]
        lines += [f"{mu0[i]!r},{mu1[j]!r},{surface[i, j]!r}" for i in range(mu0.size) for j in range(mu1.size)]
        (out / "surface.csv").write_text("\n".join(lines) + "\n")
    return doc


COMMANDS = {"audit": cmd_audit, "experiment": cmd_experiment, "adjust": cmd_adjust, "simulate": cmd_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as stop:  # --help, usage errors
        return int(stop.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        doc = COMMANDS[args.command](args)
    except (XaucError, ValueError, FileNotFoundError, KeyError) as err:
        print(f"xauc: error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001 - the CLI reports and maps to exit code 2
        print(f"xauc: failure: {type(err).__name__}: {err}", file=sys.stderr)
        return 2
    print(json.dumps(doc, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
