"""
Repeated train/test audits
==========================

The experiment harness trains on repeated 70/30 splits, audits each test
split and averages metrics and curves.  Run ``k`` uses seed ``base_seed + k``,
so results do not depend on the worker count.
"""

import tempfile
from pathlib import Path

import numpy as np

from xauc.pipeline import ExperimentConfig, run_experiment

rng = np.random.default_rng(5)
n = 2000
group = rng.choice(["a", "b"], n)
label = rng.integers(0, 2, n)
x = rng.normal(label * 1.0 - 0.4 * (group == "b"), 1.0)

workdir = Path(tempfile.mkdtemp())
rows = ["x,noise,outcome,grp"] + [
    f"{xi!r},{e!r},{y},{c}" for xi, e, y, c in zip(x.tolist(), rng.normal(size=n).tolist(), label, group)
]
(workdir / "data.csv").write_text("\n".join(rows) + "\n")

config = ExperimentConfig(
    data_path=str(workdir / "data.csv"),
    label_col="outcome",
    group_col="grp",
    n_runs=10,
    workers=2,
    out_dir=str(workdir / "out"),
)
result = run_experiment(config)

# %%
# Aggregates hold the mean over runs, the across-run spread and the mean
# per-run DeLong standard error.
for key in ("auc:a", "auc:b", "xauc:a|b", "xauc:b|a", "delta_xauc:a|b"):
    entry = result.aggregate[key]
    print(f"{key:15s} {entry['mean']:.3f}  sd {entry['sd']:.3f}  DeLong se {entry['delong_se']:.3f}")

# %%
# Averaged curves live on a shared FPR grid.
curve = result.curves["xroc_a_b"]
print(f"xROC(a, b) at FPR 0.1: {np.interp(0.1, curve.grid, curve.mean):.3f} ± {np.interp(0.1, curve.grid, curve.se):.3f}")

# %%
# Everything written to disk:
for path in sorted((workdir / "out").rglob("*.*")):
    print(path.relative_to(workdir))
