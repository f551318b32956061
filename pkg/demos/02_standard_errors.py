"""
Standard errors for cross-AUCs
==============================

Cross-AUCs are two-sample U-statistics, so the DeLong structural-component
estimator applies unchanged.  A stratified bootstrap gives a second opinion.
"""

import numpy as np

from xauc import GroupedScores
from xauc.inference import bootstrap_se, delong_se
from xauc.report import audit_report

rng = np.random.default_rng(1)
pos, neg = rng.normal(0.8, 1.0, 500), rng.normal(0.0, 1.0, 500)

est = delong_se(pos, neg)
boot = bootstrap_se(pos, neg, resamples=1000, seed=1)
lo, hi = est.interval()
print(f"AUC {est.point:.3f}, DeLong se {est.se:.4f}, 95% interval [{lo:.3f}, {hi:.3f}]")
print(f"bootstrap se {boot.se:.4f} (ratio {boot.se / est.se:.3f})")

# %%
# Standard errors shrink like one over root n.
for n in (100, 400, 1600):
    se = delong_se(rng.normal(0.8, 1.0, n), rng.normal(0.0, 1.0, n)).se
    print(f"n={n:5d} se={se:.4f}  se*sqrt(n)={se * np.sqrt(n):.3f}")

# %%
# A full audit attaches an SE to every AUC-type entry.  The SE of the
# cross-AUC gap adds the two variances, since the two terms share no samples.
cells = {
    ("a", 1): rng.normal(1.0, 1.0, 200),
    ("a", 0): rng.normal(0.0, 1.0, 300),
    ("b", 1): rng.normal(0.5, 1.0, 150),
    ("b", 0): rng.normal(-0.5, 1.0, 250),
}
report = audit_report(GroupedScores(cells, ["a", "b"]))
for key, value in report.flat().items():
    se = report.flat_se().get(key)
    print(f"{key:18s} {value:.3f}" + (f" ± {se:.3f}" if se is not None else ""))
