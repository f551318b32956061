"""
Cross-group ranking accuracy
============================

A risk score can rank well inside each group and still rank one group's
negatives systematically above the other group's positives.  The cross-AUC
``xauc(g, a, b)`` is the chance that a random positive from group ``a``
outranks a random negative from group ``b``.
"""

import numpy as np

from xauc import GroupedScores, auc, decompose_auc, delta_xauc, xauc
from xauc.metrics import balanced_xauc, conditional_xauc, xroc_curve

rng = np.random.default_rng(0)

# Group "b" is shifted down as a whole: same spread, lower scores.
cells = {
    ("a", 1): rng.normal(1.0, 1.0, 400),
    ("a", 0): rng.normal(0.0, 1.0, 600),
    ("b", 1): rng.normal(0.4, 1.0, 300),
    ("b", 0): rng.normal(-0.6, 1.0, 700),
}
g = GroupedScores(cells, ["a", "b"])

# %%
# Within-group AUCs are close, because each group is shifted as a block.
for grp in g.groups:
    print(f"AUC[{grp}] = {auc(g.cell(grp, 1), g.cell(grp, 0)):.3f}")

# %%
# The cross-group numbers are not: group b's positives rarely beat group
# a's negatives.
print(f"xAUC(a, b) = {xauc(g, 'a', 'b'):.3f}")
print(f"xAUC(b, a) = {xauc(g, 'b', 'a'):.3f}")
print(f"delta      = {delta_xauc(g, 'a', 'b'):+.3f}")

# %%
# Balanced variants pool one side across groups, which shows whether
# the disparity falls on positives or on negatives.
for grp in g.groups:
    print(
        grp,
        f"vs all positives {balanced_xauc(g, 'pooled_pos', grp):.3f}",
        f"vs all negatives {balanced_xauc(g, 'pooled_neg', grp):.3f}",
    )

# %%
# The pooled AUC is a weighted mix of the cross-group terms.  All three
# reconstructions agree with it to rounding error.
d = decompose_auc(g)
print(f"pooled {d.auc:.6f}; pairs {d.via_pairs:.6f}; max error {d.max_error:.1e}")

# %%
# Per-negative view: for each negative in group b, the share of group-a
# positives ranked above it.  Its mean is the cross-AUC.
per_negative = conditional_xauc(g, "a", "b")
print(f"mean {per_negative.mean():.3f}; 10th percentile {np.quantile(per_negative, 0.1):.3f}")

# %%
# The cross-ROC curve behind xAUC(a, b): TPR of group a against FPR of
# group b at shared thresholds.  Its area is the half-tie cross-AUC.
curve = xroc_curve(g, "a", "b")
print(f"{curve.x.size} vertices, area {curve.area():.3f}")
print(curve.to_csv().splitlines()[:3])
