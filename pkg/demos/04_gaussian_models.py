"""
Gaussian score models in closed form
====================================

When scores are normal within each (group, outcome) cell, every cross-AUC
is a normal CDF of a standardised mean gap.  Two groups can have the same
within-group AUC and still differ sharply across groups.
"""

from xauc.gaussian import (
    REFERENCE_GROUP_A,
    GaussianGroupModel,
    closed_form_auc,
    closed_form_delta_xauc,
    closed_form_xauc,
    disparity_surface,
    equal_auc_disparity_search,
    sample_scores,
)
from xauc.metrics import xauc

m = GaussianGroupModel.two_group(REFERENCE_GROUP_A, (0.1, 0.6, 0.25, 0.25))
print(f"closed form xAUC(a, b) = {closed_form_xauc(m, 'a', 'b'):.4f}")
g = sample_scores(m, 100_000, seed=3)
print(f"sampled     xAUC(a, b) = {xauc(g, 'a', 'b'):.4f}")

# %%
# Search group b's parameters for the largest cross-AUC gap while keeping
# its within-group AUC equal to group a's.
best = equal_auc_disparity_search(resolution=51)
worst_case = best.model()
print(best)
print(
    f"AUC a {closed_form_auc(worst_case, 'a'):.4f} = AUC b {closed_form_auc(worst_case, 'b'):.4f};",
    f"delta xAUC {closed_form_delta_xauc(worst_case, 'a', 'b'):+.4f}",
)

# %%
# Requiring a "peaked" group b (positives above 0.5, negatives below)
# rules out the degenerate corner.
print(equal_auc_disparity_search(resolution=51, peaked=True))

# %%
# The gap as a function of group b's two means, variances held at 0.25.
mu0, mu1, surface = disparity_surface(resolution=5)
print("mu_b1 ->  ", " ".join(f"{v:6.2f}" for v in mu1))
for i, row in enumerate(surface):
    print(f"mu_b0={mu0[i]:.2f}", " ".join(f"{v:+.3f}" for v in row))
