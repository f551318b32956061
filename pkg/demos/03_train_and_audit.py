"""
Training a scorer and auditing it
=================================

Fit logistic regression and calibrated RankBoost on a synthetic table,
score a held-out split and audit both models.
"""

import numpy as np

from xauc.models import TabularDataset, score, train_logistic, train_rankboost
from xauc.pipeline import audit_scores, split

rng = np.random.default_rng(2)
n = 3000
group = rng.choice(["a", "b"], n, p=[0.6, 0.4])
label = rng.integers(0, 2, n)
# the informative feature is offset for group b, the second one is noise
x1 = rng.normal(label * 1.2 - 0.5 * (group == "b"), 1.0)
x2 = rng.normal(size=n)
data = TabularDataset(np.c_[x1, x2], label, group, ["signal", "noise"])
train, test = split(data, 0.7, seed=0)

# %%
# Logistic regression: L2 penalty, standardised features, Newton steps.
logit = train_logistic(train)
print("logistic coefficients", np.round(logit.params["coef"], 3), "converged:", logit.info["converged"])

# %%
# RankBoost with Platt scaling, so scores are probabilities and the Brier
# score is meaningful.
boost = train_rankboost(train, rounds=50, calibrate=True)
print(f"rankboost: {len(boost.params['stumps'])} stumps, final rank loss {boost.info['loss_history'][-1]:.3f}")

# %%
for name, model in (("logistic", logit), ("rankboost", boost)):
    _, report = audit_scores(score(model, test.features), test.labels, test.groups, ("a", "b"))
    print(
        f"{name:9s} AUC a/b {report.auc['a']:.3f}/{report.auc['b']:.3f}",
        f"xAUC(a,b) {report.xauc[('a', 'b')]:.3f}  xAUC(b,a) {report.xauc[('b', 'a')]:.3f}",
        f"Brier a {report.brier['a']:.3f}",
    )

# %%
# Fitted scorers serialise to JSON and score identically after reloading.
from xauc.models import Scorer

again = Scorer.from_json(boost.to_json())
print("round trip identical:", np.array_equal(score(again, test.features), score(boost, test.features)))
