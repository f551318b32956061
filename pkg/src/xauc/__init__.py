"""Cross-group ranking audits (xAUC / xROC) of predictive risk scores."""

from xauc.errors import (
    EmptyClass,
    EmptyInput,
    MissingCell,
    NonFiniteScore,
    XaucError,
)
from xauc.metrics import (
    CurveSeries,
    GroupedScores,
    ScoredSample,
    TiePolicy,
    auc,
    average_rank_disparity,
    balanced_xauc,
    brier_score,
    build_grouped,
    conditional_xauc,
    decompose_auc,
    delta_xauc,
    roc_curve,
    xauc,
    xroc_curve,
)
from xauc.inference import VarianceEstimate, bootstrap_se, delong_se
from xauc.report import AuditReport, audit_report

__version__ = "0.1.0"
