"""Post-processing one group's scores to shrink the cross-AUC gap.

Two monotone adjustments are provided:

* a logistic map ``sigmoid(alpha * s + beta)`` on one group, with ``alpha``
  chosen to minimise ``|delta xAUC|``;
* a quantile map that sends one group's positive-class score distribution
  onto another's, which equalises true positive rates at every threshold.
  After it, ``delta xAUC`` equals the difference of the within-group AUCs;
  :func:`verify_eqop_identity` measures how closely the empirical version
  follows that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from xauc.errors import MissingGroup
from xauc.metrics import GroupedScores, TiePolicy, auc, delta_xauc
from xauc.models import sigmoid
from xauc.report import AuditReport, audit_report

__all__ = [
    "MonotoneTransform",
    "apply_transform",
    "LogisticAdjustment",
    "fit_logistic_adjustment",
    "golden_section_min",
    "eqop_transform",
    "EqopCheck",
    "verify_eqop_identity",
    "disadvantaged_group",
]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class MonotoneTransform:
    """A nondecreasing score map applied to ``target_group`` only.

    ``kind`` is ``"identity"``, ``"logistic"`` (uses ``alpha``, ``beta``) or
    ``"quantile_map"`` (piecewise-linear through ``table_x -> table_y``,
    constant beyond the ends).
    """

    kind: str
    target_group: object = None
    alpha: float = 1.0
    beta: float = 0.0
    table_x: tuple = ()
    table_y: tuple = ()
    reference_group: object = None

    def __post_init__(self):
        if self.kind not in ("identity", "logistic", "quantile_map"):
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if self.kind == "logistic" and self.alpha < 0:
            raise ValueError("logistic transform needs alpha >= 0 to stay monotone")
        if self.kind == "quantile_map":
            xs, ys = np.asarray(self.table_x), np.asarray(self.table_y)
            if xs.size == 0 or xs.size != ys.size:
                raise ValueError("quantile map needs equally long, nonempty tables")
            if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) < 0):
                raise ValueError("quantile map tables must be increasing in x and nondecreasing in y")

    def __call__(self, scores):
        s = np.asarray(scores, dtype=float)
        if self.kind == "logistic":
            return sigmoid(self.alpha * s + self.beta)
        if self.kind == "quantile_map":
            return np.interp(s, self.table_x, self.table_y)
        return s

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "target_group": str(self.target_group)}
        if self.kind == "logistic":
            d.update(alpha=self.alpha, beta=self.beta)
        elif self.kind == "quantile_map":
            d.update(
                reference_group=str(self.reference_group),
                table_x=list(self.table_x),
                table_y=list(self.table_y),
            )
        return d


def apply_transform(g: GroupedScores, t: MonotoneTransform) -> GroupedScores:
    if t.target_group not in g.groups:
        raise MissingGroup(f"group {t.target_group!r} not present (have {list(g.groups)})")
    if t.kind == "identity":
        return g
    return g.replace_group(t.target_group, t)


# -- logistic adjustment ----------------------------------------------------


def golden_section_min(f, lo: float, hi: float, tol: float = 1e-6, max_iter: int = 200):
    """Golden-section search on ``[lo, hi]``.

    Returns every ``(x, f(x))`` evaluated, so callers can pick their own
    winner; on a piecewise-constant objective the bracket still shrinks to a
    point but the final point need not be the best one seen.
    """
    seen = []

    def ev(x):
        y = f(x)
        seen.append((x, y))
        return y

    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = ev(c), ev(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        # "<=" keeps the left sub-bracket on ties, drifting toward smaller x
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = ev(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = ev(d)
    return seen


def disadvantaged_group(g: GroupedScores, a, b, ties=TiePolicy.STRICT):
    """The group on the losing side of ``delta xAUC``."""
    return a if delta_xauc(g, a, b, ties) < 0 else b


@dataclass
class LogisticAdjustment:
    alpha: float
    beta: float
    objective: float  # |delta xAUC| after adjustment
    target_group: object
    other_group: object
    transform: MonotoneTransform
    before: AuditReport
    after: AuditReport
    grid_alpha: np.ndarray = field(repr=False, default=None)
    grid_objective: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "objective": self.objective,
            "target_group": str(self.target_group),
            "other_group": str(self.other_group),
            "before": self.before.to_dict(),
            "after": self.after.to_dict(),
        }


def fit_logistic_adjustment(
    g: GroupedScores,
    target_group,
    other_group=None,
    alpha_range=(0.0, 5.0),
    beta: float = -2.0,
    resolution: int = 501,
    ties: TiePolicy | str = TiePolicy.STRICT,
    refine: bool = True,
    with_se: bool = False,
) -> LogisticAdjustment:
    """Choose ``alpha`` so that ``sigmoid(alpha * s + beta)`` on one group
    minimises ``|delta xAUC|`` against another.

    The objective only changes when a cross-group pair swaps order, so it is
    piecewise constant in ``alpha``.  A uniform grid locates the best
    region, golden-section search refines inside the neighbouring grid
    bracket, and the smallest ``alpha`` among the best evaluated points wins.
    """
    ties = TiePolicy.coerce(ties)
    if target_group not in g.groups:
        raise MissingGroup(f"group {target_group!r} not present")
    if other_group is None:
        others = [c for c in g.groups if c != target_group]
        if len(others) != 1:
            raise ValueError("other_group is required when there are more than two groups")
        other_group = others[0]
    # fail early on missing cells
    delta_xauc(g, target_group, other_group, ties)

    def objective(alpha: float) -> float:
        t = MonotoneTransform("logistic", target_group, alpha=alpha, beta=beta)
        return abs(delta_xauc(apply_transform(g, t), target_group, other_group, ties))

    lo, hi = alpha_range
    grid = np.linspace(lo, hi, resolution)
    values = np.array([objective(a) for a in grid])
    evaluated = list(zip(grid.tolist(), values.tolist()))
    if refine and resolution > 1:
        k = int(np.argmin(values))
        left, right = grid[max(k - 1, 0)], grid[min(k + 1, resolution - 1)]
        if right > left:
            evaluated += golden_section_min(objective, float(left), float(right))
    best_alpha, best_val = min(evaluated, key=lambda av: (av[1], av[0]))

    t = MonotoneTransform("logistic", target_group, alpha=float(best_alpha), beta=beta)
    return LogisticAdjustment(
        alpha=float(best_alpha),
        beta=beta,
        objective=float(best_val),
        target_group=target_group,
        other_group=other_group,
        transform=t,
        before=audit_report(g, ties, with_se=with_se),
        after=audit_report(apply_transform(g, t), ties, with_se=with_se),
        grid_alpha=grid,
        grid_objective=values,
    )


# -- equal-opportunity quantile map -----------------------------------------


def eqop_transform(g: GroupedScores, reference_group, moved_group) -> MonotoneTransform:
    """Map ``moved_group`` scores so its positives match the reference positives.

    The ``i``-th smallest of ``n`` moved positives goes to the reference
    positives' quantile at level ``(i + 0.5) / n`` (Hazen plotting position,
    so a group mapped onto itself is fixed at every order statistic).
    Repeated moved scores share the mean of their targets; values between
    knots are interpolated linearly and values outside are clamped.
    """
    ref = g.cell(reference_group, 1)
    moved = g.cell(moved_group, 1)
    levels = (np.arange(moved.size) + 0.5) / moved.size
    targets = np.quantile(ref, levels, method="hazen")
    xs, start = np.unique(moved, return_index=True)
    ys = np.add.reduceat(targets, start) / np.diff(np.append(start, moved.size))
    ys = np.maximum.accumulate(ys)  # guards against rounding in the block means
    return MonotoneTransform(
        "quantile_map",
        moved_group,
        table_x=tuple(xs.tolist()),
        table_y=tuple(ys.tolist()),
        reference_group=reference_group,
    )


@dataclass(frozen=True)
class EqopCheck:
    residual: float  # delta_after - (auc_b - auc_a)
    delta_after: float
    auc_a: float
    auc_b: float
    discreteness_bound: float  # largest single-point mass among the four cells
    flagged: bool


def _max_cdf_step(values: np.ndarray) -> float:
    _, counts = np.unique(values, return_counts=True)
    return counts.max() / values.size


def verify_eqop_identity(
    g: GroupedScores,
    a,
    b,
    ties: TiePolicy | str = TiePolicy.STRICT,
    tol: float = 0.005,
) -> EqopCheck:
    """Apply the quantile map to group ``b`` (reference ``a``) and compare
    the resulting ``delta xAUC(a, b)`` with ``AUC_b - AUC_a``.

    ``flagged`` marks residuals above ``tol``; on small or heavily tied
    samples that is expected rather than an error.
    """
    ties = TiePolicy.coerce(ties)
    cells = [g.cell(a, 1), g.cell(a, 0), g.cell(b, 1), g.cell(b, 0)]
    auc_a = auc(cells[0], cells[1], ties)
    auc_b = auc(cells[2], cells[3], ties)
    moved = apply_transform(g, eqop_transform(g, a, b))
    after = delta_xauc(moved, a, b, ties)
    residual = after - (auc_b - auc_a)
    return EqopCheck(
        residual=float(residual),
        delta_after=float(after),
        auc_a=auc_a,
        auc_b=auc_b,
        discreteness_bound=float(max(_max_cdf_step(c) for c in cells)),
        flagged=bool(abs(residual) > tol),
    )
