"""Standard errors for AUC-type statistics.

``delong_se`` uses the structural components of the two-sample U-statistic;
``bootstrap_se`` is an independent resampling estimate used to validate it.
Both work for any positive/negative pairing, so cross-group AUCs are covered
by passing ``cell(a, 1)`` and ``cell(b, 0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from xauc.errors import InsufficientSamples
from xauc.metrics import TiePolicy, auc, pair_counts

__all__ = ["VarianceEstimate", "structural_components", "delong_se", "bootstrap_se"]


@dataclass(frozen=True)
class VarianceEstimate:
    point: float
    se: float
    method: str
    n_pos: int
    n_neg: int
    ties_affect_point: bool = False

    def interval(self, z: float = 1.959963984540054) -> tuple[float, float]:
        """Normal-approximation interval ``point +/- z * se`` clipped to [0, 1]."""
        return max(0.0, self.point - z * self.se), min(1.0, self.point + z * self.se)


def structural_components(pos, neg) -> tuple[np.ndarray, np.ndarray]:
    """Half-tie placement values.

    Returns ``(v10, v01)`` where ``v10[i]`` is the mean kernel of positive ``i``
    against all negatives and ``v01[j]`` the mean kernel of negative ``j``
    against all positives (kernel 1 / 0.5 / 0 for > / = / <).
    """
    pos = np.asarray(pos, dtype=float).ravel()
    neg = np.asarray(neg, dtype=float).ravel()
    neg_sorted = np.sort(neg)
    pos_sorted = np.sort(pos)
    lo = np.searchsorted(neg_sorted, pos, side="left")
    hi = np.searchsorted(neg_sorted, pos, side="right")
    v10 = (lo + 0.5 * (hi - lo)) / neg.size
    below = np.searchsorted(pos_sorted, neg, side="left")
    above_or_eq = np.searchsorted(pos_sorted, neg, side="right")
    v01 = ((pos.size - above_or_eq) + 0.5 * (above_or_eq - below)) / pos.size
    return v10, v01


def delong_se(pos, neg, ties: TiePolicy | str = TiePolicy.STRICT) -> VarianceEstimate:
    """DeLong standard error of the AUC of ``pos`` against ``neg``.

    The point estimate follows ``ties``; the variance always uses the
    half-tie kernel.  ``ties_affect_point`` is set when the two conventions
    give different point estimates.
    """
    ties = TiePolicy.coerce(ties)
    pos = np.asarray(pos, dtype=float).ravel()
    neg = np.asarray(neg, dtype=float).ravel()
    if pos.size < 2 or neg.size < 2:
        raise InsufficientSamples(f"DeLong needs >= 2 per class, got {pos.size} and {neg.size}")
    v10, v01 = structural_components(pos, neg)
    var = np.var(v10, ddof=1) / pos.size + np.var(v01, ddof=1) / neg.size
    _, equal = pair_counts(pos, neg)
    return VarianceEstimate(
        point=auc(pos, neg, ties),
        se=math.sqrt(max(float(var), 0.0)),
        method="delong",
        n_pos=int(pos.size),
        n_neg=int(neg.size),
        ties_affect_point=ties is TiePolicy.STRICT and equal > 0,
    )


def bootstrap_se(
    pos,
    neg,
    ties: TiePolicy | str = TiePolicy.STRICT,
    resamples: int = 1000,
    seed: int = 0,
) -> VarianceEstimate:
    """Stratified bootstrap standard error.

    Positives and negatives are resampled separately with replacement.  Each
    resample draws from its own generator spawned off ``seed``, so the result
    does not depend on evaluation order.
    """
    ties = TiePolicy.coerce(ties)
    pos = np.asarray(pos, dtype=float).ravel()
    neg = np.asarray(neg, dtype=float).ravel()
    if resamples < 100:
        raise InsufficientSamples(f"need at least 100 resamples, got {resamples}")
    if pos.size == 0 or neg.size == 0:
        raise InsufficientSamples("bootstrap needs both classes")
    children = np.random.SeedSequence(seed).spawn(resamples)
    stats = np.empty(resamples)
    for k, child in enumerate(children):
        rng = np.random.default_rng(child)
        stats[k] = auc(
            pos[rng.integers(0, pos.size, pos.size)],
            neg[rng.integers(0, neg.size, neg.size)],
            ties,
        )
    return VarianceEstimate(
        point=auc(pos, neg, ties),
        se=float(np.std(stats, ddof=1)),
        method="bootstrap",
        n_pos=int(pos.size),
        n_neg=int(neg.size),
    )
