"""Empirical ranking metrics over group- and outcome-partitioned scores.

Everything here works on sorted score vectors and counts pairs with
``np.searchsorted``, so an AUC over ``m`` positives and ``n`` negatives costs
``O((m + n) log n)`` and the pair counts are exact integers.  The ratio is
formed once at the end, which makes the sort-based path bit-identical to
brute-force pair enumeration.

Notation: ``cell(a, y)`` holds the scores of group ``a`` with outcome ``y``.
``xauc(g, a, b)`` is the probability that a positive from ``a`` outranks a
negative from ``b``.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from xauc.errors import (
    EmptyClass,
    EmptyInput,
    LengthMismatch,
    MissingCell,
    NonFiniteScore,
    ScoreOutOfRange,
)

__all__ = [
    "TiePolicy",
    "ScoredSample",
    "GroupedScores",
    "CurveSeries",
    "AucDecomposition",
    "build_grouped",
    "pair_counts",
    "auc",
    "xauc",
    "delta_xauc",
    "roc_curve",
    "xroc_curve",
    "balanced_xauc",
    "balanced_xroc_curve",
    "decompose_auc",
    "conditional_xauc",
    "average_rank_disparity",
    "brier_score",
]


class TiePolicy(str, enum.Enum):
    """How a positive/negative pair with equal scores is counted."""

    STRICT = "strict"  # counts 0
    HALF = "half"  # counts 1/2

    @classmethod
    def coerce(cls, value: "TiePolicy | str") -> "TiePolicy":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown tie policy {value!r}; expected 'strict' or 'half'") from None


@dataclass(frozen=True)
class ScoredSample:
    score: float
    outcome: int
    group: Hashable


class GroupedScores:
    """Scores partitioned by ``(group, outcome)``, each cell sorted ascending.

    ``groups`` fixes the order in which groups are reported; it defaults to
    first-appearance order.  Cells are read-only arrays.
    """

    def __init__(self, cells: Mapping[tuple, Sequence[float]], groups: Sequence | None = None):
        normalized = {}
        for (grp, outcome), values in cells.items():
            if outcome not in (0, 1):
                raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
            arr = np.sort(np.asarray(values, dtype=float).ravel())
            bad = np.flatnonzero(~np.isfinite(arr))
            if bad.size:
                raise NonFiniteScore(int(bad[0]), float(arr[bad[0]]))
            arr.setflags(write=False)
            normalized[(grp, int(outcome))] = arr
        if groups is None:
            groups = list(dict.fromkeys(grp for grp, _ in normalized))
        else:
            groups = list(groups)
            unknown = {grp for grp, _ in normalized} - set(groups)
            if unknown:
                raise ValueError(f"cells reference undeclared groups {sorted(map(str, unknown))}")
        empty = np.empty(0)
        empty.setflags(write=False)
        for grp in groups:
            for outcome in (0, 1):
                normalized.setdefault((grp, outcome), empty)
        self._cells = normalized
        self.groups = tuple(groups)

    @classmethod
    def from_arrays(cls, scores, labels, groups, group_order: Sequence | None = None) -> "GroupedScores":
        scores = np.asarray(scores, dtype=float).ravel()
        labels = np.asarray(labels).ravel()
        groups = np.asarray(groups, dtype=object).ravel()
        if not (len(scores) == len(labels) == len(groups)):
            raise LengthMismatch(
                f"scores, labels and groups differ in length ({len(scores)}, {len(labels)}, {len(groups)})"
            )
        if len(scores) == 0:
            raise EmptyInput("no samples")
        bad = np.flatnonzero(~np.isfinite(scores))
        if bad.size:
            raise NonFiniteScore(int(bad[0]), float(scores[bad[0]]))
        labels = _as_binary(labels)
        order = list(group_order) if group_order is not None else list(dict.fromkeys(groups.tolist()))
        cells = {}
        for grp in order:
            in_group = groups == grp
            for outcome in (0, 1):
                cells[(grp, outcome)] = scores[in_group & (labels == outcome)]
        unknown = set(groups.tolist()) - set(order)
        if unknown:
            raise ValueError(f"samples carry undeclared groups {sorted(map(str, unknown))}")
        return cls(cells, order)

    @property
    def cells(self) -> dict:
        return dict(self._cells)

    def count(self, group, outcome: int) -> int:
        return len(self._cells.get((group, outcome), ()))

    def cell(self, group, outcome: int) -> np.ndarray:
        """Sorted scores for one cell; raises :class:`MissingCell` when empty."""
        arr = self._cells.get((group, outcome))
        if arr is None or arr.size == 0:
            raise MissingCell(group, outcome)
        return arr

    def pooled(self, outcome: int) -> np.ndarray:
        parts = [self._cells[(grp, outcome)] for grp in self.groups]
        return np.sort(np.concatenate(parts)) if parts else np.empty(0)

    def n_total(self) -> int:
        return sum(len(v) for v in self._cells.values())

    def to_arrays(self):
        """Flatten back to ``(scores, labels, groups)`` in cell order."""
        scores, labels, groups = [], [], []
        for grp in self.groups:
            for outcome in (0, 1):
                arr = self._cells[(grp, outcome)]
                scores.append(arr)
                labels.append(np.full(arr.size, outcome))
                groups.extend([grp] * arr.size)
        return np.concatenate(scores), np.concatenate(labels), np.asarray(groups, dtype=object)

    def replace_group(self, group, transform) -> "GroupedScores":
        """Copy with ``transform`` applied to both outcome cells of ``group``."""
        cells = dict(self._cells)
        for outcome in (0, 1):
            cells[(group, outcome)] = np.asarray(transform(np.asarray(cells[(group, outcome)])), dtype=float)
        return GroupedScores(cells, self.groups)

    def __eq__(self, other):
        if not isinstance(other, GroupedScores):
            return NotImplemented
        return self.groups == other.groups and all(
            np.array_equal(self._cells[k], other._cells[k]) for k in self._cells
        )

    def __repr__(self):
        counts = ", ".join(f"{k}: {len(v)}" for k, v in self._cells.items())
        return f"GroupedScores({counts})"


def _as_binary(labels: np.ndarray) -> np.ndarray:
    try:
        out = labels.astype(float)
    except (TypeError, ValueError):
        raise ValueError("labels must be 0/1") from None
    if not np.all((out == 0) | (out == 1)):
        raise ValueError("labels must be 0/1")
    return out.astype(int)


def build_grouped(samples: Iterable[ScoredSample], groups: Sequence | None = None) -> GroupedScores:
    samples = list(samples)
    if not samples:
        raise EmptyInput("no samples")
    for i, s in enumerate(samples):
        if not math.isfinite(s.score):
            raise NonFiniteScore(i, s.score)
    return GroupedScores.from_arrays(
        [s.score for s in samples],
        [s.outcome for s in samples],
        [s.group for s in samples],
        group_order=groups,
    )


# -- pair counting ----------------------------------------------------------


def pair_counts(pos, neg) -> tuple[int, int]:
    """Return ``(#pairs pos > neg, #pairs pos == neg)`` as exact integers."""
    pos = np.asarray(pos, dtype=float)
    neg = np.sort(np.asarray(neg, dtype=float))
    lo = np.searchsorted(neg, pos, side="left")
    hi = np.searchsorted(neg, pos, side="right")
    greater = int(lo.sum(dtype=np.int64))
    equal = int((hi - lo).sum(dtype=np.int64))
    return greater, equal


def _ratio(greater: int, equal: int, total: int, ties: TiePolicy) -> float:
    if ties is TiePolicy.HALF:
        return (2 * greater + equal) / (2 * total)
    return greater / total


def auc(pos, neg, ties: TiePolicy | str = TiePolicy.STRICT) -> float:
    """Fraction of positive/negative pairs ranked correctly.

    Args:
        pos: scores of the positive class (any order).
        neg: scores of the negative class (any order).
        ties: ``"strict"`` counts a tied pair as 0, ``"half"`` as 1/2.

    Raises:
        EmptyClass: if either side is empty.
    """
    ties = TiePolicy.coerce(ties)
    pos = np.asarray(pos, dtype=float).ravel()
    neg = np.asarray(neg, dtype=float).ravel()
    if pos.size == 0 or neg.size == 0:
        raise EmptyClass(f"AUC undefined with {pos.size} positives and {neg.size} negatives")
    greater, equal = pair_counts(pos, neg)
    return _ratio(greater, equal, pos.size * neg.size, ties)


def xauc(g: GroupedScores, a, b, ties: TiePolicy | str = TiePolicy.STRICT) -> float:
    """Probability that a positive of group ``a`` outranks a negative of group ``b``."""
    return auc(g.cell(a, 1), g.cell(b, 0), ties)


def delta_xauc(g: GroupedScores, a, b, ties: TiePolicy | str = TiePolicy.STRICT) -> float:
    """``xauc(a, b) - xauc(b, a)``; negative values mean ``a`` is disadvantaged."""
    # touch all four cells up front so the error names the first empty one
    for grp, outcome in ((a, 1), (b, 0), (b, 1), (a, 0)):
        g.cell(grp, outcome)
    return xauc(g, a, b, ties) - xauc(g, b, a, ties)


def balanced_xauc(g: GroupedScores, side: str, c, ties: TiePolicy | str = TiePolicy.STRICT) -> float:
    """Balanced cross-AUC for group ``c``.

    ``side="pooled_pos"`` ranks all positives against the negatives of ``c``
    (the negative-class variant, xAUC0).  ``side="pooled_neg"`` ranks the
    positives of ``c`` against all negatives (xAUC1).
    """
    pos, neg = _balanced_cells(g, side, c)
    return auc(pos, neg, ties)


def _balanced_cells(g: GroupedScores, side: str, c):
    if side == "pooled_pos":
        neg = g.cell(c, 0)
        pos = g.pooled(1)
        if pos.size == 0:
            raise EmptyClass("no positives in any group")
    elif side == "pooled_neg":
        pos = g.cell(c, 1)
        neg = g.pooled(0)
        if neg.size == 0:
            raise EmptyClass("no negatives in any group")
    else:
        raise ValueError(f"side must be 'pooled_pos' or 'pooled_neg', got {side!r}")
    return pos, neg


# -- curves -----------------------------------------------------------------


@dataclass(frozen=True)
class CurveSeries:
    """Threshold sweep of (negative exceedance rate, positive exceedance rate).

    Points run from the ``theta = +inf`` sentinel at (0, 0) down to the
    ``theta = -inf`` sentinel at (1, 1).
    """

    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    kind: str = "ROC"

    def area(self) -> float:
        """Trapezoidal area; equals the half-tie AUC of the underlying cells."""
        dx = np.diff(self.x)
        return math.fsum(dx * (self.y[1:] + self.y[:-1]) / 2.0)

    def __len__(self):
        return len(self.x)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "x": [float(v) for v in self.x],
            "y": [float(v) for v in self.y],
            "theta": [_theta_to_json(t) for t in self.theta],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: Mapping) -> "CurveSeries":
        return cls(
            np.asarray(d["x"], dtype=float),
            np.asarray(d["y"], dtype=float),
            np.asarray([float(t) for t in d["theta"]], dtype=float),
            d.get("kind", "ROC"),
        )

    def to_csv(self, fh=None) -> str | None:
        """Write ``x,y,theta`` rows to ``fh`` or return them as a string."""
        buf = fh if fh is not None else io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "y", "theta"])
        for xv, yv, tv in zip(self.x, self.y, self.theta):
            writer.writerow([repr(float(xv)), repr(float(yv)), repr(float(tv))])
        return buf.getvalue() if fh is None else None

    @classmethod
    def from_csv(cls, text: str, kind: str = "ROC") -> "CurveSeries":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(
            np.array([float(r["x"]) for r in rows]),
            np.array([float(r["y"]) for r in rows]),
            np.array([float(r["theta"]) for r in rows]),
            kind,
        )


def _theta_to_json(t: float):
    if math.isinf(t):
        return "inf" if t > 0 else "-inf"
    return float(t)


def _sweep(pos, neg, kind: str) -> CurveSeries:
    pos = np.sort(np.asarray(pos, dtype=float))
    neg = np.sort(np.asarray(neg, dtype=float))
    if pos.size == 0 or neg.size == 0:
        raise EmptyClass("curve needs both positives and negatives")
    distinct = np.unique(np.concatenate([pos, neg]))[::-1]
    # Nothing exceeds the largest score, so its point duplicates the +inf sentinel.
    theta = np.concatenate([[np.inf], distinct[1:], [-np.inf]])
    x = (neg.size - np.searchsorted(neg, theta, side="right")) / neg.size
    y = (pos.size - np.searchsorted(pos, theta, side="right")) / pos.size
    return CurveSeries(x, y, theta, kind)


def roc_curve(pos, neg) -> CurveSeries:
    return _sweep(pos, neg, "ROC")


def xroc_curve(g: GroupedScores, a, b) -> CurveSeries:
    """Curve of group-``a`` TPR against group-``b`` FPR over shared thresholds."""
    return _sweep(g.cell(a, 1), g.cell(b, 0), f"xROC({a},{b})")


def balanced_xroc_curve(g: GroupedScores, side: str, c) -> CurveSeries:
    pos, neg = _balanced_cells(g, side, c)
    label = "xROC0" if side == "pooled_pos" else "xROC1"
    return _sweep(pos, neg, f"{label}({c})")


# -- decompositions and diagnostics -----------------------------------------


@dataclass(frozen=True)
class AucDecomposition:
    """Pooled AUC next to its three group-weighted reconstructions."""

    auc: float
    via_pairs: float
    via_positive_balanced: float
    via_negative_balanced: float
    weights_pos: dict = field(default_factory=dict)
    weights_neg: dict = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return max(
            abs(self.via_pairs - self.auc),
            abs(self.via_positive_balanced - self.auc),
            abs(self.via_negative_balanced - self.auc),
        )


def decompose_auc(g: GroupedScores, ties: TiePolicy | str = TiePolicy.STRICT) -> AucDecomposition:
    """Rebuild pooled AUC from cross-group and balanced AUCs.

    Weights are the empirical class-conditional group shares.  Groups with
    an empty cell get weight 0 on that side and drop out of the sums.
    """
    ties = TiePolicy.coerce(ties)
    pos_all, neg_all = g.pooled(1), g.pooled(0)
    if pos_all.size == 0 or neg_all.size == 0:
        raise EmptyClass("pooled AUC needs both classes")
    pooled = auc(pos_all, neg_all, ties)

    w_pos = {c: g.count(c, 1) / pos_all.size for c in g.groups}
    w_neg = {c: g.count(c, 0) / neg_all.size for c in g.groups}
    with_pos = [c for c in g.groups if w_pos[c] > 0]
    with_neg = [c for c in g.groups if w_neg[c] > 0]

    via_pairs = math.fsum(
        w_neg[b] * w_pos[a] * xauc(g, a, b, ties) for b in with_neg for a in with_pos
    )
    via_pos = math.fsum(w_pos[a] * auc(g.cell(a, 1), neg_all, ties) for a in with_pos)
    via_neg = math.fsum(w_neg[b] * auc(pos_all, g.cell(b, 0), ties) for b in with_neg)
    return AucDecomposition(pooled, via_pairs, via_pos, via_neg, w_pos, w_neg)


def conditional_xauc(g: GroupedScores, a, b, ties: TiePolicy | str = TiePolicy.STRICT) -> np.ndarray:
    """Per-negative ranking accuracy.

    One entry per score in ``cell(b, 0)`` (ascending score order): the share of
    ``cell(a, 1)`` ranked above it.  The mean of the vector is ``xauc(g, a, b)``.
    """
    ties = TiePolicy.coerce(ties)
    pos = g.cell(a, 1)
    neg = g.cell(b, 0)
    above = pos.size - np.searchsorted(pos, neg, side="right")
    if ties is TiePolicy.HALF:
        tied = np.searchsorted(pos, neg, side="right") - np.searchsorted(pos, neg, side="left")
        return (above + 0.5 * tied) / pos.size
    return above / pos.size


def average_rank_disparity(g: GroupedScores, a, b) -> float:
    """``E[F0_b(R1_a)] - E[F0_a(R1_b)]`` with the ``<=`` empirical CDF.

    On tie-free data this is exactly the strict ``delta_xauc``.  With ties the
    two differ: each expectation also counts tied pairs, so the gap is bounded
    by the tied-pair share of the corresponding cells.
    """
    pos_a, neg_b = g.cell(a, 1), g.cell(b, 0)
    pos_b, neg_a = g.cell(b, 1), g.cell(a, 0)
    first = np.searchsorted(neg_b, pos_a, side="right").sum(dtype=np.int64) / (pos_a.size * neg_b.size)
    second = np.searchsorted(neg_a, pos_b, side="right").sum(dtype=np.int64) / (pos_b.size * neg_a.size)
    return float(first - second)


def brier_score(scores, labels) -> float:
    """Mean squared gap between probabilistic scores and 0/1 outcomes."""
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels, dtype=float).ravel()
    if scores.shape != labels.shape:
        raise LengthMismatch(f"{scores.size} scores vs {labels.size} labels")
    if scores.size == 0:
        raise EmptyInput("no scores")
    if np.any(~np.isfinite(scores)) or np.any((scores < 0) | (scores > 1)):
        raise ScoreOutOfRange("Brier score needs scores in [0, 1]")
    return math.fsum((scores - labels) ** 2) / scores.size
