"""The per-group audit bundle: AUC, cross-group AUCs, balanced variants, Brier."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from xauc.inference import delong_se
from xauc.metrics import (
    GroupedScores,
    TiePolicy,
    auc,
    brier_score,
    pair_counts,
)

__all__ = ["AuditReport", "audit_report", "METRIC_NAMES"]

METRIC_NAMES = ("auc", "xauc", "delta_xauc", "xauc0", "xauc1", "brier")


@dataclass
class AuditReport:
    """Metric bundle for one scored population.

    ``xauc`` is keyed by ordered pairs ``(a, b)`` with ``a != b``;
    ``delta_xauc`` by pairs in group order.  ``se`` mirrors the metric dicts
    (``None`` when standard errors were not requested).
    """

    groups: tuple
    ties: str
    auc: dict
    xauc: dict
    delta_xauc: dict
    xauc0: dict
    xauc1: dict
    brier: dict
    counts: dict
    pooled_auc: float
    ties_present: bool = False
    se: dict | None = None

    def to_dict(self) -> dict:
        """JSON-ready nested dict; pair keys are rendered ``"a|b"``."""

        def keyed(d):
            return {_key(k): v for k, v in d.items()}

        out = {
            "groups": [str(g) for g in self.groups],
            "ties": self.ties,
            "ties_present": self.ties_present,
            "pooled_auc": self.pooled_auc,
            "counts": keyed(self.counts),
            "auc": keyed(self.auc),
            "xauc": keyed(self.xauc),
            "delta_xauc": keyed(self.delta_xauc),
            "xauc0": keyed(self.xauc0),
            "xauc1": keyed(self.xauc1),
            "brier": keyed(self.brier),
        }
        if self.se is not None:
            out["se"] = {name: vals if name == "pooled_auc" else keyed(vals) for name, vals in self.se.items()}
        return out

    def flat(self) -> dict:
        """Scalar metrics keyed ``"metric:key"``, for aggregation across runs."""
        flat = {"pooled_auc": self.pooled_auc}
        for name in METRIC_NAMES:
            for k, v in getattr(self, name).items():
                if v is not None:
                    flat[f"{name}:{_key(k)}"] = v
        return flat

    def flat_se(self) -> dict:
        if self.se is None:
            return {}
        flat = {"pooled_auc": self.se["pooled_auc"]} if self.se.get("pooled_auc") is not None else {}
        for name, vals in self.se.items():
            if name != "pooled_auc":
                flat.update({f"{name}:{_key(k)}": v for k, v in vals.items() if v is not None})
        return flat


def _key(k) -> str:
    if isinstance(k, tuple):
        return "|".join(str(p) for p in k)
    return str(k)


def _has_tied_pairs(pos, neg) -> bool:
    return pair_counts(pos, neg)[1] > 0


def audit_report(
    g: GroupedScores,
    ties: TiePolicy | str = TiePolicy.STRICT,
    with_se: bool = True,
) -> AuditReport:
    """Compute every metric for every group of ``g``.

    Brier scores are only filled when all scores lie in [0, 1]; raw ranking
    margins get ``None``.  Standard errors come from DeLong for AUC-type
    entries and from the per-sample squared error spread for Brier.
    """
    ties = TiePolicy.coerce(ties)
    groups = g.groups
    counts = {(c, y): g.count(c, y) for c in groups for y in (0, 1)}
    pos_all, neg_all = g.pooled(1), g.pooled(0)

    auc_vals, xauc_vals, x0, x1, brier = {}, {}, {}, {}, {}
    se = {"auc": {}, "xauc": {}, "xauc0": {}, "xauc1": {}, "brier": {}, "delta_xauc": {}}
    ties_present = _has_tied_pairs(pos_all, neg_all)

    def with_error(target, se_target, key, pos, neg):
        target[key] = auc(pos, neg, ties)
        if with_se:
            se_target[key] = delong_se(pos, neg, ties).se if min(pos.size, neg.size) >= 2 else None

    probabilistic = bool(np.all((pos_all >= 0) & (pos_all <= 1)) and np.all((neg_all >= 0) & (neg_all <= 1)))

    for c in groups:
        pos, neg = g.cell(c, 1), g.cell(c, 0)
        with_error(auc_vals, se["auc"], c, pos, neg)
        with_error(x0, se["xauc0"], c, pos_all, neg)
        with_error(x1, se["xauc1"], c, pos, neg_all)
        if probabilistic:
            scores = np.concatenate([neg, pos])
            labels = np.concatenate([np.zeros(neg.size), np.ones(pos.size)])
            brier[c] = brier_score(scores, labels)
            sq = (scores - labels) ** 2
            se["brier"][c] = float(np.std(sq, ddof=1) / math.sqrt(sq.size)) if sq.size > 1 else None
        else:
            brier[c] = None
            se["brier"][c] = None

    for a, b in itertools.permutations(groups, 2):
        with_error(xauc_vals, se["xauc"], (a, b), g.cell(a, 1), g.cell(b, 0))

    pooled = {}
    with_error(pooled, se, "pooled_auc", pos_all, neg_all)

    delta = {}
    for a, b in itertools.combinations(groups, 2):
        delta[(a, b)] = xauc_vals[(a, b)] - xauc_vals[(b, a)]
        if with_se:
            # the two cross AUCs share no samples, so their variances add
            sa, sb = se["xauc"][(a, b)], se["xauc"][(b, a)]
            se["delta_xauc"][(a, b)] = math.hypot(sa, sb) if sa is not None and sb is not None else None

    return AuditReport(
        groups=groups,
        ties=ties.value,
        auc=auc_vals,
        xauc=xauc_vals,
        delta_xauc=delta,
        xauc0=x0,
        xauc1=x1,
        brier=brier,
        counts=counts,
        pooled_auc=pooled["pooled_auc"],
        ties_present=ties_present,
        se=se if with_se else None,
    )

