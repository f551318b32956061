"""Closed-form cross-AUC under Gaussian group/outcome score models.

If ``R | Y=y, A=a ~ N(mu[a, y], var[a, y])`` independently, then
``xauc(a, b) = Phi((mu[a,1] - mu[b,0]) / sqrt(var[a,1] + var[b,0]))``.
The sign convention is: a positive mean gap gives a value above one half.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from xauc.errors import InfeasibleBounds, MissingCell
from xauc.metrics import GroupedScores

__all__ = [
    "GaussianGroupModel",
    "normal_cdf",
    "closed_form_xauc",
    "closed_form_delta_xauc",
    "closed_form_auc",
    "sample_scores",
    "SearchResult",
    "equal_auc_disparity_search",
    "REFERENCE_GROUP_A",
    "disparity_surface",
]

# group-a parameters of the worked same-AUC example: (mu0, mu1, var0, var1)
REFERENCE_GROUP_A = (0.25, 0.75, 0.25, 0.25)


def normal_cdf(z: float) -> float:
    """Standard normal CDF via the complementary error function.

    ``erfc`` keeps full relative precision in the lower tail, where
    ``0.5 * (1 + erf(x))`` would cancel.
    """
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


@dataclass(frozen=True)
class GaussianGroupModel:
    """Means and variances keyed by ``(group, outcome)``."""

    means: Mapping
    variances: Mapping

    def __post_init__(self):
        if set(self.means) != set(self.variances):
            raise ValueError("means and variances must cover the same cells")
        for key, var in self.variances.items():
            if not (var > 0 and math.isfinite(var)):
                raise ValueError(f"variance of cell {key} must be positive and finite, got {var}")
        for key, mu in self.means.items():
            if not math.isfinite(mu):
                raise ValueError(f"mean of cell {key} must be finite, got {mu}")

    @classmethod
    def two_group(cls, a: tuple, b: tuple, names=("a", "b")) -> "GaussianGroupModel":
        """Build from ``(mu0, mu1, var0, var1)`` tuples for each group."""
        means, variances = {}, {}
        for name, (mu0, mu1, var0, var1) in zip(names, (a, b)):
            means[(name, 0)], means[(name, 1)] = mu0, mu1
            variances[(name, 0)], variances[(name, 1)] = var0, var1
        return cls(means, variances)

    @property
    def groups(self) -> tuple:
        return tuple(dict.fromkeys(g for g, _ in self.means))

    def param(self, group, outcome) -> tuple[float, float]:
        try:
            return self.means[(group, outcome)], self.variances[(group, outcome)]
        except KeyError:
            raise MissingCell(group, outcome) from None

    def to_dict(self) -> dict:
        return {
            "cells": [
                {"group": str(g), "outcome": y, "mean": self.means[(g, y)], "variance": self.variances[(g, y)]}
                for g, y in self.means
            ]
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "GaussianGroupModel":
        means, variances = {}, {}
        for cell in d["cells"]:
            key = (cell["group"], int(cell["outcome"]))
            means[key] = float(cell["mean"])
            variances[key] = float(cell["variance"])
        return cls(means, variances)


def _cross(m: GaussianGroupModel, pos_group, neg_group) -> float:
    mu1, var1 = m.param(pos_group, 1)
    mu0, var0 = m.param(neg_group, 0)
    return normal_cdf((mu1 - mu0) / math.sqrt(var1 + var0))


def closed_form_xauc(m: GaussianGroupModel, a, b) -> float:
    return _cross(m, a, b)


def closed_form_auc(m: GaussianGroupModel, a) -> float:
    return _cross(m, a, a)


def closed_form_delta_xauc(m: GaussianGroupModel, a, b) -> float:
    return _cross(m, a, b) - _cross(m, b, a)


def sample_scores(m: GaussianGroupModel, counts, seed: int) -> GroupedScores:
    """Draw ``counts[(group, outcome)]`` scores per cell (an int means every cell).

    Cells are drawn in model order from one generator, so a seed fixes the
    whole sample.
    """
    rng = np.random.default_rng(seed)
    cells = {}
    for key in m.means:
        n = counts if isinstance(counts, int) else counts[key]
        if n < 1:
            raise ValueError(f"cell {key} needs at least one sample")
        cells[key] = rng.normal(m.means[key], math.sqrt(m.variances[key]), size=n)
    return GroupedScores(cells, m.groups)


# -- same within-group AUC, maximal cross-group disparity -------------------


@dataclass(frozen=True)
class SearchResult:
    mu_b0: float
    mu_b1: float
    var_b0: float
    var_b1: float
    disparity: float  # |delta xAUC(a, b)|
    delta: float  # signed delta xAUC(a, b)
    n_feasible: int

    def model(self, group_a=REFERENCE_GROUP_A) -> GaussianGroupModel:
        return GaussianGroupModel.two_group(group_a, (self.mu_b0, self.mu_b1, self.var_b0, self.var_b1))


def _delta_grid(fixed_a, mu_b0, mu_b1, var_b0, var_b1):
    mu_a0, mu_a1, var_a0, var_a1 = fixed_a
    z_ab = (mu_a1 - mu_b0) / np.sqrt(var_a1 + var_b0)
    z_ba = (mu_b1 - mu_a0) / np.sqrt(var_a0 + var_b1)
    cdf = np.vectorize(normal_cdf, otypes=[float])
    return cdf(z_ab) - cdf(z_ba)


def equal_auc_disparity_search(
    fixed_a=REFERENCE_GROUP_A,
    mu_b0=(0.0, 1.0),
    mu_b1=(0.0, 1.0),
    var_b1=(0.01, 0.5),
    var_b0_max: float = 0.5,
    resolution: int = 51,
    peaked: bool = False,
) -> SearchResult:
    """Grid search for the group-b parameters with the largest ``|delta xAUC|``.

    Group ``a`` is fixed at ``(mu0, mu1, var0, var1)``.  The grid covers
    ``mu_b0 x mu_b1 x var_b1`` (each a ``(lo, hi)`` range sampled at
    ``resolution`` points); ``var_b0`` is solved from the constraint that
    both groups have the same standardised mean gap, i.e. the same
    within-group AUC, and points with ``var_b0`` outside ``(0, var_b0_max]``
    are dropped.  ``peaked`` additionally requires ``mu_b1 > 0.5 > mu_b0``.

    Ties in the objective go to the lexicographically smallest
    ``(mu_b0, mu_b1, var_b1)``.
    """
    if resolution < 10:
        raise ValueError("resolution must be at least 10 per axis")
    mu_a0, mu_a1, var_a0, var_a1 = fixed_a
    gap_a = (mu_a1 - mu_a0) / math.sqrt(var_a0 + var_a1)
    if gap_a == 0:
        raise ValueError("group a must have a nonzero mean gap between outcomes")

    m0 = np.linspace(*mu_b0, resolution)
    m1 = np.linspace(*mu_b1, resolution)
    v1 = np.linspace(*var_b1, resolution)
    M0, M1, V1 = np.meshgrid(m0, m1, v1, indexing="ij")
    with np.errstate(invalid="ignore"):
        V0 = ((M1 - M0) / gap_a) ** 2 - V1
    # the gap must also have group a's sign, otherwise the AUCs mirror each other
    feasible = (np.sign(M1 - M0) == np.sign(gap_a)) & (V0 > 1e-12) & (V0 <= var_b0_max + 1e-12) & (V1 > 0)
    if peaked:
        feasible &= (M1 > 0.5) & (M0 < 0.5)
    if not feasible.any():
        raise InfeasibleBounds("no grid point satisfies the equal-AUC constraint within bounds")

    idx = np.flatnonzero(feasible.ravel())
    delta = _delta_grid(fixed_a, M0.ravel()[idx], M1.ravel()[idx], V0.ravel()[idx], V1.ravel()[idx])
    # idx is already in lexicographic (mu_b0, mu_b1, var_b1) order; argmax keeps the first
    best = int(np.argmax(np.abs(delta)))
    i = idx[best]
    return SearchResult(
        mu_b0=float(M0.ravel()[i]),
        mu_b1=float(M1.ravel()[i]),
        var_b0=float(V0.ravel()[i]),
        var_b1=float(V1.ravel()[i]),
        disparity=float(abs(delta[best])),
        delta=float(delta[best]),
        n_feasible=int(idx.size),
    )


def disparity_surface(m_fixed_a=REFERENCE_GROUP_A, var_b=(0.25, 0.25), resolution: int = 21):
    """``delta xAUC`` over a ``mu_b0 x mu_b1`` grid with group-b variances fixed.

    Returns ``(mu_b0 grid, mu_b1 grid, matrix)`` with rows indexed by ``mu_b0``.
    """
    grid = np.linspace(0.0, 1.0, resolution)
    out = np.empty((resolution, resolution))
    for i, j in itertools.product(range(resolution), repeat=2):
        m = GaussianGroupModel.two_group(m_fixed_a, (grid[i], grid[j], var_b[0], var_b[1]))
        out[i, j] = closed_form_delta_xauc(m, "a", "b")
    return grid, grid.copy(), out
