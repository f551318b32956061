import numpy as np
import pytest
from hypothesis import given, settings

from conftest import grouped_instances, integer_scores
from xauc.adjust import (
    MonotoneTransform,
    apply_transform,
    disadvantaged_group,
    eqop_transform,
    fit_logistic_adjustment,
    golden_section_min,
    verify_eqop_identity,
)
from xauc.errors import MissingCell, MissingGroup
from xauc.gaussian import GaussianGroupModel, sample_scores
from xauc.metrics import GroupedScores, auc, delta_xauc, xauc


def _gaussian(n, a=(0.0, 1.2, 1.0, 1.0), b=(-0.5, 0.4, 0.6, 1.5), seed=0):
    return sample_scores(GaussianGroupModel.two_group(a, b), n, seed)


def _within_auc(g, grp, ties="strict"):
    return auc(g.cell(grp, 1), g.cell(grp, 0), ties)


class TestApply:
    def test_identity(self, toy_two_group):
        assert apply_transform(toy_two_group, MonotoneTransform("identity", "b")) == toy_two_group

    def test_missing_group(self, toy_two_group):
        with pytest.raises(MissingGroup):
            apply_transform(toy_two_group, MonotoneTransform("identity", "z"))

    def test_validation(self):
        with pytest.raises(ValueError):
            MonotoneTransform("logistic", "b", alpha=-1)
        with pytest.raises(ValueError):
            MonotoneTransform("quantile_map", "b", table_x=(1, 0), table_y=(0, 1))
        with pytest.raises(ValueError):
            MonotoneTransform("spline", "b")

    def test_unit_logistic_keeps_within_auc_but_moves_xauc(self):
        g = _gaussian(300)
        out = apply_transform(g, MonotoneTransform("logistic", "b", alpha=1.0, beta=0.0))
        for ties in ("strict", "half"):
            assert _within_auc(out, "b", ties) == _within_auc(g, "b", ties)
            assert _within_auc(out, "a", ties) == _within_auc(g, "a", ties)
        assert xauc(out, "a", "b") != xauc(g, "a", "b")
        np.testing.assert_array_equal(out.cell("a", 1), g.cell("a", 1))

    def test_zero_alpha_ties_the_group(self):
        out = apply_transform(_gaussian(50), MonotoneTransform("logistic", "b", alpha=0.0, beta=-2.0))
        assert _within_auc(out, "b", "strict") == 0.0
        assert _within_auc(out, "b", "half") == 0.5

    @settings(max_examples=60)
    @given(grouped_instances(scores=integer_scores))
    def test_increasing_map_preserves_target_auc(self, g):
        # integer inputs stay distinct under this piecewise-linear map
        t = MonotoneTransform("quantile_map", "g1", table_x=(-20.0, 0.0, 20.0), table_y=(-1.0, 0.0, 8.0))
        out = apply_transform(g, t)
        assert _within_auc(out, "g1", "half") == _within_auc(g, "g1", "half")


def test_golden_section_finds_quadratic_minimum():
    seen = golden_section_min(lambda x: (x - 1.3) ** 2, 0.0, 4.0, tol=1e-9)
    x, _ = min(seen, key=lambda p: p[1])
    assert x == pytest.approx(1.3, abs=1e-8)


class TestLogisticAdjustment:
    def test_optimum_beats_every_grid_point(self):
        g = _gaussian(400, seed=2)
        target = disadvantaged_group(g, "a", "b")
        res = fit_logistic_adjustment(g, target, resolution=101)
        assert target == "b"
        assert res.objective <= res.grid_objective.min()
        assert res.objective <= abs(delta_xauc(g, "a", "b"))
        assert res.objective == pytest.approx(abs(res.after.delta_xauc[("a", "b")]))
        # within-group AUC of the moved group survives the (strictly increasing) map
        assert res.after.auc["b"] == res.before.auc["b"]

    def test_lowest_alpha_wins_ties(self):
        # group b sits far above and below group a, so a range of alphas all
        # give zero disparity
        cells = {("a", 1): [0.6], ("a", 0): [0.4], ("b", 1): [5.0], ("b", 0): [-5.0]}
        g = GroupedScores(cells, ["a", "b"])
        res = fit_logistic_adjustment(g, "b", resolution=51)
        zero = np.flatnonzero(res.grid_objective == 0.0)
        assert zero.size > 1
        assert res.objective == 0.0
        assert res.alpha <= res.grid_alpha[zero[0]]
        assert np.all(res.grid_objective[res.grid_alpha < res.alpha] > 0)

    def test_without_refinement_is_first_grid_minimiser(self):
        g = _gaussian(200, seed=5)
        res = fit_logistic_adjustment(g, "b", resolution=51, refine=False)
        assert res.alpha == res.grid_alpha[int(np.argmin(res.grid_objective))]

    def test_missing_cell(self):
        g = GroupedScores({("a", 1): [0.2], ("b", 1): [0.3], ("b", 0): [0.1]}, ["a", "b"])
        with pytest.raises(MissingCell):
            fit_logistic_adjustment(g, "b")

    def test_serialises(self):
        res = fit_logistic_adjustment(_gaussian(60), "b", resolution=21)
        d = res.to_dict()
        assert d["target_group"] == "b" and d["other_group"] == "a"


class TestEqop:
    def test_self_map_fixes_order_statistics(self):
        g = _gaussian(200)
        t = eqop_transform(g, "a", "a")
        np.testing.assert_allclose(t(g.cell("a", 1)), g.cell("a", 1), rtol=0, atol=1e-12)

    def test_nondecreasing_on_probes(self):
        g = _gaussian(300, seed=3)
        t = eqop_transform(g, "a", "b")
        probes = np.linspace(-10, 10, 5001)
        assert np.all(np.diff(t(probes)) >= 0)

    def test_tpr_curves_agree(self):
        g = _gaussian(5000, seed=7)
        moved = apply_transform(g, eqop_transform(g, "a", "b"))
        pa, pb = moved.cell("a", 1), moved.cell("b", 1)
        for level in np.linspace(0, 1, 101):
            t = np.quantile(pa, level)
            assert abs(np.mean(pa > t) - np.mean(pb > t)) <= 2e-3

    def test_identity_on_continuous_data(self):
        check = verify_eqop_identity(_gaussian(10_000, seed=11), "a", "b")
        assert abs(check.residual) < 0.01
        assert not check.flagged

    def test_equal_aucs_give_no_disparity(self):
        g = _gaussian(10_000, a=(0, 1, 1, 1), b=(2, 3, 1, 1), seed=13)
        check = verify_eqop_identity(g, "a", "b")
        assert abs(check.auc_a - check.auc_b) < 0.02
        assert abs(check.delta_after) < 0.03

    def test_tiny_discrete_data_flagged(self):
        cells = {("a", 1): [3, 2, 2], ("a", 0): [1, 1, 0], ("b", 1): [0, 0, 0], ("b", 0): [3, 2, 3]}
        check = verify_eqop_identity(GroupedScores(cells, ["a", "b"]), "a", "b")
        assert check.flagged and abs(check.residual) > 0.3
        assert check.discreteness_bound == 1.0
