import numpy as np
import pytest

from fairpath import (
    NoFeasiblePointError,
    ThresholdPolicy,
    UnknownGroupError,
    UtilitySpec,
    apply_policy,
    confusion_at,
    fit_equal_opportunity,
    fit_equalized_odds,
    two_point_policy,
)
from fairpath.errors import FairpathError
from fairpath.roc import NEVER_THRESHOLD

from conftest import make_dataset, random_dataset
from oracles import (
    equal_opportunity_grid_oracle,
    equal_opportunity_pair_exhaustive,
    equalized_odds_oracle,
    point_in_hull,
    point_utility,
    rows_of,
)


def achieved_from_components(d, group, policy):
    """Oracle-side recomputation of a group's achieved rates via confusion_at."""
    gp = policy.per_group[group]
    fpr = tpr = 0.0
    for comp in gp.components:
        c = confusion_at(d, group, comp.threshold)
        fpr += comp.weight * (c.fp / c.negatives)
        tpr += comp.weight * (c.tp / c.positives)
    return fpr, tpr


def utility_from_components(d, policy, u):
    total = 0.0
    for group, gp in policy.per_group.items():
        for comp in gp.components:
            c = confusion_at(d, group, comp.threshold)
            total += comp.weight * point_utility(
                {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn}, u, len(d)
            )
    return total


def crossing_fixture():
    """Two groups whose ROC curves cross (neither dominates)."""
    groups, labels, scores = [], [], []
    spec_a = [(1, 0.95), (1, 0.9), (1, 0.45), (1, 0.2), (0, 0.85), (0, 0.4), (0, 0.3), (0, 0.1)]
    spec_b = [(1, 0.8), (1, 0.75), (1, 0.6), (1, 0.15), (0, 0.7), (0, 0.65), (0, 0.5), (0, 0.05)]
    for label, score in spec_a:
        groups.append("A")
        labels.append(label)
        scores.append(score)
    for label, score in spec_b:
        groups.append("B")
        labels.append(label)
        scores.append(score)
    return make_dataset(groups, labels, scores)


class TestEqualOpportunity:
    def test_identical_groups_share_deterministic_threshold(self):
        d = make_dataset(
            ["A", "A", "A", "B", "B", "B"],
            [1, 1, 0, 1, 1, 0],
            [0.9, 0.6, 0.3, 0.9, 0.6, 0.3],
        )
        policy = fit_equal_opportunity(d)
        a, b = policy.per_group["A"], policy.per_group["B"]
        assert a.mix == 1.0 and b.mix == 1.0
        assert a.t_lo == a.t_hi == b.t_lo == b.t_hi
        assert abs(a.achieved_tpr - b.achieved_tpr) == 0.0

    def test_crossing_curves_tpr_gap_below_tolerance(self):
        d = crossing_fixture()
        policy = fit_equal_opportunity(d)
        achieved = [achieved_from_components(d, g, policy)[1] for g in d.groups]
        assert max(achieved) - min(achieved) <= 1e-6

    def test_random_fixtures_gap_and_oracle_dominance(self, rng):
        u = UtilitySpec()
        for _ in range(8):
            d = random_dataset(rng, max_rows=80, nondegenerate=True)
            policy = fit_equal_opportunity(d, u)
            tprs = [achieved_from_components(d, g, policy)[1] for g in d.groups]
            assert max(tprs) - min(tprs) <= 1e-6
            oracle = equal_opportunity_grid_oracle(d, u)
            assert policy.utility >= oracle - 1e-3
            assert utility_from_components(d, policy, u) == pytest.approx(
                policy.utility, abs=1e-12
            )

    def test_envelope_oracle_equals_exhaustive_pairs_on_tiny_fixture(self, rng):
        u = UtilitySpec(cost_fp=2.0, cost_fn=0.5, benefit_tp=1.5, benefit_tn=0.25)
        taus = np.linspace(0.0, 1.0, 21)
        for _ in range(3):
            d = random_dataset(rng, max_rows=14, n_groups=2, nondegenerate=True)
            exhaustive = equal_opportunity_pair_exhaustive(d, u, taus)
            per_tau = np.zeros(len(taus))
            from oracles import brute_operating_points, upper_envelope

            rows = rows_of(d)
            for g in d.groups:
                points = brute_operating_points(rows, g)
                pos = points[0]["tp"] + points[0]["fn"]
                tpr = np.array([p["tp"] / pos for p in points])
                util = np.array([point_utility(p, u, len(d)) for p in points])
                ex, ey = upper_envelope(tpr, util)
                per_tau += np.interp(taus, ex, ey)
            assert np.allclose(per_tau, exhaustive, atol=1e-12)

    def test_nonunit_costs_respected(self, rng):
        d = random_dataset(rng, max_rows=60, nondegenerate=True)
        cheap_fn = fit_equal_opportunity(d, UtilitySpec(cost_fp=5.0, cost_fn=0.1))
        cheap_fp = fit_equal_opportunity(d, UtilitySpec(cost_fp=0.1, cost_fn=5.0))
        # expensive false positives push the shared TPR target down
        tpr_a = cheap_fn.per_group[d.groups[0]].achieved_tpr
        tpr_b = cheap_fp.per_group[d.groups[0]].achieved_tpr
        assert tpr_a <= tpr_b + 1e-12

    def test_utility_scaling_invariance(self, rng):
        d = random_dataset(rng, max_rows=50, nondegenerate=True)
        base = fit_equal_opportunity(d, UtilitySpec(1.0, 2.0, 0.5, 1.5))
        scaled = fit_equal_opportunity(d, UtilitySpec(3.0, 6.0, 1.5, 4.5))
        for g in d.groups:
            assert base.per_group[g].components == scaled.per_group[g].components
        assert scaled.utility == pytest.approx(3 * base.utility, rel=1e-12)


class TestEqualizedOdds:
    def test_identical_groups_share_deterministic_optimum(self):
        d = make_dataset(
            ["A", "A", "A", "A", "B", "B", "B", "B"],
            [1, 1, 0, 0, 1, 1, 0, 0],
            [0.9, 0.7, 0.4, 0.2, 0.9, 0.7, 0.4, 0.2],
        )
        policy = fit_equalized_odds(d)
        a, b = policy.per_group["A"], policy.per_group["B"]
        assert a.mix == 1.0 and b.mix == 1.0
        assert a.t_lo == b.t_lo
        assert (a.achieved_fpr, a.achieved_tpr) == (b.achieved_fpr, b.achieved_tpr)

    def test_two_group_gaps_below_tolerance(self):
        d = crossing_fixture()
        policy = fit_equalized_odds(d)
        points = [achieved_from_components(d, g, policy) for g in d.groups]
        fprs = [p[0] for p in points]
        tprs = [p[1] for p in points]
        assert max(fprs) - min(fprs) <= 1e-6
        assert max(tprs) - min(tprs) <= 1e-6

    def test_random_fixtures_match_oracle_and_stay_in_hulls(self, rng):
        u = UtilitySpec()
        for _ in range(6):
            d = random_dataset(rng, max_rows=80, nondegenerate=True, n_groups=2)
            policy = fit_equalized_odds(d, u)
            oracle = equalized_odds_oracle(d, u)
            assert policy.utility >= oracle["grid_utility"] - 1e-3
            assert policy.utility == pytest.approx(oracle["exact_utility"], abs=1e-3)
            for g in d.groups:
                gp = policy.per_group[g]
                ex, ey = oracle["envelopes"][g]
                assert point_in_hull((gp.achieved_fpr, gp.achieved_tpr), ex, ey)
            points = [achieved_from_components(d, g, policy) for g in d.groups]
            fprs = [p[0] for p in points]
            tprs = [p[1] for p in points]
            assert max(fprs) - min(fprs) <= 1e-6
            assert max(tprs) - min(tprs) <= 1e-6

    def test_three_groups_still_equalize(self, rng):
        d = random_dataset(rng, max_rows=90, nondegenerate=True, n_groups=3)
        policy = fit_equalized_odds(d)
        points = [achieved_from_components(d, g, policy) for g in d.groups]
        fprs = [p[0] for p in points]
        tprs = [p[1] for p in points]
        assert max(fprs) - min(fprs) <= 1e-6
        assert max(tprs) - min(tprs) <= 1e-6

    def test_component_mixture_reproduces_common_point_exactly(self, rng):
        d = random_dataset(rng, max_rows=60, nondegenerate=True)
        policy = fit_equalized_odds(d)
        for g in d.groups:
            gp = policy.per_group[g]
            fpr, tpr = achieved_from_components(d, g, policy)
            assert fpr == pytest.approx(gp.achieved_fpr, abs=1e-12)
            assert tpr == pytest.approx(gp.achieved_tpr, abs=1e-12)
            assert sum(c.weight for c in gp.components) == pytest.approx(1.0, abs=1e-12)

    def test_anti_predictive_group_forces_trivial_point(self):
        d = make_dataset(
            ["A", "A", "A", "A", "B", "B"],
            [1, 1, 0, 0, 0, 1],
            [0.9, 0.8, 0.3, 0.1, 0.9, 0.1],
        )
        with pytest.raises(NoFeasiblePointError, match="no non-trivial equalized-odds point"):
            fit_equalized_odds(d, allow_trivial=False)
        policy = fit_equalized_odds(d, allow_trivial=True)
        for g in d.groups:
            gp = policy.per_group[g]
            assert gp.achieved_fpr == pytest.approx(gp.achieved_tpr, abs=1e-12)

    def test_utility_scaling_invariance(self, rng):
        d = random_dataset(rng, max_rows=50, nondegenerate=True)
        base = fit_equalized_odds(d, UtilitySpec(1.0, 2.0, 0.5, 1.5))
        scaled = fit_equalized_odds(d, UtilitySpec(2.0, 4.0, 1.0, 3.0))
        for g in d.groups:
            assert base.per_group[g].components == scaled.per_group[g].components
        assert scaled.utility == pytest.approx(2 * base.utility, rel=1e-12)


class TestApplyPolicy:
    def build_policy(self, d, t_lo, t_hi, mix):
        return ThresholdPolicy(
            objective="equal-opportunity",
            per_group={g: two_point_policy(t_lo, t_hi, mix) for g in d.groups},
            utility=0.0,
        )

    def test_mix_one_is_low_threshold(self, rng):
        d = random_dataset(rng, max_rows=40)
        policy = self.build_policy(d, 0.3, 0.8, 1.0)
        decisions = apply_policy(d, policy, seed=1)
        assert np.array_equal(decisions, (d.scores >= 0.3).astype(np.int8))

    def test_mix_zero_is_high_threshold(self, rng):
        d = random_dataset(rng, max_rows=40)
        policy = self.build_policy(d, 0.3, 0.8, 0.0)
        decisions = apply_policy(d, policy, seed=1)
        assert np.array_equal(decisions, (d.scores >= 0.8).astype(np.int8))

    def test_deterministic_under_seed(self, rng):
        d = random_dataset(rng, max_rows=40)
        policy = self.build_policy(d, 0.2, 0.9, 0.5)
        assert np.array_equal(apply_policy(d, policy, 9), apply_policy(d, policy, 9))

    def test_empirical_rate_within_three_sigma(self):
        n = 10_000
        half = n // 2
        d = make_dataset(
            ["A"] * half + ["B"] * half,
            [1, 0] * half,
            [0.5] * n,
        )
        # t_lo selects everything, t_hi nothing: expected selection rate = mix
        mix = 0.5
        policy = self.build_policy(d, 0.0, NEVER_THRESHOLD, mix)
        decisions = apply_policy(d, policy, seed=123)
        sigma = (mix * (1 - mix) / n) ** 0.5
        assert abs(float(decisions.mean()) - mix) <= 3 * sigma

    def test_missing_group_rejected(self, rng):
        d = random_dataset(rng, max_rows=20)
        policy = ThresholdPolicy(
            objective="equal-opportunity",
            per_group={d.groups[0]: two_point_policy(0.5, 0.5, 1.0)},
            utility=0.0,
        )
        with pytest.raises(UnknownGroupError, match="lacks thresholds"):
            apply_policy(d, policy, seed=0)

    def test_fitted_policy_empirical_rates_converge(self):
        rng = np.random.Generator(np.random.PCG64(77))
        n = 4000
        groups = ["A"] * (n // 2) + ["B"] * (n // 2)
        labels = [int(rng.random() < (0.6 if g == "A" else 0.4)) for g in groups]
        scores = [
            min(1.0, max(0.0, 0.55 * l + 0.45 * float(rng.random()))) for l in labels
        ]
        d = make_dataset(groups, labels, scores)
        policy = fit_equalized_odds(d)
        decisions = apply_policy(d, policy, seed=5)
        for g in d.groups:
            mask = d.group_mask(g)
            actual = d.labels[mask] == 1
            gp = policy.per_group[g]
            emp_tpr = float(decisions[mask][actual].mean())
            emp_fpr = float(decisions[mask][~actual].mean())
            assert abs(emp_tpr - gp.achieved_tpr) < 0.06
            assert abs(emp_fpr - gp.achieved_fpr) < 0.06


class TestUtilitySpec:
    def test_negative_rejected(self):
        with pytest.raises(FairpathError, match="non-negative"):
            UtilitySpec(cost_fp=-1.0)

    def test_all_zero_rejected(self):
        with pytest.raises(FairpathError, match="all zero"):
            UtilitySpec(0.0, 0.0, 0.0, 0.0)

    def test_two_point_policy_validation(self):
        with pytest.raises(FairpathError, match="t_lo"):
            two_point_policy(0.9, 0.1, 0.5)
        with pytest.raises(FairpathError, match="mix"):
            two_point_policy(0.1, 0.9, 1.5)
