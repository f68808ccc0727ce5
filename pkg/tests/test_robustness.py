import json

import pytest

from mcdakit.errors import InsufficientPanel
from mcdakit.model import RankProfile
from mcdakit.opa import solve_opa
from mcdakit.robustness import (
    coefficient_of_variation,
    make_uncertainty_row,
    per_expert_weights,
    sensitivity_analysis,
    uncertainty_table,
)


def profile(eid, crit_ranks, item_ranks, expert_rank=1):
    return RankProfile(
        expert_id=eid,
        expert_rank=expert_rank,
        criterion_ranks=crit_ranks,
        item_ranks={c: tuple(v) for c, v in item_ranks.items()},
    )


def identical_panel(n=3):
    return [
        profile(e, {"c": 1}, {"c": ("a", "b", "x")}) for e in range(1, n + 1)
    ]


def reversed_pair():
    return [
        profile(1, {"c": 1}, {"c": ("a", "b")}),
        profile(2, {"c": 1}, {"c": ("b", "a")}),
    ]


class TestPerExpertWeights:
    def test_identical_profiles_agree_exactly(self):
        singles = per_expert_weights(identical_panel())
        weights = [s.factor_weights for s in singles.values()]
        assert all(w == weights[0] for w in weights)

    def test_reversed_pair_closed_form(self):
        singles = per_expert_weights(reversed_pair())
        assert singles[1].factor_weights["a"] == pytest.approx(0.75, abs=1e-9)
        assert singles[1].factor_weights["b"] == pytest.approx(0.25, abs=1e-9)
        assert singles[2].factor_weights["a"] == pytest.approx(0.25, abs=1e-9)
        assert singles[2].factor_weights["b"] == pytest.approx(0.75, abs=1e-9)

    def test_single_expert_rejected(self):
        with pytest.raises(InsufficientPanel):
            per_expert_weights(identical_panel(1))

    def test_fixture_matches_committed_table(self, bundled_profiles,
                                             golden_dir):
        singles = per_expert_weights(bundled_profiles)
        table = {
            str(e): {k: v for k, v in sol.factor_weights.items()}
            for e, sol in singles.items()
        }
        expected = json.loads(
            (golden_dir / "per_expert_weights.json").read_text()
        )
        assert set(table) == set(expected)
        for e in expected:
            for item, w in expected[e].items():
                assert table[e][item] == pytest.approx(w, abs=1e-12)


class TestUncertaintyTable:
    def test_identical_profiles_collapse(self):
        panel = identical_panel()
        rows = uncertainty_table(panel, solve_opa(panel))
        for row in rows:
            assert row.delta == 0.0
            assert row.sigma == 0.0
            assert row.verdict == "pass"

    def test_printed_interval_shape(self):
        # lower .18, upper .27, point .22, sigma .05 give cv near 22.7
        row = make_uncertainty_row(
            "C1", "criterion", [0.18, 0.27], 0.22, threshold=0.27
        )
        assert row.delta == pytest.approx(0.09, abs=1e-12)
        assert row.cv_percent == pytest.approx(100 * row.sigma / 0.22)

    def test_reversed_pair_bounds_and_inclusive_verdict(self):
        panel = reversed_pair()
        rows = uncertainty_table(panel, solve_opa(panel))
        by_item = {r.item: r for r in rows if r.kind == "factor"}
        a = by_item["a"]
        assert a.lower == pytest.approx(0.25, abs=1e-9)
        assert a.upper == pytest.approx(0.75, abs=1e-9)
        assert a.delta == pytest.approx(0.5, abs=1e-9)
        # two items: default threshold is 1/2, and delta == T still passes
        assert a.threshold == 0.5
        assert a.verdict == "pass"

    def test_threshold_override(self):
        panel = reversed_pair()
        rows = uncertainty_table(panel, solve_opa(panel),
                                 threshold_override=0.4)
        by_item = {r.item: r for r in rows if r.kind == "factor"}
        assert by_item["a"].threshold == 0.4
        assert by_item["a"].verdict == "fail"

    def test_default_thresholds_per_family(self, bundled_profiles):
        rows = uncertainty_table(bundled_profiles,
                                 solve_opa(bundled_profiles))
        for row in rows:
            if row.kind == "criterion":
                assert row.threshold == pytest.approx(1 / 3)
            else:
                assert row.threshold == pytest.approx(1 / 5)

    def test_cv_absent_when_point_zero(self):
        assert coefficient_of_variation(0.1, 0.0) is None
        row = make_uncertainty_row("x", "factor", [0.0, 0.0], 0.0, 0.2)
        assert row.cv_percent is None

    def test_verdict_monotone_under_shrinking(self):
        import random

        rng = random.Random(13)
        for _ in range(50):
            values = [rng.uniform(0, 1) for _ in range(5)]
            point = sum(values) / len(values)
            t = rng.uniform(0, 1)
            row = make_uncertainty_row("x", "factor", values, point, t)
            if row.verdict == "pass":
                for lam in (0.8, 0.5, 0.1):
                    shrunk = [point + lam * (v - point) for v in values]
                    again = make_uncertainty_row("x", "factor", shrunk,
                                                 point, t)
                    assert again.verdict == "pass"


class TestSensitivity:
    def test_identical_profiles_are_stable(self):
        panel = identical_panel()
        report = sensitivity_analysis(panel, mode="leave-one-out")
        baseline = dict(report.scenarios)["baseline"]
        for label, weights in report.scenarios:
            for item, w in weights.items():
                assert w == pytest.approx(baseline[item], abs=1e-9)
        assert report.rank_stable
        assert report.changed_pairs == ()

    def test_envelope_contains_baseline(self, bundled_profiles):
        report = sensitivity_analysis(bundled_profiles, mode="both")
        baseline = dict(report.scenarios)["baseline"]
        for item, (lo, hi, point) in report.envelope.items():
            assert lo <= point <= hi
            assert point == baseline[item]

    def test_every_scenario_is_a_valid_weighting(self, bundled_profiles):
        report = sensitivity_analysis(bundled_profiles, mode="both")
        for label, weights in report.scenarios:
            assert sum(weights.values()) == pytest.approx(1.0, abs=1e-9)
            assert all(w >= -1e-12 for w in weights.values())

    def test_bottom_rank_swap_keeps_top_item(self, bundled_profiles):
        report = sensitivity_analysis(bundled_profiles, mode="adjacent-swap")
        baseline_top = max(
            dict(report.scenarios)["baseline"].items(), key=lambda kv: kv[1]
        )[0]
        m = len(bundled_profiles[0].items)
        for prof in bundled_profiles:
            worst = max(prof.criterion_ranks, key=prof.criterion_ranks.get)
            label = f"swap:e{prof.expert_id}:{worst}:r{m - 1}"
            weights = dict(report.scenarios)[label]
            top = max(weights.items(), key=lambda kv: kv[1])[0]
            assert top == baseline_top

    def test_scenario_set_is_order_independent(self, bundled_profiles):
        a = sensitivity_analysis(bundled_profiles, mode="both")
        b = sensitivity_analysis(list(reversed(bundled_profiles)),
                                 mode="both")
        assert [lab for lab, _ in a.scenarios] == [lab for lab, _ in b.scenarios]
        for (lab_a, w_a), (lab_b, w_b) in zip(a.scenarios, b.scenarios):
            for item in w_a:
                assert w_a[item] == pytest.approx(w_b[item], abs=1e-12)
        assert repr(a) == repr(b)

    def test_leave_one_out_needs_two_experts(self):
        with pytest.raises(InsufficientPanel):
            sensitivity_analysis(identical_panel(1), mode="leave-one-out")

    def test_adjacent_swap_needs_two_items(self):
        panel = [
            profile(1, {"c": 1}, {"c": ("only",)}),
            profile(2, {"c": 1}, {"c": ("only",)}),
        ]
        with pytest.raises(InsufficientPanel):
            sensitivity_analysis(panel, mode="adjacent-swap")

    def test_unknown_mode_rejected(self, bundled_profiles):
        with pytest.raises(InsufficientPanel):
            sensitivity_analysis(bundled_profiles, mode="bogus")

    def test_scenario_counts(self, bundled_profiles):
        loo = sensitivity_analysis(bundled_profiles, mode="leave-one-out")
        assert len(loo.scenarios) == 1 + 7
        swap = sensitivity_analysis(bundled_profiles, mode="adjacent-swap")
        assert len(swap.scenarios) == 1 + 7 * 3 * 4
        both = sensitivity_analysis(bundled_profiles, mode="both")
        assert len(both.scenarios) == 1 + 7 + 7 * 3 * 4
