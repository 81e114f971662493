import io
from datetime import date, timedelta
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from c19risk.cohort import (
    CohortReport,
    FixedCohortRules,
    MonthlyCohortRules,
    PredictionInstance,
    SamplingParams,
    build_combined_training,
    build_fixed_date_cohort,
    build_monthly_cohort,
    compute_sampling_counts,
    label_proxy_outcome,
    read_instances,
    split_by_person,
    write_cohort_report,
    write_instances,
)
from c19risk.errors import Infeasible

from conftest import make_timeline, months_around

PRED = date(2016, 9, 30)


class TestLabelProxyOutcome:
    def test_inpatient_proxy_two_months_after(self, catalog):
        t = make_timeline(claims=[(date(2016, 11, 20), "inpatient", ["J101"])])
        assert label_proxy_outcome(t, PRED, catalog) is True

    def test_office_claim_never_labels(self, catalog):
        t = make_timeline(claims=[(date(2016, 10, 20), "office", ["J189"])])
        assert label_proxy_outcome(t, PRED, catalog) is False

    def test_four_months_after_is_outside(self, catalog):
        t = make_timeline(claims=[(date(2017, 1, 31), "inpatient", ["J189"])])
        assert label_proxy_outcome(t, PRED, catalog) is False

    def test_observation_stay_counts(self, catalog):
        t = make_timeline(claims=[(date(2016, 10, 20), "observation", ["J80"])])
        assert label_proxy_outcome(t, PRED, catalog) is True

    def test_window_boundaries(self, catalog):
        on_pred = make_timeline(claims=[(PRED, "inpatient", ["J189"])])
        assert label_proxy_outcome(on_pred, PRED, catalog) is False  # exclusive start
        at_end = make_timeline(claims=[(date(2016, 12, 30), "inpatient", ["J189"])])
        assert label_proxy_outcome(at_end, PRED, catalog) is True  # inclusive end
        past_end = make_timeline(claims=[(date(2016, 12, 31), "inpatient", ["J189"])])
        assert label_proxy_outcome(past_end, PRED, catalog) is False

    def test_non_proxy_admission_is_negative(self, catalog):
        t = make_timeline(claims=[(date(2016, 10, 20), "inpatient", ["E109"])])
        assert label_proxy_outcome(t, PRED, catalog) is False

    def test_secondary_position_counts(self, catalog):
        t = make_timeline(claims=[(date(2016, 10, 20), "inpatient", ["E109", "J189"])])
        assert label_proxy_outcome(t, PRED, catalog) is True

    def test_adding_claims_is_monotone(self, catalog):
        base_claims = [(date(2016, 10, 20), "inpatient", ["J189"])]
        t1 = make_timeline(claims=base_claims)
        t2 = make_timeline(claims=base_claims + [(date(2016, 11, 1), "office", ["I10"])])
        assert label_proxy_outcome(t1, PRED, catalog) is True
        assert label_proxy_outcome(t2, PRED, catalog) is True


def six_person_fixture():
    """Each filter removes exactly one person; two survive."""
    full_coverage = months_around(PRED, before=8, after=3)
    people = {}
    # pA: only 3 months of eligibility before the prediction date
    people["pA"] = make_timeline(
        "pA", birth_date=date(1940, 1, 1), covered_months=months_around(PRED, 2, 3)
    )
    # pB: age 60
    people["pB"] = make_timeline(
        "pB", birth_date=date(1956, 1, 1), covered_months=full_coverage
    )
    # pC: died before the prediction date
    people["pC"] = make_timeline(
        "pC",
        birth_date=date(1940, 1, 1),
        death_date=date(2016, 9, 1),
        covered_months=full_coverage,
    )
    # pD: alive but loses coverage inside the outcome window
    people["pD"] = make_timeline(
        "pD", birth_date=date(1940, 1, 1), covered_months=months_around(PRED, 8, 1)
    )
    # pE: dies inside the window after a proxy admission; coverage ends at death
    people["pE"] = make_timeline(
        "pE",
        birth_date=date(1940, 1, 1),
        death_date=date(2016, 12, 10),
        covered_months=months_around(PRED, 8, 2),
        claims=[(date(2016, 11, 25), "inpatient", ["J189"])],
    )
    # pF: fully covered, no proxy event
    people["pF"] = make_timeline(
        "pF", birth_date=date(1940, 1, 1), covered_months=full_coverage
    )
    return people


class TestFixedDateCohort:
    def test_cascade_counts(self, catalog):
        instances, report = build_fixed_date_cohort(six_person_fixture(), PRED, catalog)
        assert [c for _, c in report.steps] == [6, 5, 4, 3, 2]
        assert {i.person_id for i in instances} == {"pE", "pF"}

    def test_death_carveout_keeps_label(self, catalog):
        instances, _ = build_fixed_date_cohort(six_person_fixture(), PRED, catalog)
        by_id = {i.person_id: i for i in instances}
        assert by_id["pE"].label is True
        assert by_id["pF"].label is False

    def test_coverage_loss_without_death_excluded(self, catalog):
        instances, _ = build_fixed_date_cohort(six_person_fixture(), PRED, catalog)
        assert "pD" not in {i.person_id for i in instances}

    def test_report_final_count_equals_instances(self, catalog):
        instances, report = build_fixed_date_cohort(six_person_fixture(), PRED, catalog)
        assert report.final_count == len(instances)

    def test_age_and_source_fields(self, catalog):
        instances, _ = build_fixed_date_cohort(six_person_fixture(), PRED, catalog)
        inst = {i.person_id: i for i in instances}["pF"]
        assert inst.age_years == 76
        assert inst.source_cohort == "fixed_date"
        assert inst.prediction_date == PRED

    def test_rules_override(self, catalog):
        # lowering the age bar admits pB
        instances, _ = build_fixed_date_cohort(
            six_person_fixture(), PRED, catalog, rules=FixedCohortRules(min_age=18)
        )
        assert "pB" in {i.person_id for i in instances}


class TestMonthlyCohort:
    def test_twelve_covered_months_give_nine_instances(self, catalog):
        months = [date(2018, m, 1) for m in range(1, 13)]
        t = make_timeline("p1", birth_date=date(1980, 1, 1), covered_months=months)
        instances, report = build_monthly_cohort(
            {"p1": t}, (date(2018, 1, 1), date(2018, 12, 1)), catalog
        )
        assert len(instances) == 9
        assert [c for _, c in report.steps] == [12, 9, 9]
        assert all(i.prediction_date.day >= 28 for i in instances)

    def test_minor_yields_nothing(self, catalog):
        months = [date(2018, m, 1) for m in range(1, 13)]
        t = make_timeline("kid", birth_date=date(2001, 6, 15), covered_months=months)
        instances, _ = build_monthly_cohort(
            {"kid": t}, (date(2018, 1, 1), date(2018, 12, 1)), catalog
        )
        assert instances == []

    def test_single_covered_month_yields_nothing(self, catalog):
        t = make_timeline("p1", birth_date=date(1980, 1, 1), covered_months=[date(2018, 5, 1)])
        instances, _ = build_monthly_cohort(
            {"p1": t}, (date(2018, 1, 1), date(2018, 12, 1)), catalog
        )
        assert instances == []

    def test_post_window_never_exceeds_eligibility(self, catalog):
        months = [date(2018, m, 1) for m in (1, 2, 3, 4, 7, 8, 9, 10)]
        t = make_timeline("p1", birth_date=date(1980, 1, 1), covered_months=months)
        instances, _ = build_monthly_cohort(
            {"p1": t}, (date(2018, 1, 1), date(2018, 12, 1)), catalog
        )
        covered = t.covered_months()
        from c19risk.dates import add_months, month_start

        for inst in instances:
            m = month_start(inst.prediction_date)
            for k in (1, 2, 3):
                assert add_months(m, k) in covered

    def test_label_from_following_window(self, catalog):
        months = [date(2018, m, 1) for m in range(1, 13)]
        t = make_timeline(
            "p1",
            birth_date=date(1980, 1, 1),
            covered_months=months,
            claims=[(date(2018, 6, 10), "inpatient", ["J189"])],
        )
        instances, _ = build_monthly_cohort(
            {"p1": t}, (date(2018, 1, 1), date(2018, 12, 1)), catalog
        )
        by_month = {i.prediction_date.month: i.label for i in instances}
        assert by_month[3] is True  # 3/31 window reaches 6/30
        assert by_month[5] is True
        assert by_month[6] is False  # claim on 6/10 predates the 6/30 prediction date
        assert by_month[2] is False  # 2/28 window ends 5/28, before the claim


def _instances(n, prefix="p", label=False, age=50):
    return [
        PredictionInstance(f"{prefix}{i}", date(2018, 1, 31), label, age, "monthly")
        for i in range(n)
    ]


class TestSplitByPerson:
    def test_all_instances_of_a_person_stay_together(self):
        insts = []
        for i in range(30):
            for m in range(1, 10):
                insts.append(
                    PredictionInstance(f"p{i}", date(2018, m, 28), False, 40, "monthly")
                )
        train, test = split_by_person(insts, 0.2, seed=1)
        overlap = {i.person_id for i in train} & {i.person_id for i in test}
        assert overlap == set()
        assert len(train) + len(test) == len(insts)
        for side in (train, test):
            counts = {}
            for i in side:
                counts[i.person_id] = counts.get(i.person_id, 0) + 1
            assert all(v == 9 for v in counts.values())

    def test_same_seed_same_split(self):
        insts = _instances(500)
        assert split_by_person(insts, 0.2, seed=9) == split_by_person(insts, 0.2, seed=9)

    def test_different_seed_differs(self):
        insts = _instances(500)
        assert split_by_person(insts, 0.2, seed=1) != split_by_person(insts, 0.2, seed=2)

    def test_share_close_to_fraction_on_10k_persons(self):
        insts = _instances(10_000)
        train, test = split_by_person(insts, 0.2, seed=7)
        share = len(test) / len(insts)
        assert 0.18 <= share <= 0.22

    def test_fraction_bounds(self):
        with pytest.raises(ValueError):
            split_by_person([], 0.0)
        with pytest.raises(ValueError):
            split_by_person([], 1.0)


class TestComputeSamplingCounts:
    def test_worked_instance_is_exact(self):
        counts = compute_sampling_counts(790, 819, 500_000, 20_181, 0.21, 3.9)
        assert counts.keep_neg_under == 78_210
        assert counts.keep_neg_over == 20_181
        assert counts.keep_pos_under == 790
        assert counts.keep_pos_over == 819
        total = counts.total_under + counts.total_over
        assert Fraction(counts.total_over, total) == Fraction(21, 100)
        prev_ratio = Fraction(counts.keep_pos_over, counts.total_over) / Fraction(
            counts.keep_pos_under, counts.total_under
        )
        assert prev_ratio == Fraction(39, 10)

    def test_symmetry(self):
        counts = compute_sampling_counts(10, 10, 100, 100, 0.5, 1.0)
        assert counts.keep_neg_under == counts.keep_neg_over == 100
        assert counts.keep_pos_under == counts.keep_pos_over == 10

    def test_zero_negatives_off_target_infeasible(self):
        with pytest.raises(Infeasible):
            compute_sampling_counts(10, 20, 0, 0, 0.21, 3.9)

    def test_downsamples_overrepresented_positives(self):
        # consistency requires pos_over == 3.9 * (21/79) * pos_under ~= 819
        counts = compute_sampling_counts(790, 2_000, 500_000, 500_000, 0.21, 3.9)
        assert counts.keep_pos_under == 790
        assert counts.keep_pos_over == 819

    def test_downsamples_underrepresented_side(self):
        counts = compute_sampling_counts(2_000, 819, 500_000, 500_000, 0.21, 3.9)
        assert counts.keep_pos_over == 819
        assert counts.keep_pos_under == 790

    @settings(max_examples=120, deadline=None)
    @given(
        # rounding a positive count to an integer costs up to 0.5/count in the
        # ratio, so the 0.5% contract needs a few hundred positives per side
        pos_under=st.integers(200, 3_000),
        pos_over=st.integers(200, 3_000),
        neg_under=st.integers(100_000, 800_000),
        neg_over=st.integers(100_000, 800_000),
    )
    def test_targets_met_within_half_percent(self, pos_under, pos_over, neg_under, neg_over):
        try:
            counts = compute_sampling_counts(pos_under, pos_over, neg_under, neg_over)
        except Infeasible:
            return
        total = counts.total_under + counts.total_over
        elder_share = counts.total_over / total
        assert abs(elder_share - 0.21) / 0.21 <= 0.005
        if counts.keep_pos_under and counts.keep_pos_over:
            prev_ratio = (counts.keep_pos_over / counts.total_over) / (
                counts.keep_pos_under / counts.total_under
            )
            assert abs(prev_ratio - 3.9) / 3.9 <= 0.005
        # never keeps more than available
        assert counts.keep_neg_under <= neg_under
        assert counts.keep_neg_over <= neg_over
        assert counts.keep_pos_under <= pos_under
        assert counts.keep_pos_over <= pos_over


class TestBuildCombinedTraining:
    def _pool(self):
        cms = (
            _instances(8, "cmspos_", label=True, age=70)
            + _instances(2_000, "cmsneg_", label=False, age=70)
        )
        hf = (
            _instances(10, "hfpos_", label=True, age=40)
            + _instances(6_000, "hfneg_", label=False, age=40)
        )
        return cms, hf

    def test_deterministic_for_seed(self):
        cms, hf = self._pool()
        a = build_combined_training(cms, hf, seed=5)
        b = build_combined_training(cms, hf, seed=5)
        assert a == b

    def test_seed_changes_sample(self):
        cms, hf = self._pool()
        assert build_combined_training(cms, hf, seed=5) != build_combined_training(
            cms, hf, seed=6
        )

    def test_elder_share_hits_target(self):
        cms, hf = self._pool()
        out = build_combined_training(cms, hf, seed=5)
        elder = sum(1 for i in out if i.age_years >= 65)
        assert abs(elder / len(out) - 0.21) <= 0.01

    def test_all_positives_kept_when_solvable(self):
        # choose counts already consistent: pos_over = 3.9*(21/79)*pos_under
        cms = _instances(819, "cmspos_", label=True, age=70) + _instances(
            30_000, "cmsneg_", label=False, age=70
        )
        hf = _instances(790, "hfpos_", label=True, age=40) + _instances(
            90_000, "hfneg_", label=False, age=40
        )
        out = build_combined_training(cms, hf, seed=3)
        positives = [i for i in out if i.label]
        assert len(positives) == 819 + 790


class TestInstanceSerialization:
    def test_round_trip(self, tmp_path):
        insts = [
            PredictionInstance("p1", date(2016, 9, 30), True, 71, "fixed_date"),
            PredictionInstance("p2", date(2018, 1, 31), False, 44, "monthly"),
        ]
        path = tmp_path / "instances.csv"
        write_instances(insts, path)
        assert read_instances(path) == insts

    def test_report_csv(self, tmp_path):
        report = CohortReport([("total", 6), ("filtered", 2)])
        path = tmp_path / "report.csv"
        write_cohort_report(report, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "selection_criteria,population_remaining"
        assert lines[2] == "filtered,2"

    def test_report_rejects_increasing_counts(self):
        with pytest.raises(ValueError):
            CohortReport([("a", 2), ("b", 5)])
