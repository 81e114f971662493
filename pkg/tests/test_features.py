import io
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from c19risk.features import (
    CONDITION_NAMES,
    SURVEY_FEATURE_NAMES,
    FeatureMatrixWriter,
    FeatureVector,
    SurveyAnswers,
    answers_to_features,
    ccsr_feature_names,
    charlson_index,
    extract_ccsr_indicators,
    extract_survey_features,
    load_charlson_weights,
    read_feature_matrix,
)
from c19risk.synth import CONDITION_CODE_POOLS

from conftest import make_timeline

PRED = date(2016, 9, 30)


def test_survey_schema_has_38_features():
    assert len(SURVEY_FEATURE_NAMES) == 38
    assert len(CONDITION_NAMES) == 17


class TestExtractSurveyFeatures:
    def test_empty_history_70yo_male(self, catalog):
        t = make_timeline(birth_date=date(1946, 9, 1), gender="male")
        v = extract_survey_features(t, PRED, catalog)
        assert v.values["age"] == 70.0
        assert v.values["gender_male"] == 1.0
        nonzero = {k: x for k, x in v.values.items() if x != 0.0}
        assert nonzero == {"age": 70.0, "gender_male": 1.0}

    def test_asthma_indicator_and_interaction(self, catalog):
        t = make_timeline(
            birth_date=date(1946, 9, 1),
            claims=[(PRED - timedelta(days=30), "office", ["J45909"])],
        )
        v = extract_survey_features(t, PRED, catalog)
        assert v.values["asthma"] == 1.0
        assert v.values["asthma_x_age"] == 70.0

    def test_claim_13_months_before_ignored(self, catalog):
        t = make_timeline(
            birth_date=date(1946, 9, 1),
            claims=[(date(2015, 8, 20), "office", ["J45909"])],
        )
        v = extract_survey_features(t, PRED, catalog)
        assert v.values["asthma"] == 0.0

    def test_window_boundary_inclusive(self, catalog):
        t = make_timeline(
            claims=[
                (date(2015, 9, 30), "office", ["J45909"]),  # exactly 12 months back
                (PRED, "office", ["E6601"]),  # on the prediction date
            ]
        )
        v = extract_survey_features(t, PRED, catalog)
        assert v.values["asthma"] == 1.0
        assert v.values["obesity"] == 1.0

    def test_utilization_counts_distinct_claims(self, catalog):
        t = make_timeline(
            claims=[
                (PRED - timedelta(days=10), "inpatient", ["M542"]),
                (PRED - timedelta(days=40), "inpatient", ["M542"]),
                (PRED - timedelta(days=70), "er", ["K219"]),
                (PRED - timedelta(days=100), "office", ["M542"]),
            ]
        )
        v = extract_survey_features(t, PRED, catalog)
        assert v.values["prior_admissions"] == 2.0
        assert v.values["prior_er_visits"] == 1.0

    def test_prefix_groups_cancer_and_pregnancy(self, catalog):
        t = make_timeline(
            gender="female",
            birth_date=date(1986, 1, 1),
            claims=[
                (PRED - timedelta(days=5), "office", ["C3490"]),
                (PRED - timedelta(days=6), "office", ["O0990"]),
            ],
        )
        v = extract_survey_features(t, PRED, catalog)
        assert v.values["cancer"] == 1.0
        assert v.values["pregnancy"] == 1.0

    def test_monotone_in_claims(self, catalog):
        base = make_timeline(claims=[(PRED - timedelta(days=9), "office", ["I10"])])
        more = make_timeline(
            claims=[
                (PRED - timedelta(days=9), "office", ["I10"]),
                (PRED - timedelta(days=8), "office", ["N184"]),
            ]
        )
        v1 = extract_survey_features(base, PRED, catalog)
        v2 = extract_survey_features(more, PRED, catalog)
        for name in CONDITION_NAMES:
            assert v2.values[name] >= v1.values[name]


class TestAnswersEquivalence:
    def test_no_condition_answers_match_empty_history(self, catalog):
        t = make_timeline(birth_date=date(1946, 9, 1), gender="male")
        extracted = extract_survey_features(t, PRED, catalog)
        answered = answers_to_features(SurveyAnswers(age_years=70, gender="male"))
        assert extracted.values == answered.values
        assert extracted.names == answered.names

    def test_answer_flags_map_to_indicators(self):
        v = answers_to_features(SurveyAnswers(age_years=40, gender="female", asthma=True))
        assert v.values["asthma"] == 1.0
        assert v.values["asthma_x_age"] == 40.0

    def test_counts_pass_through(self):
        v = answers_to_features(
            SurveyAnswers(age_years=40, gender="female", prior_admissions=2)
        )
        assert v.values["prior_admissions"] == 2.0

    def test_age_bounds_enforced(self):
        with pytest.raises(ValueError):
            SurveyAnswers(age_years=17, gender="male")
        with pytest.raises(ValueError):
            SurveyAnswers(age_years=121, gender="male")
        with pytest.raises(ValueError):
            SurveyAnswers(age_years=40, gender="male", prior_er_visits=-1)

    @settings(max_examples=30, deadline=None)
    @given(
        age=st.integers(min_value=18, max_value=95),
        male=st.booleans(),
        flags=st.lists(st.sampled_from(CONDITION_NAMES), max_size=5, unique=True),
        adm=st.integers(min_value=0, max_value=3),
        er=st.integers(min_value=0, max_value=3),
    )
    def test_extraction_equals_answers_on_generated_history(
        self, catalog, age, male, flags, adm, er
    ):
        # build a timeline realizing exactly these answers, then extract
        claims = []
        day = 1
        for name in flags:
            code = CONDITION_CODE_POOLS[name][0]
            claims.append((PRED - timedelta(days=day), "office", [code]))
            day += 7
        for _ in range(adm):
            claims.append((PRED - timedelta(days=day), "inpatient", ["M542"]))
            day += 7
        for _ in range(er):
            claims.append((PRED - timedelta(days=day), "er", ["K219"]))
            day += 7
        t = make_timeline(
            birth_date=date(PRED.year - age, 1, 1),
            gender="male" if male else "female",
            claims=claims,
        )
        answers = SurveyAnswers(
            age_years=age,
            gender="male" if male else "female",
            prior_admissions=adm,
            prior_er_visits=er,
            **{name: True for name in flags},
        )
        assert extract_survey_features(t, PRED, catalog).values == answers_to_features(answers).values

    def test_every_interaction_is_indicator_times_age(self, catalog):
        v = answers_to_features(
            SurveyAnswers(age_years=63, gender="male", diabetes=True, cancer=True)
        )
        for name in CONDITION_NAMES:
            assert v.values[f"{name}_x_age"] == v.values[name] * v.values["age"]


class TestCcsrIndicators:
    def test_recent_claim_excluded_by_delay(self, catalog):
        t = make_timeline(claims=[(PRED - timedelta(days=60), "office", ["J189"])])
        v = extract_ccsr_indicators(t, PRED, catalog)
        assert v.values["RSP002"] == 0.0

    def test_six_months_back_included(self, catalog):
        t = make_timeline(claims=[(date(2016, 3, 30), "office", ["J189"])])
        v = extract_ccsr_indicators(t, PRED, catalog)
        assert v.values["RSP002"] == 1.0

    def test_sixteen_months_back_excluded(self, catalog):
        t = make_timeline(claims=[(date(2015, 5, 30), "office", ["J189"])])
        v = extract_ccsr_indicators(t, PRED, catalog)
        assert v.values["RSP002"] == 0.0

    def test_window_edges(self, catalog):
        # start [-15m] inclusive, end [-3m) exclusive
        at_start = make_timeline(claims=[(date(2015, 6, 30), "office", ["J189"])])
        at_end = make_timeline(claims=[(date(2016, 6, 30), "office", ["J189"])])
        assert extract_ccsr_indicators(at_start, PRED, catalog).values["RSP002"] == 1.0
        assert extract_ccsr_indicators(at_end, PRED, catalog).values["RSP002"] == 0.0
        just_inside = make_timeline(claims=[(date(2016, 6, 29), "office", ["J189"])])
        assert extract_ccsr_indicators(just_inside, PRED, catalog).values["RSP002"] == 1.0

    def test_vector_length_constant_across_persons(self, catalog):
        t1 = make_timeline()
        t2 = make_timeline(claims=[(date(2016, 3, 1), "office", ["J189", "I10"])])
        v1 = extract_ccsr_indicators(t1, PRED, catalog)
        v2 = extract_ccsr_indicators(t2, PRED, catalog)
        assert v1.names == v2.names == ccsr_feature_names(catalog)


class TestCharlson:
    def test_no_claims_is_zero(self):
        assert charlson_index(make_timeline(), PRED) == 0

    def test_uncomplicated_diabetes_scores_one(self):
        t = make_timeline(claims=[(PRED - timedelta(days=15), "office", ["E119"])])
        assert charlson_index(t, PRED) == 1

    def test_two_groups_add(self):
        # diabetes without complication (1) + renal disease (2)
        t = make_timeline(
            claims=[
                (PRED - timedelta(days=15), "office", ["E119"]),
                (PRED - timedelta(days=16), "office", ["N184"]),
            ]
        )
        assert charlson_index(t, PRED) == 3

    def test_one_group_counted_once(self):
        t = make_timeline(
            claims=[
                (PRED - timedelta(days=15), "office", ["E119"]),
                (PRED - timedelta(days=16), "office", ["E109"]),
            ]
        )
        assert charlson_index(t, PRED) == 1

    def test_old_claims_ignored(self):
        t = make_timeline(claims=[(PRED - timedelta(days=400), "office", ["E119"])])
        assert charlson_index(t, PRED) == 0

    def test_weight_table_loads(self):
        table = load_charlson_weights()
        weights = {g.condition: g.weight for g in table}
        assert weights["metastatic_solid_tumor"] == 6
        assert weights["aids_hiv"] == 6
        assert weights["diabetes_without_complication"] == 1


class TestFeatureVectorAndMatrix:
    def test_non_finite_values_rejected(self):
        with pytest.raises(ValueError):
            FeatureVector("s", {"a": float("nan")})
        with pytest.raises(ValueError):
            FeatureVector("s", {"a": float("inf")})

    def test_matrix_round_trip(self, catalog):
        t = make_timeline(claims=[(PRED - timedelta(days=3), "office", ["J45909"])])
        v = extract_survey_features(t, PRED, catalog)
        buf = io.StringIO()
        writer = FeatureMatrixWriter(buf, SURVEY_FEATURE_NAMES)
        writer.write_row("p1", PRED, 1, v)
        writer.write_row("p2", PRED, 0, v)
        buf.seek(0)
        matrix = read_feature_matrix(buf)
        assert matrix.feature_names == list(SURVEY_FEATURE_NAMES)
        assert matrix.person_ids == ["p1", "p2"]
        assert matrix.labels.tolist() == [1, 0]
        assert np.array_equal(matrix.X[0], v.as_array(SURVEY_FEATURE_NAMES))
