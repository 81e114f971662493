import csv
from datetime import date

import numpy as np
import pytest

from c19risk.codes import ProxyCodeSet, is_proxy_diagnosis
from c19risk.features import SURVEY_CONDITION_GROUPS
from c19risk.ingest import parse_claims, parse_demographics, parse_eligibility
from c19risk.synth import (
    CONDITION_CODE_POOLS,
    NEUTRAL_CODE_POOL,
    PROXY_CODE_POOL,
    SynthConfig,
    describe_population,
    generate_population,
)


def _read_all(paths):
    return {
        "claims": paths.claims_path.read_bytes(),
        "eligibility": paths.eligibility_path.read_bytes(),
        "demographics": paths.demographics_path.read_bytes(),
        "truth": paths.truth_path.read_bytes(),
    }


class TestCodePools:
    def test_condition_pools_are_pure(self, catalog):
        """Each pool code maps into its own survey group and no other."""
        groups = {g.name: g for g in SURVEY_CONDITION_GROUPS}
        for name, pool in CONDITION_CODE_POOLS.items():
            own = groups[name]
            others = [g for g in SURVEY_CONDITION_GROUPS if g.name != name]
            for code in pool:
                cats = catalog.categories_for(code)
                assert cats, f"{code} missing from the bundled catalog"
                assert own.matches(set(cats)), f"{code} does not evidence {name}"
                for other in others:
                    assert not other.matches(set(cats)), f"{code} leaks into {other.name}"

    def test_neutral_pool_is_mapped_but_groupless(self, catalog):
        proxy = ProxyCodeSet()
        for code in NEUTRAL_CODE_POOL:
            cats = catalog.categories_for(code)
            assert cats, f"{code} missing from the bundled catalog"
            for group in SURVEY_CONDITION_GROUPS:
                assert not group.matches(set(cats))
            assert not is_proxy_diagnosis(catalog, proxy, code)

    def test_proxy_pool_labels(self, catalog):
        proxy = ProxyCodeSet()
        for code in PROXY_CODE_POOL:
            assert is_proxy_diagnosis(catalog, proxy, code)


class TestGeneratePopulation:
    def test_same_seed_means_byte_identical_files(self, tmp_path):
        cfg = SynthConfig(n_persons=200, seed=99)
        a = generate_population(cfg, tmp_path / "a")
        b = generate_population(cfg, tmp_path / "b")
        assert _read_all(a) == _read_all(b)

    def test_different_seed_changes_output(self, tmp_path):
        a = generate_population(SynthConfig(n_persons=200, seed=1), tmp_path / "a")
        b = generate_population(SynthConfig(n_persons=200, seed=2), tmp_path / "b")
        assert _read_all(a) != _read_all(b)

    def test_zero_prevalences_leave_histories_clean(self, tmp_path, catalog):
        from c19risk.features import extract_survey_features, CONDITION_NAMES
        from c19risk.ingest import assemble_timelines

        cfg = SynthConfig(
            n_persons=60,
            seed=3,
            condition_prevalences={name: 0.0 for name in CONDITION_NAMES},
            mean_prior_admissions=0.0,
            mean_prior_er_visits=0.0,
        )
        paths = generate_population(cfg, tmp_path)
        claims, _ = parse_claims(paths.claims_path)
        spans, _ = parse_eligibility(paths.eligibility_path)
        demos, _ = parse_demographics(paths.demographics_path)
        timelines, _ = assemble_timelines(claims, spans, demos)
        for t in timelines.values():
            v = extract_survey_features(t, cfg.prediction_date, catalog)
            for name in CONDITION_NAMES:
                assert v.values[name] == 0.0

    def test_all_files_parse_cleanly(self, tmp_path):
        paths = generate_population(SynthConfig(n_persons=150, seed=5), tmp_path)
        for parse, path in (
            (parse_claims, paths.claims_path),
            (parse_eligibility, paths.eligibility_path),
            (parse_demographics, paths.demographics_path),
        ):
            _, errors = parse(path)
            assert errors == []

    def test_every_claim_code_is_in_catalog(self, tmp_path, catalog):
        paths = generate_population(SynthConfig(n_persons=150, seed=6), tmp_path)
        claims, _ = parse_claims(paths.claims_path)
        for claim in claims:
            for code in claim.diagnoses:
                assert catalog.categories_for(code), f"{code} not in catalog"

    def test_truth_probabilities_match_planted_rate(self, tmp_path):
        # statistical closure: empirical outcome rate tracks the mean
        # generating probability (checked against the truth file)
        paths = generate_population(SynthConfig(n_persons=100_000, seed=7), tmp_path)
        with open(paths.truth_path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        probs = np.array([float(r["generating_probability"]) for r in rows])
        outcomes = np.array([int(r["planted_outcome"]) for r in rows])
        assert abs(outcomes.mean() - probs.mean()) / probs.mean() <= 0.10

    def test_outcome_claims_fall_inside_window(self, tmp_path, catalog):
        cfg = SynthConfig(n_persons=300, seed=8)
        paths = generate_population(cfg, tmp_path)
        claims, _ = parse_claims(paths.claims_path)
        proxy = ProxyCodeSet()
        for claim in claims:
            is_outcome = claim.claim_type in ("inpatient", "observation") and any(
                is_proxy_diagnosis(catalog, proxy, c) for c in claim.diagnoses
            )
            if is_outcome and claim.from_date > cfg.prediction_date:
                assert claim.from_date <= date(2019, 12, 30)


class TestDescribePopulation:
    def test_counts_match_generation(self, tmp_path):
        cfg = SynthConfig(n_persons=1000, seed=11)
        paths = generate_population(cfg, tmp_path)
        summary = describe_population(
            paths.claims_path,
            paths.eligibility_path,
            paths.demographics_path,
            paths.truth_path,
            as_of=cfg.prediction_date,
        )
        assert summary.n_persons == 1000
        assert sum(summary.age_bands.values()) == 1000
        assert summary.outcome_rate is not None

    def test_elder_share_near_config(self, tmp_path):
        cfg = SynthConfig(n_persons=4000, seed=12, elder_fraction=0.21)
        paths = generate_population(cfg, tmp_path)
        summary = describe_population(
            paths.claims_path,
            paths.eligibility_path,
            paths.demographics_path,
            as_of=cfg.prediction_date,
        )
        assert abs(summary.elder_share - 0.21) <= 0.03

    def test_bad_config_rejected(self):
        with pytest.raises(ValueError):
            SynthConfig(n_persons=0)
        with pytest.raises(ValueError):
            SynthConfig(condition_prevalences={"asthma": 1.5})
        with pytest.raises(ValueError):
            SynthConfig(condition_prevalences={"nonsense": 0.5})
