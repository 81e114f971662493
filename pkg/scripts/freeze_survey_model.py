#!/usr/bin/env python3
"""Regenerates src/c19risk/data/survey_model.json.

The coefficients come from data/survey_coefficients.csv; the percentile map
is the score distribution of a fixed-seed synthetic calibration population
(the real training distribution is not redistributable). Rerunning is
byte-stable.
"""

import csv
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from c19risk.codes import load_bundled_catalog
from c19risk.features import SURVEY_FEATURE_NAMES, extract_survey_features
from c19risk.ingest import assemble_timelines, parse_claims, parse_demographics, parse_eligibility
from c19risk.models import LogisticModel, fit_percentile_map, save_model
from c19risk.models.logistic import score_logistic_matrix
from c19risk.synth import SynthConfig, generate_population

CALIBRATION_SEED = 20200407
CALIBRATION_N = 20000
PERCENTILE_POINTS = 5001


def load_frozen_coefficients() -> LogisticModel:
    path = ROOT / "src" / "c19risk" / "data" / "survey_coefficients.csv"
    values: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            values[row["feature"]] = float(row["coefficient"])
    intercept = values.pop("intercept")
    coefficients = np.array([values[name] for name in SURVEY_FEATURE_NAMES])
    return LogisticModel(
        feature_names=SURVEY_FEATURE_NAMES,
        coefficients=coefficients,
        intercept=intercept,
        model_version="survey-table3-v1",
    )


def main() -> None:
    import tempfile

    model = load_frozen_coefficients()
    with tempfile.TemporaryDirectory() as tmp:
        cfg = SynthConfig(
            n_persons=CALIBRATION_N, seed=CALIBRATION_SEED, outcome_model=model
        )
        out = generate_population(cfg, tmp)
        claims, _ = parse_claims(out.claims_path)
        spans, _ = parse_eligibility(out.eligibility_path)
        demos, _ = parse_demographics(out.demographics_path)
        timelines, _ = assemble_timelines(claims, spans, demos)
        catalog = load_bundled_catalog()
        X = np.array(
            [
                extract_survey_features(t, cfg.prediction_date, catalog).as_array(
                    SURVEY_FEATURE_NAMES
                )
                for _, t in sorted(timelines.items())
            ]
        )
    scores = score_logistic_matrix(model, X)
    full_map = fit_percentile_map(scores)
    # evenly spaced order statistics keep the artifact small
    idx = np.linspace(0, len(full_map) - 1, PERCENTILE_POINTS).round().astype(int)
    model.percentiles = full_map[idx]

    target = ROOT / "src" / "c19risk" / "data" / "survey_model.json"
    save_model(model, target)
    print(f"wrote {target} ({target.stat().st_size} bytes, {PERCENTILE_POINTS} percentile points)")


if __name__ == "__main__":
    main()
