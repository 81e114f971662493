"""Synthetic claims generator with planted risk structure.

Persons get independent condition indicators, utilization counts, and
demographics; the proxy-outcome admission is planted with the probability
the frozen questionnaire model assigns to exactly those features. Condition
claims draw codes that map into one survey group and nothing else, so
feature extraction recovers the planted indicators bit-for-bit and
model-recovery experiments have exact ground truth.

All randomness is drawn up front from one seeded generator; output files
are byte-identical across runs with the same config.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Optional

import numpy as np

from .dates import add_months, age_years, format_month, month_start
from .features import CONDITION_NAMES, SURVEY_FEATURE_NAMES
from .models import LogisticModel, load_bundled_survey_model
from .models.logistic import sigmoid

# Codes per condition chosen so each maps into its own survey group only.
CONDITION_CODE_POOLS: dict[str, tuple[str, ...]] = {
    "copd_emphysema": ("J440", "J441", "J449", "J439", "J410", "E840", "E849"),
    "asthma": ("J4520", "J4540", "J45909", "J45990"),
    "obesity": ("E6601", "E6609", "E669", "Z6841"),
    "diabetes": ("E109", "E119", "E1165", "E139", "E089"),
    "hypertension": ("I10", "I119", "I129", "I150", "I160"),
    "congestive_heart_failure": ("I509", "I5020", "I5030", "I501"),
    "myocardial_infarction": ("I214", "I2109", "I220", "I252", "I249"),
    "rheumatic_heart_disease": ("I050", "I059", "I019", "I330", "I340", "I350", "I369"),
    "stroke": ("I6300", "I639", "I6529", "I669", "I6789"),
    "sickle_cell_hiv_transplant": ("D571", "D5700", "B20", "Z940", "Z944"),
    "chronic_kidney_disease": ("N1830", "N184", "N185", "N189"),
    "hemodialysis": ("Z992", "Z4901", "Z4931"),
    "liver_disease": ("K7030", "K7460", "K769", "K730", "K700"),
    "respiratory_infection": ("J189", "J159", "J101", "J111", "J209", "J219", "J069", "J029"),
    "cancer": ("C3490", "C50911", "C189", "C9100", "C7800"),
    "neurocognitive": ("G309", "F0150", "F0390", "G3183", "I6990", "I959"),
    "pregnancy": ("O0990", "Z3490", "O24410", "O80", "O2690"),
}

# Mapped in the catalog but outside every survey group and the proxy set.
NEUTRAL_CODE_POOL: tuple[str, ...] = (
    "M542", "M549", "M25511", "K219", "K2970", "K5900", "N390", "N3000",
    "H6690", "L0390", "L309", "H109", "Z0000", "G43909", "E039", "J309",
    "A499", "B349",
)

# Outcome admissions: literal ARDS code plus proxy-category respiratory codes.
PROXY_CODE_POOL: tuple[str, ...] = (
    "J80", "J189", "J150", "J129", "J101", "J09X2", "J209", "J219", "J069", "J040",
)

PREGNANCY_MAX_AGE = 50

DEFAULT_PREVALENCES: dict[str, float] = {
    "copd_emphysema": 0.08,
    "asthma": 0.09,
    "obesity": 0.12,
    "diabetes": 0.15,
    "hypertension": 0.30,
    "congestive_heart_failure": 0.06,
    "myocardial_infarction": 0.04,
    "rheumatic_heart_disease": 0.02,
    "stroke": 0.04,
    "sickle_cell_hiv_transplant": 0.02,
    "chronic_kidney_disease": 0.07,
    "hemodialysis": 0.015,
    "liver_disease": 0.04,
    "respiratory_infection": 0.08,
    "cancer": 0.08,
    "neurocognitive": 0.05,
    "pregnancy": 0.10,  # women up to age 50 only; the marginal rate is lower
}


@dataclass
class SynthConfig:
    n_persons: int = 1000
    elder_fraction: float = 0.21
    condition_prevalences: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_PREVALENCES)
    )
    outcome_model: Optional[LogisticModel] = None  # None -> bundled frozen model
    months_of_history: int = 15
    prediction_date: date = date(2019, 9, 30)
    mean_prior_admissions: float = 0.15
    mean_prior_er_visits: float = 0.30
    seed: int = 0

    def __post_init__(self):
        if self.n_persons < 1:
            raise ValueError("n_persons must be >= 1")
        for name, p in self.condition_prevalences.items():
            if name not in CONDITION_CODE_POOLS:
                raise ValueError(f"unknown condition {name!r}")
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"prevalence for {name} must be in [0, 1]")


@dataclass(frozen=True)
class SynthOutput:
    claims_path: Path
    eligibility_path: Path
    demographics_path: Path
    truth_path: Path


def generate_population(config: SynthConfig, out_dir) -> SynthOutput:
    """Write claims/eligibility/demographics/truth CSVs for one population."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = config.outcome_model or load_bundled_survey_model()
    if tuple(model.feature_names) != SURVEY_FEATURE_NAMES:
        raise ValueError("outcome model must use the survey feature schema")

    n = config.n_persons
    pred = config.prediction_date
    rng = np.random.default_rng(config.seed)

    # person-level draws, all up front and in a fixed order
    elder = rng.random(n) < config.elder_fraction
    age = np.where(
        elder, rng.integers(65, 96, size=n), rng.integers(18, 65, size=n)
    ).astype(np.int64)
    birth_offset = rng.integers(0, 361, size=n)  # margin keeps age exact at pred
    male = rng.random(n) < 0.5
    prevalences = np.array(
        [config.condition_prevalences.get(c, 0.0) for c in CONDITION_NAMES]
    )
    conditions = rng.random((n, len(CONDITION_NAMES))) < prevalences[None, :]
    preg_col = CONDITION_NAMES.index("pregnancy")
    conditions[:, preg_col] &= (~male) & (age <= PREGNANCY_MAX_AGE)
    n_adm = rng.poisson(config.mean_prior_admissions, size=n)
    n_er = rng.poisson(config.mean_prior_er_visits, size=n)

    # outcome probability from the planted features
    X = np.empty((n, len(SURVEY_FEATURE_NAMES)), dtype=np.float64)
    X[:, 0] = age
    X[:, 1] = male
    X[:, 2] = n_adm
    X[:, 3] = n_er
    X[:, 4 : 4 + len(CONDITION_NAMES)] = conditions
    X[:, 4 + len(CONDITION_NAMES) :] = conditions * age[:, None]
    probs = sigmoid(model.intercept + X @ model.coefficients)
    outcome = rng.random(n) < probs

    # per-claim draws: up to 3 claims per positive condition
    cond_claim_counts = rng.integers(1, 4, size=(n, len(CONDITION_NAMES)))
    cond_offsets = rng.integers(0, 365, size=(n, len(CONDITION_NAMES), 3))
    cond_code_idx = np.empty((n, len(CONDITION_NAMES), 3), dtype=np.int64)
    for c, name in enumerate(CONDITION_NAMES):
        cond_code_idx[:, c, :] = rng.integers(0, len(CONDITION_CODE_POOLS[name]), size=(n, 3))
    adm_offsets = rng.integers(0, 365, size=int(n_adm.sum()))
    adm_code_idx = rng.integers(0, len(NEUTRAL_CODE_POOL), size=int(n_adm.sum()))
    er_offsets = rng.integers(0, 365, size=int(n_er.sum()))
    er_code_idx = rng.integers(0, len(NEUTRAL_CODE_POOL), size=int(n_er.sum()))
    outcome_offsets = rng.integers(1, 86, size=n)  # always inside the 3-month window
    outcome_code_idx = rng.integers(0, len(PROXY_CODE_POOL), size=n)
    outcome_observation = rng.random(n) < 0.2  # some stays are observation, most inpatient

    adm_base = np.concatenate([[0], np.cumsum(n_adm)])
    er_base = np.concatenate([[0], np.cumsum(n_er)])

    months = [
        add_months(month_start(pred), k)
        for k in range(-(config.months_of_history - 1), 4)
    ]
    month_texts = [format_month(m) for m in months]

    paths = SynthOutput(
        claims_path=out / "claims.csv",
        eligibility_path=out / "eligibility.csv",
        demographics_path=out / "demographics.csv",
        truth_path=out / "truth.csv",
    )
    with (
        open(paths.claims_path, "w", newline="", encoding="utf-8") as claims_fh,
        open(paths.eligibility_path, "w", newline="", encoding="utf-8") as elig_fh,
        open(paths.demographics_path, "w", newline="", encoding="utf-8") as demo_fh,
        open(paths.truth_path, "w", newline="", encoding="utf-8") as truth_fh,
    ):
        claims = csv.writer(claims_fh, lineterminator="\n")
        elig = csv.writer(elig_fh, lineterminator="\n")
        demo = csv.writer(demo_fh, lineterminator="\n")
        truth = csv.writer(truth_fh, lineterminator="\n")
        claims.writerow(["person_id", "claim_id", "from_date", "claim_type", "diagnoses"])
        elig.writerow(["person_id", "month", "covered"])
        demo.writerow(["person_id", "birth_date", "gender", "death_date"])
        truth.writerow(["person_id", "generating_probability", "planted_outcome"])

        for i in range(n):
            pid = f"p{i:06d}"
            birth = add_months(pred, -12 * int(age[i])) - timedelta(days=int(birth_offset[i]))
            assert age_years(birth, pred) == int(age[i])
            demo.writerow([pid, birth.isoformat(), "M" if male[i] else "F", ""])
            for text in month_texts:
                elig.writerow([pid, text, 1])

            claim_no = 0
            for c, name in enumerate(CONDITION_NAMES):
                if not conditions[i, c]:
                    continue
                pool = CONDITION_CODE_POOLS[name]
                for k in range(int(cond_claim_counts[i, c])):
                    claim_no += 1
                    from_date = pred - timedelta(days=int(cond_offsets[i, c, k]))
                    code = pool[int(cond_code_idx[i, c, k])]
                    claims.writerow([pid, f"{pid}-c{claim_no}", from_date.isoformat(), "office", code])
            for k in range(int(n_adm[i])):
                claim_no += 1
                j = int(adm_base[i]) + k
                from_date = pred - timedelta(days=int(adm_offsets[j]))
                code = NEUTRAL_CODE_POOL[int(adm_code_idx[j])]
                claims.writerow([pid, f"{pid}-c{claim_no}", from_date.isoformat(), "inpatient", code])
            for k in range(int(n_er[i])):
                claim_no += 1
                j = int(er_base[i]) + k
                from_date = pred - timedelta(days=int(er_offsets[j]))
                code = NEUTRAL_CODE_POOL[int(er_code_idx[j])]
                claims.writerow([pid, f"{pid}-c{claim_no}", from_date.isoformat(), "er", code])
            if outcome[i]:
                claim_no += 1
                from_date = pred + timedelta(days=int(outcome_offsets[i]))
                code = PROXY_CODE_POOL[int(outcome_code_idx[i])]
                claim_type = "observation" if outcome_observation[i] else "inpatient"
                claims.writerow([pid, f"{pid}-c{claim_no}", from_date.isoformat(), claim_type, code])

            truth.writerow([pid, repr(float(probs[i])), int(outcome[i])])

    return paths


@dataclass
class PopulationSummary:
    n_persons: int
    n_claims: int
    n_eligibility_rows: int
    elder_share: float
    age_bands: dict[str, int]
    outcome_rate_by_band: Optional[dict[str, float]] = None
    mean_generating_probability: Optional[float] = None
    outcome_rate: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "n_persons": self.n_persons,
            "n_claims": self.n_claims,
            "n_eligibility_rows": self.n_eligibility_rows,
            "elder_share": self.elder_share,
            "age_bands": self.age_bands,
            "outcome_rate_by_band": self.outcome_rate_by_band,
            "mean_generating_probability": self.mean_generating_probability,
            "outcome_rate": self.outcome_rate,
        }


AGE_BANDS = ((18, 44), (45, 64), (65, 79), (80, 200))


def _band_name(age: int) -> str:
    for lo, hi in AGE_BANDS:
        if lo <= age <= hi:
            return f"{lo}-{hi}" if hi < 200 else f"{lo}+"
    return "<18"


def describe_population(
    claims_path,
    eligibility_path,
    demographics_path,
    truth_path=None,
    as_of: Optional[date] = None,
) -> PopulationSummary:
    """Recount a generated (or real) population directly from its files."""
    from .ingest import parse_claims, parse_demographics, parse_eligibility

    claims, _ = parse_claims(claims_path)
    spans, _ = parse_eligibility(eligibility_path)
    demos, _ = parse_demographics(demographics_path)
    if as_of is None:
        as_of = max((c.from_date for c in claims), default=date.today())

    bands: dict[str, int] = {}
    elder = 0
    ages = {}
    for d in demos:
        a = age_years(d.birth_date, as_of)
        ages[d.person_id] = a
        bands[_band_name(a)] = bands.get(_band_name(a), 0) + 1
        if a >= 65:
            elder += 1

    summary = PopulationSummary(
        n_persons=len(demos),
        n_claims=len(claims),
        n_eligibility_rows=len(spans),
        elder_share=elder / len(demos) if demos else 0.0,
        age_bands=dict(sorted(bands.items())),
    )
    if truth_path is not None:
        with open(truth_path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            probs, outcomes, band_hits, band_totals = [], [], {}, {}
            for row in reader:
                p = float(row["generating_probability"])
                y = int(row["planted_outcome"])
                probs.append(p)
                outcomes.append(y)
                band = _band_name(ages.get(row["person_id"], 0))
                band_totals[band] = band_totals.get(band, 0) + 1
                band_hits[band] = band_hits.get(band, 0) + y
        if probs:
            summary.mean_generating_probability = float(np.mean(probs))
            summary.outcome_rate = float(np.mean(outcomes))
            summary.outcome_rate_by_band = {
                band: band_hits[band] / band_totals[band] for band in sorted(band_totals)
            }
    return summary
