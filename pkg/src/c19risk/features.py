"""Feature extraction: survey schema, CCSR indicator schema, Charlson score.

Three feature sets share one shape contract (named real values in a fixed
order per schema) so both model families score them interchangeably:

* survey: age, gender, prior utilization counts, 17 condition indicators
  mapped from CCSR categories, and indicator*age interactions. Uses claims
  from the 12 months up to and including the prediction date (no lag;
  questionnaires use current knowledge).
* ccsr: one 0/1 indicator per catalog category plus age and gender. Uses
  claims from 15 months back up to (but excluding) 3 months before the
  prediction date, simulating claims-processing delay.
* charlson: a single weighted comorbidity count over the 12-month window,
  used as the comparison baseline.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from datetime import date
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .codes import CcsrCatalog, body_system
from .dates import add_months, age_years
from .ingest import PersonTimeline

PathOrFile = Union[str, Path, io.TextIOBase]

SURVEY_SCHEMA_ID = "survey-v1"
CHARLSON_SCHEMA_ID = "charlson-v1"


@dataclass(frozen=True)
class ConditionGroup:
    """CCSR categories (and/or whole body-system prefixes) behind one question."""

    name: str
    categories: frozenset[str] = frozenset()
    prefixes: frozenset[str] = frozenset()

    def matches(self, claim_categories: set[str]) -> bool:
        if self.categories & claim_categories:
            return True
        if self.prefixes:
            return any(body_system(c) in self.prefixes for c in claim_categories)
        return False


SURVEY_CONDITION_GROUPS: tuple[ConditionGroup, ...] = (
    ConditionGroup("copd_emphysema", frozenset({"RSP008", "END012"})),
    ConditionGroup("asthma", frozenset({"RSP009"})),
    ConditionGroup("obesity", frozenset({"END009"})),
    ConditionGroup("diabetes", frozenset({"END002", "END003", "END004", "END005"})),
    ConditionGroup("hypertension", frozenset({"CIR007", "CIR008"})),
    ConditionGroup("congestive_heart_failure", frozenset({"CIR019"})),
    ConditionGroup("myocardial_infarction", frozenset({"CIR009", "CIR010"})),
    ConditionGroup(
        "rheumatic_heart_disease",
        frozenset({"CIR001", "CIR002", "CIR011", "CIR014", "CIR015"}),
    ),
    ConditionGroup("stroke", frozenset({"CIR020", "CIR021"})),
    ConditionGroup(
        "sickle_cell_hiv_transplant", frozenset({"BLD005", "INF006", "FAC023"})
    ),
    ConditionGroup("chronic_kidney_disease", frozenset({"GEN003"})),
    ConditionGroup("hemodialysis", frozenset({"GEN002"})),
    ConditionGroup("liver_disease", frozenset({"DIG019"})),
    ConditionGroup(
        "respiratory_infection", frozenset({"RSP002", "RSP003", "RSP005", "RSP006"})
    ),
    ConditionGroup("cancer", prefixes=frozenset({"NEO"})),
    ConditionGroup("neurocognitive", frozenset({"NVS011", "CIR022", "CIR025"})),
    ConditionGroup("pregnancy", prefixes=frozenset({"PRG"})),
)

CONDITION_NAMES = tuple(g.name for g in SURVEY_CONDITION_GROUPS)

SURVEY_FEATURE_NAMES: tuple[str, ...] = (
    ("age", "gender_male", "prior_admissions", "prior_er_visits")
    + CONDITION_NAMES
    + tuple(f"{name}_x_age" for name in CONDITION_NAMES)
)


@dataclass
class FeatureVector:
    """Named real-valued features in a deterministic order for one schema."""

    schema_id: str
    values: dict[str, float]

    def __post_init__(self):
        for name, v in self.values.items():
            if not math.isfinite(v):
                raise ValueError(f"non-finite feature {name}={v!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.values)

    def as_array(self, names: Iterable[str]) -> np.ndarray:
        return np.array([self.values.get(n, 0.0) for n in names], dtype=np.float64)


@dataclass(frozen=True)
class SurveyAnswers:
    """Questionnaire answers; one boolean per condition question."""

    age_years: int
    gender: str
    prior_admissions: int = 0
    prior_er_visits: int = 0
    copd_emphysema: bool = False
    asthma: bool = False
    obesity: bool = False
    diabetes: bool = False
    hypertension: bool = False
    congestive_heart_failure: bool = False
    myocardial_infarction: bool = False
    rheumatic_heart_disease: bool = False
    stroke: bool = False
    sickle_cell_hiv_transplant: bool = False
    chronic_kidney_disease: bool = False
    hemodialysis: bool = False
    liver_disease: bool = False
    respiratory_infection: bool = False
    cancer: bool = False
    neurocognitive: bool = False
    pregnancy: bool = False

    def __post_init__(self):
        if not 18 <= self.age_years <= 120:
            raise ValueError("age_years must be between 18 and 120")
        if self.gender not in ("male", "female", "unknown"):
            raise ValueError(f"bad gender {self.gender!r}")
        if self.prior_admissions < 0 or self.prior_er_visits < 0:
            raise ValueError("utilization counts must be >= 0")


def _window_categories_and_counts(
    timeline: PersonTimeline,
    catalog: CcsrCatalog,
    lo: date,
    hi: date,
    lo_inclusive: bool,
    hi_inclusive: bool,
) -> tuple[set[str], set[str], int, int]:
    """Scan one claims window once.

    Returns (categories seen, codes seen, distinct inpatient claims,
    distinct er claims).
    """
    categories: set[str] = set()
    seen_codes: set[str] = set()
    inpatient_ids: set[str] = set()
    er_ids: set[str] = set()
    for claim in timeline.claims:
        d = claim.from_date
        if d < lo or (d == lo and not lo_inclusive):
            continue
        if d > hi or (d == hi and not hi_inclusive):
            continue
        if claim.claim_type == "inpatient":
            inpatient_ids.add(claim.claim_id)
        elif claim.claim_type == "er":
            er_ids.add(claim.claim_id)
        for code in claim.diagnoses:
            seen_codes.add(code)
            categories.update(catalog.categories_for(code))
    return categories, seen_codes, len(inpatient_ids), len(er_ids)


def _survey_vector(
    age: int,
    gender_male: int,
    prior_admissions: int,
    prior_er_visits: int,
    indicators: dict[str, int],
) -> FeatureVector:
    values: dict[str, float] = {
        "age": float(age),
        "gender_male": float(gender_male),
        "prior_admissions": float(prior_admissions),
        "prior_er_visits": float(prior_er_visits),
    }
    for name in CONDITION_NAMES:
        values[name] = float(indicators[name])
    for name in CONDITION_NAMES:
        values[f"{name}_x_age"] = float(indicators[name]) * float(age)
    return FeatureVector(SURVEY_SCHEMA_ID, values)


def extract_survey_features(
    timeline: PersonTimeline,
    prediction_date: date,
    catalog: CcsrCatalog,
    groups: tuple[ConditionGroup, ...] = SURVEY_CONDITION_GROUPS,
) -> FeatureVector:
    """Survey-schema features from the year of claims before the prediction date."""
    lo = add_months(prediction_date, -12)
    categories, _, n_inpatient, n_er = _window_categories_and_counts(
        timeline, catalog, lo, prediction_date, lo_inclusive=True, hi_inclusive=True
    )
    indicators = {g.name: int(g.matches(categories)) for g in groups}
    demo = timeline.demographics
    return _survey_vector(
        age=age_years(demo.birth_date, prediction_date),
        gender_male=int(demo.gender == "male"),
        prior_admissions=n_inpatient,
        prior_er_visits=n_er,
        indicators=indicators,
    )


def answers_to_features(answers: SurveyAnswers) -> FeatureVector:
    """Same schema as extract_survey_features, built from questionnaire answers."""
    indicators = {name: int(getattr(answers, name)) for name in CONDITION_NAMES}
    return _survey_vector(
        age=answers.age_years,
        gender_male=int(answers.gender == "male"),
        prior_admissions=answers.prior_admissions,
        prior_er_visits=answers.prior_er_visits,
        indicators=indicators,
    )


def ccsr_schema_id(catalog: CcsrCatalog) -> str:
    return f"ccsr-{catalog.version}"


def ccsr_feature_names(catalog: CcsrCatalog) -> tuple[str, ...]:
    return ("age", "gender_male") + tuple(catalog.categories())


def extract_ccsr_indicators(
    timeline: PersonTimeline, prediction_date: date, catalog: CcsrCatalog
) -> FeatureVector:
    """One indicator per catalog category from the lagged claims window.

    The window is [prediction_date - 15 months, prediction_date - 3 months):
    the most recent 3 months are withheld to mimic claims-processing delay.
    """
    lo = add_months(prediction_date, -15)
    hi = add_months(prediction_date, -3)
    categories, _, _, _ = _window_categories_and_counts(
        timeline, catalog, lo, hi, lo_inclusive=True, hi_inclusive=False
    )
    demo = timeline.demographics
    values: dict[str, float] = {
        "age": float(age_years(demo.birth_date, prediction_date)),
        "gender_male": float(demo.gender == "male"),
    }
    for cat in catalog.categories():
        values[cat] = float(cat in categories)
    return FeatureVector(ccsr_schema_id(catalog), values)


# --- Charlson comorbidity baseline ---


@dataclass(frozen=True)
class CharlsonGroup:
    condition: str
    weight: int
    prefixes: tuple[str, ...]


def load_charlson_weights(source: Optional[PathOrFile] = None) -> tuple[CharlsonGroup, ...]:
    """Load the condition-prefix weight table (bundled table by default)."""
    if source is None:
        ref = resources.files("c19risk.data").joinpath("charlson_weights.csv")
        with ref.open("r", encoding="utf-8") as fh:
            return _read_charlson(fh)
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return _read_charlson(fh)
    return _read_charlson(source)


def _read_charlson(fh) -> tuple[CharlsonGroup, ...]:
    reader = csv.DictReader(fh)
    groups = []
    for row in reader:
        groups.append(
            CharlsonGroup(
                condition=row["condition"],
                weight=int(row["weight"]),
                prefixes=tuple(row["prefixes"].split("|")),
            )
        )
    return tuple(groups)


_BUNDLED_CHARLSON: Optional[tuple[CharlsonGroup, ...]] = None


def charlson_index(
    timeline: PersonTimeline,
    prediction_date: date,
    weight_table: Optional[tuple[CharlsonGroup, ...]] = None,
) -> int:
    """Sum of weights over distinct comorbidity groups evidenced in the prior year."""
    global _BUNDLED_CHARLSON
    if weight_table is None:
        if _BUNDLED_CHARLSON is None:
            _BUNDLED_CHARLSON = load_charlson_weights()
        weight_table = _BUNDLED_CHARLSON
    lo = add_months(prediction_date, -12)
    codes: set[str] = set()
    for claim in timeline.claims:
        if lo <= claim.from_date <= prediction_date:
            codes.update(claim.diagnoses)
    total = 0
    for group in weight_table:
        if any(code.startswith(p) for code in codes for p in group.prefixes):
            total += group.weight
    return total


def charlson_features(
    timeline: PersonTimeline,
    prediction_date: date,
    weight_table: Optional[tuple[CharlsonGroup, ...]] = None,
) -> FeatureVector:
    """Single-column schema so the baseline flows through the same evaluation path."""
    value = charlson_index(timeline, prediction_date, weight_table)
    return FeatureVector(CHARLSON_SCHEMA_ID, {"charlson_index": float(value)})


# --- feature matrix serialization ---

MATRIX_ID_COLUMNS = ["person_id", "prediction_date", "label"]


@dataclass
class FeatureMatrix:
    """Rows of one feature schema with instance identity and labels."""

    feature_names: list[str]
    person_ids: list[str]
    prediction_dates: list[date]
    labels: np.ndarray  # int8 0/1
    X: np.ndarray  # float64, shape (n, len(feature_names))

    def __len__(self) -> int:
        return len(self.person_ids)


class FeatureMatrixWriter:
    """Streams feature rows to CSV without holding the matrix in memory."""

    def __init__(self, sink: PathOrFile, feature_names: Iterable[str]):
        self.feature_names = list(feature_names)
        self._own = not isinstance(sink, io.TextIOBase)
        self._fh = open(sink, "w", newline="", encoding="utf-8") if self._own else sink
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(MATRIX_ID_COLUMNS + self.feature_names)

    def write_row(self, person_id: str, prediction_date: date, label: int, vector: FeatureVector):
        values = [repr(vector.values[n]) for n in self.feature_names]
        self._writer.writerow([person_id, prediction_date.isoformat(), int(label)] + values)

    def close(self):
        if self._own:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_feature_matrix(source: PathOrFile) -> FeatureMatrix:
    fh = _open(source)
    try:
        reader = csv.reader(fh)
        header = next(reader)
        if header[: len(MATRIX_ID_COLUMNS)] != MATRIX_ID_COLUMNS:
            raise ValueError(f"not a feature matrix file, header starts {header[:3]}")
        names = header[len(MATRIX_ID_COLUMNS) :]
        person_ids: list[str] = []
        dates: list[date] = []
        labels: list[int] = []
        rows: list[list[float]] = []
        for row in reader:
            if not row:
                continue
            person_ids.append(row[0])
            dates.append(date.fromisoformat(row[1]))
            labels.append(int(row[2]))
            rows.append([float(v) for v in row[3:]])
        X = np.array(rows, dtype=np.float64) if rows else np.empty((0, len(names)))
        return FeatureMatrix(names, person_ids, dates, np.array(labels, dtype=np.int8), X)
    finally:
        if isinstance(source, (str, Path)):
            fh.close()


def _open(source: PathOrFile):
    if isinstance(source, (str, Path)):
        return open(source, newline="", encoding="utf-8")
    return source
