"""Labeled prediction instances: proxy-outcome labeling, the fixed-date and
monthly cohort recipes, person-level splitting, and combined-set resampling.

The outcome window is (prediction_date, prediction_date + 3 calendar
months]: exclusive of the prediction date itself, inclusive of the
endpoint. Monthly prediction dates anchor to month ends so labels are
reproducible.
"""

from __future__ import annotations

import csv
import hashlib
import io
import random
from dataclasses import dataclass
from datetime import date
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from .codes import CcsrCatalog, ProxyCodeSet, is_proxy_diagnosis
from .dates import add_months, age_years, month_end, month_start, months_between
from .errors import Infeasible
from .ingest import PersonTimeline, continuous_eligibility_months

PathOrFile = Union[str, Path, io.TextIOBase]

SOURCE_FIXED_DATE = "fixed_date"
SOURCE_MONTHLY = "monthly"


@dataclass(frozen=True)
class PredictionInstance:
    person_id: str
    prediction_date: date
    label: bool
    age_years: int
    source_cohort: str

    def sort_key(self) -> tuple:
        return (self.person_id, self.prediction_date, self.source_cohort)


@dataclass
class CohortReport:
    """Filter cascade: (description, population remaining) after each step."""

    steps: list[tuple[str, int]]

    def __post_init__(self):
        counts = [c for _, c in self.steps]
        if any(b > a for a, b in zip(counts, counts[1:])):
            raise ValueError(f"cohort report counts must be non-increasing: {counts}")

    @property
    def final_count(self) -> int:
        return self.steps[-1][1] if self.steps else 0


@dataclass(frozen=True)
class FixedCohortRules:
    min_age: int = 65
    min_continuous_months: int = 6
    outcome_months: int = 3


@dataclass(frozen=True)
class MonthlyCohortRules:
    min_age: int = 18
    post_window_months: int = 3
    outcome_months: int = 3


def label_proxy_outcome(
    timeline: PersonTimeline,
    prediction_date: date,
    catalog: CcsrCatalog,
    proxy: ProxyCodeSet = ProxyCodeSet(),
    outcome_months: int = 3,
) -> bool:
    """True iff an inpatient or observation claim inside the outcome window
    carries a proxy diagnosis in any position."""
    window_end = add_months(prediction_date, outcome_months)
    for claim in timeline.claims:
        if claim.claim_type not in ("inpatient", "observation"):
            continue
        if not prediction_date < claim.from_date <= window_end:
            continue
        if any(is_proxy_diagnosis(catalog, proxy, code) for code in claim.diagnoses):
            return True
    return False


def _covered_through(timeline: PersonTimeline, start: date, end: date) -> bool:
    covered = timeline.covered_months()
    month = month_start(start)
    last = month_start(end)
    while month <= last:
        if month not in covered:
            return False
        month = add_months(month, 1)
    return True


def build_fixed_date_cohort(
    timelines: Mapping[str, PersonTimeline],
    prediction_date: date,
    catalog: CcsrCatalog,
    proxy: ProxyCodeSet = ProxyCodeSet(),
    rules: FixedCohortRules = FixedCohortRules(),
) -> tuple[list[PredictionInstance], CohortReport]:
    """Single-date cohort: eligibility, age, and survival filters, with the
    death carve-out for coverage loss inside the outcome window."""
    window_end = add_months(prediction_date, rules.outcome_months)
    people = [timelines[pid] for pid in sorted(timelines)]
    steps = [("total persons", len(people))]

    people = [
        t
        for t in people
        if continuous_eligibility_months(t, prediction_date) >= rules.min_continuous_months
    ]
    steps.append(
        (
            f"continuous eligibility >= {rules.min_continuous_months} months"
            f" before {prediction_date.isoformat()}",
            len(people),
        )
    )

    people = [
        t
        for t in people
        if age_years(t.demographics.birth_date, prediction_date) >= rules.min_age
    ]
    steps.append((f"age >= {rules.min_age} on the prediction date", len(people)))

    people = [
        t
        for t in people
        if t.demographics.death_date is None or t.demographics.death_date >= prediction_date
    ]
    steps.append(("alive on the prediction date", len(people)))

    def retained(t: PersonTimeline) -> bool:
        if _covered_through(t, prediction_date, window_end):
            return True
        death = t.demographics.death_date
        return death is not None and death <= window_end

    people = [t for t in people if retained(t)]
    steps.append(
        (
            f"covered through {window_end.isoformat()} unless coverage loss was due to death",
            len(people),
        )
    )

    instances = [
        PredictionInstance(
            person_id=t.person_id,
            prediction_date=prediction_date,
            label=label_proxy_outcome(t, prediction_date, catalog, proxy, rules.outcome_months),
            age_years=age_years(t.demographics.birth_date, prediction_date),
            source_cohort=SOURCE_FIXED_DATE,
        )
        for t in people
    ]
    return instances, CohortReport(steps)


def build_monthly_cohort(
    timelines: Mapping[str, PersonTimeline],
    date_range: tuple[date, date],
    catalog: CcsrCatalog,
    proxy: ProxyCodeSet = ProxyCodeSet(),
    rules: MonthlyCohortRules = MonthlyCohortRules(),
) -> tuple[list[PredictionInstance], CohortReport]:
    """Member-month cohort: one instance per covered month whose prediction
    date (the month end) has enough post-window eligibility and adult age."""
    start = month_start(date_range[0])
    end = month_start(date_range[1])
    candidates: list[tuple[PersonTimeline, date]] = []
    for pid in sorted(timelines):
        t = timelines[pid]
        for month in sorted(t.covered_months()):
            if start <= month <= end:
                candidates.append((t, month))
    steps = [("member-months of eligibility in range", len(candidates))]

    def has_post_window(t: PersonTimeline, month: date) -> bool:
        covered = t.covered_months()
        return all(
            add_months(month, k) in covered for k in range(1, rules.post_window_months + 1)
        )

    candidates = [(t, m) for t, m in candidates if has_post_window(t, m)]
    steps.append(
        (f"{rules.post_window_months} months of eligibility after the prediction date", len(candidates))
    )

    candidates = [
        (t, m)
        for t, m in candidates
        if age_years(t.demographics.birth_date, month_end(m)) >= rules.min_age
    ]
    steps.append((f"age >= {rules.min_age} on the prediction date", len(candidates)))

    instances = [
        PredictionInstance(
            person_id=t.person_id,
            prediction_date=month_end(m),
            label=label_proxy_outcome(t, month_end(m), catalog, proxy, rules.outcome_months),
            age_years=age_years(t.demographics.birth_date, month_end(m)),
            source_cohort=SOURCE_MONTHLY,
        )
        for t, m in candidates
    ]
    return instances, CohortReport(steps)


def _test_bucket(person_id: str, seed: int) -> float:
    digest = hashlib.sha256(f"{seed}:{person_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def split_by_person(
    instances: Sequence[PredictionInstance],
    test_fraction: float = 0.2,
    seed: int = 0,
) -> tuple[list[PredictionInstance], list[PredictionInstance]]:
    """Deterministic person-level split; a person's instances never straddle
    the train/test boundary."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    train: list[PredictionInstance] = []
    test: list[PredictionInstance] = []
    assignment: dict[str, bool] = {}
    for inst in instances:
        in_test = assignment.get(inst.person_id)
        if in_test is None:
            in_test = _test_bucket(inst.person_id, seed) < test_fraction
            assignment[inst.person_id] = in_test
        (test if in_test else train).append(inst)
    return train, test


@dataclass(frozen=True)
class SamplingCounts:
    keep_neg_under: int
    keep_neg_over: int
    keep_pos_under: int
    keep_pos_over: int

    @property
    def total_under(self) -> int:
        return self.keep_neg_under + self.keep_pos_under

    @property
    def total_over(self) -> int:
        return self.keep_neg_over + self.keep_pos_over


def compute_sampling_counts(
    pos_under: int,
    pos_over: int,
    neg_under: int,
    neg_over: int,
    elder_fraction: float = 0.21,
    prevalence_ratio: float = 3.9,
) -> SamplingCounts:
    """Resolve how many instances per (age band, label) stratum to keep.

    Targets: the over-65 share of the kept total equals elder_fraction, and
    the over-65 prevalence is prevalence_ratio times the under-65 one. All
    positives are kept when those targets are jointly satisfiable; otherwise
    positives on the over-represented side are minimally downsampled to
    restore the ratio. Subject to that, the kept total is maximized within
    the available negatives. Raises Infeasible when no assignment fits.
    """
    if min(pos_under, pos_over, neg_under, neg_over) < 0:
        raise ValueError("counts must be >= 0")
    if not 0.0 < elder_fraction < 1.0:
        raise ValueError("elder_fraction must be in (0, 1)")
    if prevalence_ratio <= 0.0:
        raise ValueError("prevalence_ratio must be > 0")

    f = Fraction(elder_fraction).limit_denominator(10**6)
    r = Fraction(prevalence_ratio).limit_denominator(10**6)
    over_per_under = f / (1 - f)  # required T_over / T_under
    target_pos_over = r * over_per_under * pos_under

    keep_pos_under, keep_pos_over = pos_under, pos_over
    if pos_over > target_pos_over:
        keep_pos_over = int(round(target_pos_over))
    elif pos_over < target_pos_over:
        keep_pos_under = int(round(pos_over / (r * over_per_under))) if pos_under else 0

    cap = min(
        Fraction(keep_pos_under + neg_under) / (1 - f),
        Fraction(keep_pos_over + neg_over) / f,
    )
    floor_total = max(
        Fraction(keep_pos_under) / (1 - f) if keep_pos_under else Fraction(0),
        Fraction(keep_pos_over) / f if keep_pos_over else Fraction(0),
    )
    if cap < floor_total:
        raise Infeasible(
            f"cannot reach elder share {elder_fraction} with prevalence ratio "
            f"{prevalence_ratio} given counts ({pos_under}, {pos_over}, {neg_under}, {neg_over})"
        )
    total = int(cap)  # floor
    t_over = int(round(f * total))
    # clamp into the feasible band around the rounded target
    t_over = max(t_over, keep_pos_over, total - (keep_pos_under + neg_under))
    t_over = min(t_over, keep_pos_over + neg_over, total - keep_pos_under)
    t_under = total - t_over
    counts = SamplingCounts(
        keep_neg_under=t_under - keep_pos_under,
        keep_neg_over=t_over - keep_pos_over,
        keep_pos_under=keep_pos_under,
        keep_pos_over=keep_pos_over,
    )
    if min(counts.keep_neg_under, counts.keep_neg_over) < 0:
        raise Infeasible("rounding left a stratum with negative size")
    return counts


@dataclass(frozen=True)
class SamplingParams:
    elder_fraction: float = 0.21
    prevalence_ratio: float = 3.9
    elder_age: int = 65


def build_combined_training(
    cms_train: Sequence[PredictionInstance],
    hf_train: Sequence[PredictionInstance],
    sampling: SamplingParams = SamplingParams(),
    seed: int = 0,
) -> list[PredictionInstance]:
    """Union both training sets, then sample strata per compute_sampling_counts.

    Deterministic for a given seed; output is canonically ordered.
    """
    pool = list(cms_train) + list(hf_train)
    strata: dict[tuple[bool, bool], list[PredictionInstance]] = {
        (False, False): [],
        (False, True): [],
        (True, False): [],
        (True, True): [],
    }
    for inst in pool:
        strata[(inst.label, inst.age_years >= sampling.elder_age)].append(inst)
    counts = compute_sampling_counts(
        pos_under=len(strata[(True, False)]),
        pos_over=len(strata[(True, True)]),
        neg_under=len(strata[(False, False)]),
        neg_over=len(strata[(False, True)]),
        elder_fraction=sampling.elder_fraction,
        prevalence_ratio=sampling.prevalence_ratio,
    )
    picks: list[PredictionInstance] = []
    for (label, elder), keep in (
        ((False, False), counts.keep_neg_under),
        ((False, True), counts.keep_neg_over),
        ((True, False), counts.keep_pos_under),
        ((True, True), counts.keep_pos_over),
    ):
        members = sorted(strata[(label, elder)], key=PredictionInstance.sort_key)
        if keep < len(members):
            rng = random.Random(f"{seed}:{int(label)}:{int(elder)}")
            members = [members[i] for i in sorted(rng.sample(range(len(members)), keep))]
        picks.extend(members)
    picks.sort(key=PredictionInstance.sort_key)
    return picks


# --- CSV emission (instances and cohort reports) ---

INSTANCES_HEADER = ["person_id", "prediction_date", "label", "age_years", "source_cohort"]


def write_instances(instances: Iterable[PredictionInstance], sink: PathOrFile) -> None:
    own = isinstance(sink, (str, Path))
    fh = open(sink, "w", newline="", encoding="utf-8") if own else sink
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(INSTANCES_HEADER)
        for inst in instances:
            writer.writerow(
                [
                    inst.person_id,
                    inst.prediction_date.isoformat(),
                    int(inst.label),
                    inst.age_years,
                    inst.source_cohort,
                ]
            )
    finally:
        if own:
            fh.close()


def read_instances(source: PathOrFile) -> list[PredictionInstance]:
    own = isinstance(source, (str, Path))
    fh = open(source, newline="", encoding="utf-8") if own else source
    try:
        reader = csv.reader(fh)
        header = next(reader)
        if header != INSTANCES_HEADER:
            raise ValueError(f"not an instances file: header {header}")
        out = []
        for row in reader:
            if not row:
                continue
            out.append(
                PredictionInstance(
                    person_id=row[0],
                    prediction_date=date.fromisoformat(row[1]),
                    label=bool(int(row[2])),
                    age_years=int(row[3]),
                    source_cohort=row[4],
                )
            )
        return out
    finally:
        if own:
            fh.close()


def write_cohort_report(report: CohortReport, sink: PathOrFile) -> None:
    own = isinstance(sink, (str, Path))
    fh = open(sink, "w", newline="", encoding="utf-8") if own else sink
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["selection_criteria", "population_remaining"])
        for desc, count in report.steps:
            writer.writerow([desc, count])
    finally:
        if own:
            fh.close()
