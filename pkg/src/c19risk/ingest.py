"""Claims, eligibility, and demographics file parsing and timeline assembly.

All three inputs are UTF-8 CSV with a required header. Invalid rows are
reported with their line number and never silently dropped; valid rows
around them still parse.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Optional, Union

from .codes import normalize_code
from .dates import add_months, month_start
from .errors import DuplicateDemographics, MalformedCode, MissingHeader

logger = logging.getLogger(__name__)

CLAIM_TYPES = ("inpatient", "observation", "er", "office", "other")
GENDERS = ("male", "female", "unknown")
_GENDER_BY_LETTER = {"M": "male", "F": "female", "U": "unknown"}
_LETTER_BY_GENDER = {v: k for k, v in _GENDER_BY_LETTER.items()}

CLAIMS_HEADER = ["person_id", "claim_id", "from_date", "claim_type", "diagnoses"]
ELIGIBILITY_HEADER = ["person_id", "month", "covered"]
DEMOGRAPHICS_HEADER = ["person_id", "birth_date", "gender", "death_date"]

PathOrFile = Union[str, Path, io.TextIOBase]


@dataclass(frozen=True)
class RowError:
    """A rejected input row: where it was, what rule it broke."""

    line: int
    kind: str  # BadDate | BadClaimType | MalformedCode | BadRow | BadValue
    message: str


@dataclass(frozen=True)
class ClaimRecord:
    person_id: str
    claim_id: str
    from_date: date
    claim_type: str
    diagnoses: tuple[str, ...]  # position 0 = primary


@dataclass(frozen=True)
class EligibilitySpan:
    person_id: str
    month: date  # first day of the month
    covered: bool


@dataclass(frozen=True)
class Demographics:
    person_id: str
    birth_date: date
    gender: str
    death_date: Optional[date] = None


@dataclass(frozen=True)
class PersonTimeline:
    """One person's demographics, covered months, and date-ordered claims."""

    person_id: str
    demographics: Demographics
    eligibility: tuple[EligibilitySpan, ...]  # sorted by month
    claims: tuple[ClaimRecord, ...]  # sorted by (from_date, claim_id)

    def covered_months(self) -> frozenset[date]:
        return frozenset(s.month for s in self.eligibility if s.covered)


@dataclass(frozen=True)
class OrphanRecord:
    """Claim or eligibility row whose person has no demographics."""

    kind: str  # claim | eligibility | eligibility_conflict
    person_id: str
    detail: str


def _open_rows(source: PathOrFile):
    if isinstance(source, (str, Path)):
        return open(source, newline="", encoding="utf-8")
    return source


def _check_header(reader: csv.reader, expected: list[str]) -> None:
    try:
        header = next(reader)
    except StopIteration:
        raise MissingHeader(expected, [])
    found = [h.strip().lower() for h in header]
    if found != expected:
        raise MissingHeader(expected, found)


def parse_claims(source: PathOrFile) -> tuple[list[ClaimRecord], list[RowError]]:
    """Parse claims CSV; diagnoses column is a ``|``-separated code list."""
    records: list[ClaimRecord] = []
    errors: list[RowError] = []
    fh = _open_rows(source)
    try:
        reader = csv.reader(fh)
        _check_header(reader, CLAIMS_HEADER)
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(CLAIMS_HEADER):
                errors.append(RowError(line, "BadRow", f"expected {len(CLAIMS_HEADER)} fields"))
                continue
            person_id, claim_id, date_text, claim_type, dx_text = (c.strip() for c in row)
            if not person_id or not claim_id:
                errors.append(RowError(line, "BadValue", "empty person_id or claim_id"))
                continue
            try:
                from_date = date.fromisoformat(date_text)
            except ValueError:
                errors.append(RowError(line, "BadDate", f"bad from_date {date_text!r}"))
                continue
            if claim_type not in CLAIM_TYPES:
                errors.append(RowError(line, "BadClaimType", f"bad claim_type {claim_type!r}"))
                continue
            try:
                diagnoses = tuple(
                    normalize_code(c) for c in dx_text.split("|") if c.strip()
                )
            except MalformedCode as exc:
                errors.append(RowError(line, "MalformedCode", str(exc)))
                continue
            records.append(ClaimRecord(person_id, claim_id, from_date, claim_type, diagnoses))
    finally:
        if isinstance(source, (str, Path)):
            fh.close()
    return records, errors


def parse_eligibility(source: PathOrFile) -> tuple[list[EligibilitySpan], list[RowError]]:
    """Parse eligibility CSV: person_id, month (YYYY-MM), covered (0|1)."""
    spans: list[EligibilitySpan] = []
    errors: list[RowError] = []
    fh = _open_rows(source)
    try:
        reader = csv.reader(fh)
        _check_header(reader, ELIGIBILITY_HEADER)
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(ELIGIBILITY_HEADER):
                errors.append(RowError(line, "BadRow", f"expected {len(ELIGIBILITY_HEADER)} fields"))
                continue
            person_id, month_text, covered_text = (c.strip() for c in row)
            if not person_id:
                errors.append(RowError(line, "BadValue", "empty person_id"))
                continue
            try:
                month = date.fromisoformat(month_text + "-01")
            except ValueError:
                errors.append(RowError(line, "BadDate", f"bad month {month_text!r}"))
                continue
            if covered_text not in ("0", "1"):
                errors.append(RowError(line, "BadValue", f"covered must be 0 or 1, got {covered_text!r}"))
                continue
            spans.append(EligibilitySpan(person_id, month, covered_text == "1"))
    finally:
        if isinstance(source, (str, Path)):
            fh.close()
    return spans, errors


def parse_demographics(source: PathOrFile) -> tuple[list[Demographics], list[RowError]]:
    """Parse demographics CSV: gender M|F|U, death_date optional."""
    rows: list[Demographics] = []
    errors: list[RowError] = []
    fh = _open_rows(source)
    try:
        reader = csv.reader(fh)
        _check_header(reader, DEMOGRAPHICS_HEADER)
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(DEMOGRAPHICS_HEADER):
                errors.append(RowError(line, "BadRow", f"expected {len(DEMOGRAPHICS_HEADER)} fields"))
                continue
            person_id, birth_text, gender_text, death_text = (c.strip() for c in row)
            if not person_id:
                errors.append(RowError(line, "BadValue", "empty person_id"))
                continue
            try:
                birth = date.fromisoformat(birth_text)
            except ValueError:
                errors.append(RowError(line, "BadDate", f"bad birth_date {birth_text!r}"))
                continue
            gender = _GENDER_BY_LETTER.get(gender_text.upper())
            if gender is None:
                errors.append(RowError(line, "BadValue", f"gender must be M, F or U, got {gender_text!r}"))
                continue
            death: Optional[date] = None
            if death_text:
                try:
                    death = date.fromisoformat(death_text)
                except ValueError:
                    errors.append(RowError(line, "BadDate", f"bad death_date {death_text!r}"))
                    continue
                if death < birth:
                    errors.append(RowError(line, "BadValue", "death_date before birth_date"))
                    continue
            rows.append(Demographics(person_id, birth, gender, death))
    finally:
        if isinstance(source, (str, Path)):
            fh.close()
    return rows, errors


def assemble_timelines(
    claims: Iterable[ClaimRecord],
    eligibility: Iterable[EligibilitySpan],
    demographics: Iterable[Demographics],
) -> tuple[dict[str, PersonTimeline], list[OrphanRecord]]:
    """Group parsed records into one immutable timeline per person.

    Persons are defined by demographics rows; claims or eligibility rows for
    unknown persons become OrphanRecord warnings. Output is independent of
    input row order. Raises DuplicateDemographics on a repeated person_id.
    """
    demo_by_person: dict[str, Demographics] = {}
    for demo in demographics:
        if demo.person_id in demo_by_person:
            raise DuplicateDemographics(demo.person_id)
        demo_by_person[demo.person_id] = demo

    warnings: list[OrphanRecord] = []
    claims_by_person: dict[str, list[ClaimRecord]] = {p: [] for p in demo_by_person}
    for claim in claims:
        bucket = claims_by_person.get(claim.person_id)
        if bucket is None:
            warnings.append(OrphanRecord("claim", claim.person_id, claim.claim_id))
            continue
        bucket.append(claim)

    # (person, month) -> covered; conflicting flags resolve to covered=True so
    # the result stays order-independent.
    elig_by_person: dict[str, dict[date, bool]] = {p: {} for p in demo_by_person}
    for span in eligibility:
        months = elig_by_person.get(span.person_id)
        if months is None:
            warnings.append(OrphanRecord("eligibility", span.person_id, span.month.isoformat()))
            continue
        month = month_start(span.month)
        if month in months and months[month] != span.covered:
            warnings.append(
                OrphanRecord("eligibility_conflict", span.person_id, month.isoformat())
            )
            months[month] = True
        else:
            months[month] = span.covered

    timelines: dict[str, PersonTimeline] = {}
    for person_id, demo in demo_by_person.items():
        person_claims = tuple(
            sorted(claims_by_person[person_id], key=lambda c: (c.from_date, c.claim_id))
        )
        spans = tuple(
            EligibilitySpan(person_id, month, covered)
            for month, covered in sorted(elig_by_person[person_id].items())
        )
        timelines[person_id] = PersonTimeline(person_id, demo, spans, person_claims)

    warnings.sort(key=lambda w: (w.kind, w.person_id, w.detail))
    if warnings:
        logger.warning("assemble_timelines: %d orphan/conflict rows", len(warnings))
    return timelines, warnings


def continuous_eligibility_months(timeline: PersonTimeline, as_of: date) -> int:
    """Consecutive covered months ending with the month containing as_of.

    0 when that month itself is uncovered.
    """
    covered = timeline.covered_months()
    month = month_start(as_of)
    count = 0
    while month in covered:
        count += 1
        month = add_months(month, -1)
    return count


# --- writers (synth output and round-trip tests use these) ---


def write_claims(records: Iterable[ClaimRecord], sink: PathOrFile) -> None:
    fh = sink if isinstance(sink, io.TextIOBase) else open(sink, "w", newline="", encoding="utf-8")
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CLAIMS_HEADER)
        for r in records:
            writer.writerow(
                [r.person_id, r.claim_id, r.from_date.isoformat(), r.claim_type, "|".join(r.diagnoses)]
            )
    finally:
        if not isinstance(sink, io.TextIOBase):
            fh.close()


def write_eligibility(spans: Iterable[EligibilitySpan], sink: PathOrFile) -> None:
    fh = sink if isinstance(sink, io.TextIOBase) else open(sink, "w", newline="", encoding="utf-8")
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ELIGIBILITY_HEADER)
        for s in spans:
            writer.writerow([s.person_id, f"{s.month.year:04d}-{s.month.month:02d}", int(s.covered)])
    finally:
        if not isinstance(sink, io.TextIOBase):
            fh.close()


def write_demographics(rows: Iterable[Demographics], sink: PathOrFile) -> None:
    fh = sink if isinstance(sink, io.TextIOBase) else open(sink, "w", newline="", encoding="utf-8")
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DEMOGRAPHICS_HEADER)
        for d in rows:
            writer.writerow(
                [
                    d.person_id,
                    d.birth_date.isoformat(),
                    _LETTER_BY_GENDER[d.gender],
                    d.death_date.isoformat() if d.death_date else "",
                ]
            )
    finally:
        if not isinstance(sink, io.TextIOBase):
            fh.close()
