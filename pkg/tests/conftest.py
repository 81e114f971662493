from datetime import date

import pytest

from c19risk.codes import load_bundled_catalog
from c19risk.dates import add_months, month_start
from c19risk.ingest import ClaimRecord, Demographics, EligibilitySpan, PersonTimeline


@pytest.fixture(scope="session")
def catalog():
    return load_bundled_catalog()


def make_timeline(
    person_id="p1",
    birth_date=date(1950, 1, 15),
    gender="male",
    death_date=None,
    claims=(),
    covered_months=(),
):
    """Assemble a PersonTimeline by hand for tests.

    claims: iterable of (from_date, claim_type, [codes]) tuples.
    covered_months: iterable of first-of-month dates (or any date in the month).
    """
    records = tuple(
        ClaimRecord(person_id, f"{person_id}-c{i}", d, ctype, tuple(codes))
        for i, (d, ctype, codes) in enumerate(
            sorted(claims, key=lambda c: c[0]), start=1
        )
    )
    spans = tuple(
        EligibilitySpan(person_id, month_start(m), True)
        for m in sorted(set(covered_months))
    )
    demo = Demographics(person_id, birth_date, gender, death_date)
    return PersonTimeline(person_id, demo, spans, records)


def months_around(anchor: date, before: int, after: int):
    """Month-start dates from `before` months before anchor to `after` after."""
    start = month_start(anchor)
    return [add_months(start, k) for k in range(-before, after + 1)]
