"""Calendar month arithmetic used by windows, cohorts, and eligibility."""

from __future__ import annotations

import calendar
from datetime import date


def add_months(d: date, months: int) -> date:
    """Shift a date by calendar months, clamping the day to the month end.

    add_months(2016-11-30, 3) == 2017-02-28.
    """
    total = d.year * 12 + (d.month - 1) + months
    year, month = divmod(total, 12)
    month += 1
    day = min(d.day, calendar.monthrange(year, month)[1])
    return date(year, month, day)


def month_start(d: date) -> date:
    return d.replace(day=1)


def month_end(d: date) -> date:
    return d.replace(day=calendar.monthrange(d.year, d.month)[1])


def parse_month(text: str) -> date:
    """Parse 'YYYY-MM' into the first day of that month."""
    parts = text.strip().split("-")
    if len(parts) != 2:
        raise ValueError(f"expected YYYY-MM, got {text!r}")
    year, month = int(parts[0]), int(parts[1])
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range in {text!r}")
    return date(year, month, 1)


def format_month(d: date) -> str:
    return f"{d.year:04d}-{d.month:02d}"


def months_between(earlier: date, later: date) -> int:
    """Whole calendar months from earlier's month to later's month."""
    return (later.year - earlier.year) * 12 + (later.month - earlier.month)


def age_years(birth_date: date, as_of: date) -> int:
    """Completed years of age at as_of."""
    years = as_of.year - birth_date.year
    if (as_of.month, as_of.day) < (birth_date.month, birth_date.day):
        years -= 1
    return years
