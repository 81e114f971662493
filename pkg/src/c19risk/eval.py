"""Stratification metrics: ROC AUC, sensitivity at low alert rates, lift.

AUC follows the pairwise convention (ties count 1/2) computed from exact
integer pair counts, so it agrees bit-for-bit with a brute-force oracle.
Alert sets take the top ceil(rate * n) scores; boundary ties resolve by a
canonical pre-sort on instance id so results never depend on input order.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import DegenerateLabels

PathOrFile = Union[str, Path, io.TextIOBase]

DEFAULT_SLA_RATES = tuple(round(0.01 * k, 2) for k in range(1, 21))
DEFAULT_LIFT_FRACTIONS = tuple(round(0.1 * k, 1) for k in range(1, 11))


def _as_arrays(labels, scores) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(labels, dtype=np.int64)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != s.shape or y.ndim != 1:
        raise ValueError("labels and scores must be 1-D and the same length")
    return y, s


def roc_auc(labels: Sequence[int], scores: Sequence[float]) -> float:
    """Probability a random positive outscores a random negative (ties = 1/2)."""
    y, s = _as_arrays(labels, scores)
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("AUC needs at least one positive and one negative")
    order = np.argsort(s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    # walk tie groups in ascending score; count wins and ties exactly
    wins = 0  # negative strictly below each positive
    ties = 0
    neg_below = 0
    i = 0
    n = y.size
    while i < n:
        j = i
        while j < n and s_sorted[j] == s_sorted[i]:
            j += 1
        group_pos = int(y_sorted[i:j].sum())
        group_neg = (j - i) - group_pos
        wins += group_pos * neg_below
        ties += group_pos * group_neg
        neg_below += group_neg
        i = j
    # numerator is a multiple of 0.5 and exactly representable
    return (wins + 0.5 * ties) / (n_pos * n_neg)


def _alert_order(scores: np.ndarray, ids: Optional[Sequence[str]]) -> np.ndarray:
    """Indices in alerting priority: score desc, then canonical id asc."""
    n = scores.size
    key_ids = np.asarray([str(i) for i in ids]) if ids is not None else np.arange(n)
    canonical = np.argsort(key_ids, kind="stable")
    by_score = np.argsort(-scores[canonical], kind="stable")
    return canonical[by_score]


def sensitivity_at_alert_rate(
    labels: Sequence[int],
    scores: Sequence[float],
    rate: float,
    ids: Optional[Sequence[str]] = None,
) -> float:
    """Fraction of positives captured when alerting the top ceil(rate*n)."""
    if not 0.0 < rate <= 1.0:
        raise ValueError("rate must be in (0, 1]")
    y, s = _as_arrays(labels, scores)
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.size:
        raise DegenerateLabels("sensitivity needs both classes present")
    k = math.ceil(rate * y.size)
    alerted = _alert_order(s, ids)[:k]
    return float(y[alerted].sum()) / n_pos


def sla_curve(
    labels: Sequence[int],
    scores: Sequence[float],
    rates: Sequence[float] = DEFAULT_SLA_RATES,
    ids: Optional[Sequence[str]] = None,
) -> list[tuple[float, float]]:
    """Sensitivity at each alert rate; non-decreasing in the rate."""
    rates = list(rates)
    if any(b <= a for a, b in zip(rates, rates[1:])):
        raise ValueError("rates must be strictly increasing")
    return [(r, sensitivity_at_alert_rate(labels, scores, r, ids)) for r in rates]


@dataclass(frozen=True)
class LiftRow:
    top_fraction: float
    outcome_rate: float
    lift: float


def lift(outcome_rate: float, overall_rate: float) -> float:
    """Outcome rate in a slice relative to the overall rate."""
    if overall_rate <= 0:
        raise DegenerateLabels("overall outcome rate is zero")
    return outcome_rate / overall_rate


def lift_table(
    outcomes: Sequence[int],
    scores: Sequence[float],
    fractions: Sequence[float] = DEFAULT_LIFT_FRACTIONS,
    ids: Optional[Sequence[str]] = None,
) -> list[LiftRow]:
    """Outcome rate and lift within each top-score slice of the population."""
    y, s = _as_arrays(outcomes, scores)
    if y.size == 0:
        raise DegenerateLabels("no rows")
    overall = float(y.mean())
    if overall == 0.0:
        raise DegenerateLabels("no positive outcomes")
    order = _alert_order(s, ids)
    rows = []
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise ValueError("fractions must be in (0, 1]")
        k = math.ceil(f * y.size)
        rate = float(y[order[:k]].mean())
        rows.append(LiftRow(f, rate, lift(rate, overall)))
    return rows


@dataclass
class EvaluationReport:
    auc: float
    sla_points: list[tuple[float, float]]
    lift_rows: list[LiftRow]
    n: int
    positives: int
    model_version: str = ""

    def to_dict(self) -> dict:
        return {
            "auc": self.auc,
            "sla": [{"alert_rate": r, "sensitivity": s} for r, s in self.sla_points],
            "lift": [
                {"top_fraction": row.top_fraction, "outcome_rate": row.outcome_rate, "lift": row.lift}
                for row in self.lift_rows
            ],
            "n": self.n,
            "positives": self.positives,
            "model_version": self.model_version,
        }


def evaluate_scores(
    labels: Sequence[int],
    scores: Sequence[float],
    ids: Optional[Sequence[str]] = None,
    sla_rates: Sequence[float] = DEFAULT_SLA_RATES,
    lift_fractions: Sequence[float] = DEFAULT_LIFT_FRACTIONS,
    model_version: str = "",
) -> EvaluationReport:
    y, s = _as_arrays(labels, scores)
    return EvaluationReport(
        auc=roc_auc(y, s),
        sla_points=sla_curve(y, s, sla_rates, ids),
        lift_rows=lift_table(y, s, lift_fractions, ids),
        n=int(y.size),
        positives=int(y.sum()),
        model_version=model_version,
    )


def write_report_json(report: EvaluationReport, sink: PathOrFile) -> None:
    text = json.dumps(report.to_dict(), sort_keys=True, indent=2)
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text + "\n", encoding="utf-8")
    else:
        sink.write(text + "\n")


def write_sla_csv(report: EvaluationReport, sink: PathOrFile) -> None:
    _write_rows(sink, ["alert_rate", "sensitivity"], report.sla_points)


def write_lift_csv(report: EvaluationReport, sink: PathOrFile) -> None:
    _write_rows(
        sink,
        ["top_fraction", "outcome_rate", "lift"],
        [(r.top_fraction, r.outcome_rate, r.lift) for r in report.lift_rows],
    )


def write_sla_gnuplot(report: EvaluationReport, sink: PathOrFile) -> None:
    """Two-column whitespace dump suitable for `plot "sla.dat" with lines`."""
    lines = [f"{r:.6g} {s:.10g}" for r, s in report.sla_points]
    text = "# alert_rate sensitivity\n" + "\n".join(lines) + "\n"
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text, encoding="utf-8")
    else:
        sink.write(text)


def _write_rows(sink: PathOrFile, header: list[str], rows: Iterable[tuple]) -> None:
    own = isinstance(sink, (str, Path))
    fh = open(sink, "w", newline="", encoding="utf-8") if own else sink
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    finally:
        if own:
            fh.close()
