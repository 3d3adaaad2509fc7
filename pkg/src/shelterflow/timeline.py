"""Daily series: interactions per day, transitions per day, and their ratio.

Series cover a half-open ordinal window with one value per calendar day.
Transitions are dated by the flowgraph rules, so a windowed graph and a
timeline over the same window always agree. Days where a ratio has a zero
denominator carry NaN — a missing value, not a zero.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from datetime import date
from operator import itemgetter
from typing import Mapping, Sequence

from .cohorts import CohortLabel
from .flowgraph import extract_transitions, is_counted_move
from .ingest import InteractionDay
from .journeys import LocationSequence

_day_of = itemgetter(0)

DEFAULT_SMOOTHING_WINDOW = 7


@dataclass
class DailySeries:
    start_day: int  # ordinal of values[0]
    values: list[float]
    label: str

    def __len__(self) -> int:
        return len(self.values)

    def day_range(self) -> tuple[int, int]:
        return (self.start_day, self.start_day + len(self.values))

    def dates(self) -> list[date]:
        return [date.fromordinal(self.start_day + i) for i in range(len(self.values))]

    def total(self) -> float:
        return math.fsum(v for v in self.values if not math.isnan(v))


def moving_average(values: Sequence[float], window: int) -> list[float]:
    """Centered moving average; windows shrink at the series edges.

    window=1 returns the values unchanged. Even windows take the extra
    point from the right. NaN values poison any window containing them, so
    smooth counts and take ratios afterwards, not the other way round.
    """
    if window < 1:
        raise ValueError(f"smoothing window must be >= 1, got {window}")
    if window == 1:
        return [float(v) for v in values]
    n = len(values)
    reach_left = (window - 1) // 2
    reach_right = window // 2
    out = []
    for i in range(n):
        lo = max(0, i - reach_left)
        hi = min(n, i + reach_right + 1)
        out.append(math.fsum(values[lo:hi]) / (hi - lo))
    return out


def _series_label(metric: str, cohort_filter: CohortLabel | None) -> str:
    if cohort_filter is None:
        return metric
    return f"{metric}[{cohort_filter.value}]"


def daily_interactions(
    index: Mapping[str, Sequence[InteractionDay]],
    window: tuple[int, int],
    cohort_filter: CohortLabel | None = None,
    person_labels: Mapping[str, CohortLabel] | None = None,
    smoothing_window: int = DEFAULT_SMOOTHING_WINDOW,
) -> DailySeries:
    """Interactions (person-shelter-days) per day, optionally one cohort only."""
    start, end = window
    if start >= end:
        raise ValueError(f"empty window {window!r}")
    if cohort_filter is not None and person_labels is None:
        raise ValueError("cohort_filter requires person_labels")
    raw = [0.0] * (end - start)
    for person, days in index.items():
        if cohort_filter is not None and person_labels.get(person) != cohort_filter:
            continue
        lo = bisect_left(days, start, key=_day_of)
        hi = bisect_left(days, end, lo=lo, key=_day_of)
        for day, shelters in days[lo:hi]:
            raw[day - start] += len(shelters)
    return DailySeries(start, moving_average(raw, smoothing_window), _series_label("interactions", cohort_filter))


def daily_transitions(
    sequences: Sequence[LocationSequence],
    window: tuple[int, int],
    mode: str,
    cohort_filter: CohortLabel | None = None,
    person_labels: Mapping[str, CohortLabel] | None = None,
    smoothing_window: int = DEFAULT_SMOOTHING_WINDOW,
) -> DailySeries:
    """Qualifying shelter moves per day under a counting mode."""
    start, end = window
    if start >= end:
        raise ValueError(f"empty window {window!r}")
    if cohort_filter is not None and person_labels is None:
        raise ValueError("cohort_filter requires person_labels")
    raw = [0.0] * (end - start)
    for seq in sequences:
        if cohort_filter is not None and person_labels.get(seq.person_id) != cohort_filter:
            continue
        for t in extract_transitions(seq):
            if start <= t.day < end and is_counted_move(t.origin, t.destination, mode):
                raw[t.day - start] += 1
    label = _series_label(f"transitions[{mode}]", cohort_filter)
    return DailySeries(start, moving_average(raw, smoothing_window), label)


def transition_ratio(transitions: DailySeries, interactions: DailySeries, label: str | None = None) -> DailySeries:
    """Pointwise transitions/interactions; zero-interaction days become NaN."""
    if transitions.day_range() != interactions.day_range():
        raise ValueError(
            f"misaligned series: {transitions.label} spans {transitions.day_range()}, "
            f"{interactions.label} spans {interactions.day_range()}"
        )
    values = [
        t / i if i != 0 else math.nan for t, i in zip(transitions.values, interactions.values)
    ]
    if label is None:
        label = f"ratio({transitions.label}/{interactions.label})"
    return DailySeries(transitions.start_day, values, label)


def series_csv_rows(series_list: Sequence[DailySeries]) -> list[tuple[str, str, str]]:
    """Long-format (date, value, label) rows; NaN renders as an empty field."""
    rows = []
    for series in series_list:
        day = series.start_day
        for i, value in enumerate(series.values):
            rendered = "" if math.isnan(value) else repr(value)
            rows.append((date.fromordinal(day + i).isoformat(), rendered, series.label))
    return rows
