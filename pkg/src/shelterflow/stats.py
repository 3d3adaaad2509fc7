"""Per-person, per-period shelter-use statistics and cohort summaries.

Every statistic is computed on the portion of a person's record that falls
inside one reporting period, and segmentation is re-run on that clipped
record, so a gap spanning a period boundary never leaks a transition
across periods. People with no in-period days are excluded from that
period's sample entirely.
"""

from __future__ import annotations

from bisect import bisect_left
from datetime import date
from operator import itemgetter
from statistics import fmean, median
from typing import Iterable, Mapping, NamedTuple, Sequence

from .cohorts import CohortLabel
from .ingest import InteractionDay
from .journeys import DEFAULT_GAP_DAYS, MULTIPLE_NODE, build_location_sequence

_day_of = itemgetter(0)

METRICS = ("tenure_days", "stays", "use_percent", "unique_shelters", "transitions")


class Period(NamedTuple):
    """A named reporting interval, dates half-open [start, end).

    ``duration_days`` overrides the calendar length for per-day rate
    reporting only (clipping always uses the dates); None means end-start.
    """

    name: str
    start: date
    end: date
    duration_days: int | None = None

    def calendar_days(self) -> int:
        return (self.end - self.start).days

    def effective_duration(self) -> int:
        return self.duration_days if self.duration_days is not None else self.calendar_days()

    def ordinals(self) -> tuple[int, int]:
        return (self.start.toordinal(), self.end.toordinal())


class PersonPeriodStats(NamedTuple):
    person_id: str
    tenure_days: int  # days from first to last in-period day, inclusive
    stays: int  # person-shelter-days in period
    use_percent: float  # 100 * stays / tenure; exceeds 100 on multi-shelter use
    unique_shelters: int
    transitions: int  # direct shelter-to-shelter moves within the clipped record


def clip_days(days: Sequence[InteractionDay], start: int, end: int) -> Sequence[InteractionDay]:
    """Days with ordinal in [start, end); input must be sorted by day."""
    lo = bisect_left(days, start, key=_day_of)
    hi = bisect_left(days, end, lo=lo, key=_day_of)
    return days[lo:hi]


def person_period_stats(
    person_id: str, clipped_days: Sequence[InteractionDay], gap_days: int = DEFAULT_GAP_DAYS
) -> PersonPeriodStats:
    """Statistics over one person's already-clipped, non-empty day list."""
    first = clipped_days[0][0]
    last = clipped_days[-1][0]
    tenure = last - first + 1
    stays = 0
    shelters: set[str] = set()
    for _, day_shelters in clipped_days:
        stays += len(day_shelters)
        shelters.update(day_shelters)

    seq = build_location_sequence(person_id, clipped_days, gap_days)
    segments = seq.segments
    transitions = sum(
        1
        for i, gapped in enumerate(seq.gap_flags)
        if not gapped
        and segments[i].location != MULTIPLE_NODE
        and segments[i + 1].location != MULTIPLE_NODE
    )
    return PersonPeriodStats(
        person_id=person_id,
        tenure_days=tenure,
        stays=stays,
        use_percent=100.0 * stays / tenure,
        unique_shelters=len(shelters),
        transitions=transitions,
    )


class MetricSummary(NamedTuple):
    median: float
    mean: float
    p95: float


def nearest_rank_p95(sorted_values: Sequence) -> float:
    """95th percentile, nearest-rank: the ceil(0.95 n)-th order statistic.

    The rank is computed in integer arithmetic because float rounding of
    0.95*n drifts above the true product for some n (e.g. n=20).
    """
    n = len(sorted_values)
    if n == 0:
        raise ValueError("p95 of an empty sample")
    return sorted_values[(95 * n + 99) // 100 - 1]


def summarize(values: Iterable) -> MetricSummary:
    """Median (midpoint convention), arithmetic mean, nearest-rank p95."""
    ordered = sorted(values)
    if not ordered:
        raise ValueError("cannot summarize an empty sample")
    return MetricSummary(median=median(ordered), mean=fmean(ordered), p95=nearest_rank_p95(ordered))


def summarize_persons(samples: Sequence[PersonPeriodStats]) -> dict[str, MetricSummary]:
    """One MetricSummary per statistic over a non-empty sample."""
    if not samples:
        raise ValueError("cannot summarize an empty sample")
    out: dict[str, MetricSummary] = {}
    for metric in METRICS:
        out[metric] = summarize(getattr(s, metric) for s in samples)
    return out


class StatsCell(NamedTuple):
    """One (period, cohort) column of the summary matrix."""

    period: str
    cohort: str
    n_persons: int
    duration_days: int
    metrics: dict[str, MetricSummary]


# Cohorts reported by default; Unclassified people are still counted by the
# census but get no summary column.
DEFAULT_REPORT_COHORTS = (
    CohortLabel.BEFORE,
    CohortLabel.STAYED,
    CohortLabel.DURING,
    CohortLabel.AFTER,
)


def stats_matrix(
    index: Mapping[str, Sequence[InteractionDay]],
    labels: Mapping[str, CohortLabel],
    periods: Sequence[Period],
    cohorts: Sequence[CohortLabel] = DEFAULT_REPORT_COHORTS,
    gap_days: int = DEFAULT_GAP_DAYS,
) -> list[StatsCell]:
    """Summary columns for each (period, cohort) pair with any sample.

    Pairs whose sample is empty are omitted rather than padded with
    placeholder numbers.
    """
    cells: list[StatsCell] = []
    for period in periods:
        start, end = period.ordinals()
        by_cohort: dict[CohortLabel, list[PersonPeriodStats]] = {c: [] for c in cohorts}
        for person in sorted(index):
            label = labels.get(person)
            if label not in by_cohort:
                continue
            clipped = clip_days(index[person], start, end)
            if clipped:
                by_cohort[label].append(person_period_stats(person, clipped, gap_days))
        for cohort in cohorts:
            samples = by_cohort[cohort]
            if not samples:
                continue
            cells.append(
                StatsCell(
                    period=period.name,
                    cohort=cohort.value,
                    n_persons=len(samples),
                    duration_days=period.effective_duration(),
                    metrics=summarize_persons(samples),
                )
            )
    return cells
