"""Classify people by where their record sits relative to a lockdown interval.

A person is classified from two facts only: their overall first and last
interaction days. The config carries the data window, the lockdown
interval, and an exclusion margin (default 30 days) that guards against
censoring at the edges of the data window; every comparison below uses
half-open convention with the derived bounds inclusive on the left.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .journeys import LocationSequence


class CohortLabel(Enum):
    BEFORE = "Before"  # left before the lockdown began
    STAYED = "Stayed"  # active before the lockdown and well into it
    DURING = "During"  # first appeared inside the lockdown interval
    AFTER = "After"  # first appeared once the lockdown was ending or over
    UNCLASSIFIED = "Unclassified"  # censored or boundary cases


@dataclass(frozen=True)
class CohortConfig:
    data_start: date
    data_end: date
    lockdown_start: date
    lockdown_end: date
    exclusion_days: int = 30

    def __post_init__(self) -> None:
        if not (self.data_start < self.lockdown_start < self.lockdown_end < self.data_end):
            raise ValueError(
                "dates must satisfy data_start < lockdown_start < lockdown_end < data_end, got "
                f"{self.data_start} / {self.lockdown_start} / {self.lockdown_end} / {self.data_end}"
            )
        if self.exclusion_days < 0:
            raise ValueError(f"exclusion_days must be >= 0, got {self.exclusion_days}")

    @property
    def start_floor(self) -> date:
        """Earliest first day that is safely uncensored on the left."""
        return self.data_start + timedelta(days=self.exclusion_days)

    @property
    def end_ceiling(self) -> date:
        """Exclusive latest last day that is safely uncensored on the right."""
        return self.data_end - timedelta(days=self.exclusion_days)

    @property
    def during_entry_ceiling(self) -> date:
        """Exclusive latest first day still counted as entering during lockdown."""
        return self.lockdown_end - timedelta(days=self.exclusion_days)

    @property
    def stayed_end_floor(self) -> date:
        """Earliest last day showing continued use into the lockdown."""
        return self.lockdown_start + timedelta(days=self.exclusion_days)

    def bound_ordinals(self) -> tuple[int, int, int, int, int]:
        """(start_floor, lockdown_start, stayed_end_floor, during_entry_ceiling, end_ceiling)."""
        return (
            self.start_floor.toordinal(),
            self.lockdown_start.toordinal(),
            self.stayed_end_floor.toordinal(),
            self.during_entry_ceiling.toordinal(),
            self.end_ceiling.toordinal(),
        )


def classify_ordinals(first: int, last: int, bounds: tuple[int, int, int, int, int]) -> CohortLabel:
    """Classify from ordinal first/last days; predicates checked in order.

    The predicates are mutually exclusive by construction (the order only
    documents precedence); anything censored at a data edge or straddling a
    boundary region falls through to Unclassified.
    """
    start_floor, lockdown_start, stayed_end_floor, during_entry_ceiling, end_ceiling = bounds
    if first >= start_floor and last < lockdown_start:
        return CohortLabel.BEFORE
    if start_floor <= first < lockdown_start and stayed_end_floor <= last < end_ceiling:
        return CohortLabel.STAYED
    if lockdown_start <= first < during_entry_ceiling and last < end_ceiling:
        return CohortLabel.DURING
    if first >= during_entry_ceiling and last < end_ceiling:
        return CohortLabel.AFTER
    return CohortLabel.UNCLASSIFIED


def classify(first_day: date, last_day: date, cfg: CohortConfig) -> CohortLabel:
    if first_day > last_day:
        raise ValueError(f"first_day {first_day} is after last_day {last_day}")
    return classify_ordinals(first_day.toordinal(), last_day.toordinal(), cfg.bound_ordinals())


def classify_sequences(sequences: Sequence[LocationSequence], cfg: CohortConfig) -> dict[str, CohortLabel]:
    bounds = cfg.bound_ordinals()
    return {seq.person_id: classify_ordinals(seq.first_day, seq.last_day, bounds) for seq in sequences}


def cohort_census(labels: Iterable[CohortLabel] | Mapping[str, CohortLabel]) -> dict[CohortLabel, int]:
    """Count people per label; every label is present, zeros included."""
    census = {label: 0 for label in CohortLabel}
    values = labels.values() if isinstance(labels, Mapping) else labels
    for label in values:
        census[label] += 1
    return census
