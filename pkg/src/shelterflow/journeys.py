"""Segment per-person interaction days into location runs.

The unit downstream modules consume is the *location segment*: a maximal
run of days one person spent at one location, where a location is either a
shelter id or the synthetic ``Multiple`` label for days with two or more
shelters. A run tolerates interior absences of up to ``gap_days`` days; a
longer absence splits the run, as does any change of location. Each
adjacent segment pair carries a flag saying whether the absence between
them exceeded the threshold; graph construction turns flagged pairs into
visits to a ``Gap`` node and unflagged pairs into direct moves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple, Sequence

if TYPE_CHECKING:
    from .ingest import InteractionDay

ENTRY_NODE = "Entry"
EXIT_NODE = "Exit"
GAP_NODE = "Gap"
MULTIPLE_NODE = "Multiple"

# Names reserved for graph bookkeeping; ingest rejects them as shelter ids.
GATEWAY_NODES = frozenset((ENTRY_NODE, EXIT_NODE, GAP_NODE, MULTIPLE_NODE))

# An absence of more than this many days between two interaction days
# separates them into distinct episodes.
DEFAULT_GAP_DAYS = 30


class LocationSegment(NamedTuple):
    location: str  # shelter id, or MULTIPLE_NODE
    first_day: int  # ordinal of the run's first interaction day
    last_day: int  # ordinal of the run's last interaction day


@dataclass(frozen=True)
class LocationSequence:
    """One person's chronological segments plus the days behind them.

    ``gap_flags[i]`` is True when segments i and i+1 are separated by an
    over-threshold absence. ``days`` is kept (not copied) so windowed graph
    builds can weigh nodes without re-expanding records; treat it as
    immutable.
    """

    person_id: str
    segments: tuple[LocationSegment, ...]
    gap_flags: tuple[bool, ...]
    days: Sequence[InteractionDay]

    @property
    def first_day(self) -> int:
        return self.segments[0].first_day

    @property
    def last_day(self) -> int:
        return self.segments[-1].last_day


def day_location(shelters: frozenset[str]) -> str:
    """Location label for one interaction day."""
    if len(shelters) == 1:
        return next(iter(shelters))
    return MULTIPLE_NODE


def segment_days(days: Sequence[InteractionDay], gap_days: int = DEFAULT_GAP_DAYS) -> list[LocationSegment]:
    """Run-length encode one person's interaction days into segments.

    ``days`` must be sorted and free of duplicate day ordinals, which is
    exactly the shape ``expand_to_interaction_days`` produces. A segment
    extends while the location label repeats within ``gap_days`` days, so a
    short absence at the same location is continued use, not an event.
    Segment endpoints are always actual interaction days.
    """
    segments: list[LocationSegment] = []
    cur_loc: str | None = None
    cur_first = cur_last = 0
    for day, shelters in days:
        loc = MULTIPLE_NODE if len(shelters) > 1 else next(iter(shelters))
        if loc == cur_loc and day - cur_last <= gap_days:
            cur_last = day
        else:
            if cur_loc is not None:
                segments.append(LocationSegment(cur_loc, cur_first, cur_last))
            cur_loc = loc
            cur_first = cur_last = day
    if cur_loc is not None:
        segments.append(LocationSegment(cur_loc, cur_first, cur_last))
    return segments


def build_location_sequence(
    person_id: str, days: Sequence[InteractionDay], gap_days: int = DEFAULT_GAP_DAYS
) -> LocationSequence:
    """Segment one person's sorted interaction days and flag the gaps."""
    if not days:
        raise ValueError(f"person {person_id!r} has no interaction days")
    if gap_days < 1:
        raise ValueError(f"gap_days must be >= 1, got {gap_days}")
    segments = segment_days(days, gap_days)
    flags = tuple(
        nxt.first_day - prev.last_day > gap_days for prev, nxt in zip(segments, segments[1:])
    )
    return LocationSequence(person_id, tuple(segments), flags, days)


def build_sequences(
    index: dict[str, list[InteractionDay]], gap_days: int = DEFAULT_GAP_DAYS
) -> list[LocationSequence]:
    """Segment every person's days; returns sequences sorted by person id."""
    return [
        build_location_sequence(person, index[person], gap_days) for person in sorted(index) if index[person]
    ]
