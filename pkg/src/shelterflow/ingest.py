"""Parse, validate, and expand raw shelter stay records.

A stay record is one row of delimiter-separated text: person id, stay start
date, shelter id, stay duration in days. Rows that violate the record
contract are rejected row-by-row with a reason code; only unreadable input
(missing file, missing header columns) is fatal.

The expanded form used by every downstream module is the *interaction day*:
one `(day, shelters)` tuple per person per calendar day with at least one
recorded stay, where `day` is a proleptic Gregorian ordinal
(``datetime.date.toordinal()``) and `shelters` is a frozenset of shelter
ids. A stay of duration d covers d consecutive days; overlapping stays at
the same shelter never double-count a day, and same-day stays at different
shelters merge into one multi-shelter day.
"""

from __future__ import annotations

import gzip
import io
from collections import Counter
from csv import reader as csv_reader
from dataclasses import dataclass, field
from datetime import date
from operator import itemgetter
from pathlib import Path
from typing import Iterable, NamedTuple

from .journeys import GATEWAY_NODES

# One person-day of shelter access: (ordinal day, frozenset of shelter ids).
InteractionDay = tuple[int, frozenset[str]]

# Row rejection reason codes, as reported in IngestReport.rejection_reasons.
REASON_FIELD_COUNT = "field_count"
REASON_EMPTY_PERSON = "empty_person_id"
REASON_EMPTY_SHELTER = "empty_shelter_id"
REASON_RESERVED_SHELTER = "reserved_shelter_name"
REASON_BAD_DATE = "bad_date"
REASON_DATE_RANGE = "date_out_of_range"
REASON_BAD_DURATION = "bad_duration"
REASON_NONPOSITIVE_DURATION = "nonpositive_duration"


class InputError(Exception):
    """Raised when an input file cannot be read or interpreted at all."""


class StayRecord(NamedTuple):
    person_id: str
    start_date: date
    shelter_id: str
    duration_days: int


@dataclass
class SchemaConfig:
    """Column mapping and parsing rules for stay-record files."""

    delimiter: str = ","
    person_column: str = "person_id"
    date_column: str = "start_date"
    shelter_column: str = "shelter_id"
    duration_column: str = "duration_days"
    date_format: str | None = None  # None = ISO-8601; else a strptime format
    min_start_date: date = date(1990, 1, 1)
    max_start_date: date = date(2100, 1, 1)


@dataclass
class IngestReport:
    """Row-level accounting for one parse pass.

    ``multi_shelter_person_days`` counts person-days on which two or more
    shelters were accessed; it is only known after day expansion and stays
    None until :func:`count_multi_shelter_days` output is attached.
    """

    records_accepted: int = 0
    records_rejected: int = 0
    rejection_reasons: Counter = field(default_factory=Counter)
    distinct_persons: int = 0
    distinct_shelters: int = 0
    date_range: tuple[date, date] | None = None
    multi_shelter_person_days: int | None = None

    def to_json_dict(self) -> dict:
        return {
            "records_accepted": self.records_accepted,
            "records_rejected": self.records_rejected,
            "rejection_reasons": {k: self.rejection_reasons[k] for k in sorted(self.rejection_reasons)},
            "distinct_persons": self.distinct_persons,
            "distinct_shelters": self.distinct_shelters,
            "date_range": None
            if self.date_range is None
            else {"min": self.date_range[0].isoformat(), "max": self.date_range[1].isoformat()},
            "multi_shelter_person_days": self.multi_shelter_person_days,
        }


def parse_records(rows: Iterable[str], schema: SchemaConfig | None = None) -> tuple[list[StayRecord], IngestReport]:
    """Parse delimiter-separated text lines into validated StayRecords.

    The first row must be a header naming the configured columns; extra
    columns are ignored. Accepted records keep input order. Malformed rows
    are counted per reason code and never abort the parse. Exact duplicate
    rows are accepted; day expansion deduplicates them later.

    Raises InputError if the header is missing a configured column.
    """
    schema = schema or SchemaConfig()
    reader = csv_reader(iter(rows), delimiter=schema.delimiter)
    # Leading blank lines and "#" comment lines (provenance stamps) are not data.
    for header in reader:
        if header and not header[0].startswith("#"):
            break
    else:
        raise InputError("input has no header row")
    header = [h.strip() for h in header]
    try:
        i_person = header.index(schema.person_column)
        i_date = header.index(schema.date_column)
        i_shelter = header.index(schema.shelter_column)
        i_duration = header.index(schema.duration_column)
    except ValueError as exc:
        raise InputError(f"header {header!r} is missing a configured column: {exc}") from None

    n_cols = max(i_person, i_date, i_shelter, i_duration) + 1
    min_ord = schema.min_start_date.toordinal()
    max_ord = schema.max_start_date.toordinal()
    date_format = schema.date_format

    records: list[StayRecord] = []
    append = records.append
    reasons: Counter = Counter()
    persons: set[str] = set()
    shelters: set[str] = set()
    date_cache: dict[str, int] = {}
    lo_day = None
    hi_day = None

    for row in reader:
        if len(row) < n_cols:
            reasons[REASON_FIELD_COUNT] += 1
            continue
        person = row[i_person].strip()
        if not person:
            reasons[REASON_EMPTY_PERSON] += 1
            continue
        shelter = row[i_shelter].strip()
        if not shelter:
            reasons[REASON_EMPTY_SHELTER] += 1
            continue
        if shelter in GATEWAY_NODES:
            reasons[REASON_RESERVED_SHELTER] += 1
            continue
        raw_date = row[i_date].strip()
        day = date_cache.get(raw_date)
        if day is None:
            try:
                if date_format is None:
                    parsed = date.fromisoformat(raw_date)
                else:
                    from datetime import datetime

                    parsed = datetime.strptime(raw_date, date_format).date()
            except ValueError:
                reasons[REASON_BAD_DATE] += 1
                continue
            day = parsed.toordinal()
            date_cache[raw_date] = day
        if not min_ord <= day <= max_ord:
            reasons[REASON_DATE_RANGE] += 1
            continue
        raw_duration = row[i_duration].strip()
        try:
            duration = int(raw_duration)
        except ValueError:
            reasons[REASON_BAD_DURATION] += 1
            continue
        if duration < 1:
            reasons[REASON_NONPOSITIVE_DURATION] += 1
            continue

        persons.add(person)
        shelters.add(shelter)
        last = day + duration - 1
        if lo_day is None or day < lo_day:
            lo_day = day
        if hi_day is None or last > hi_day:
            hi_day = last
        append(StayRecord(person, date.fromordinal(day), shelter, duration))

    report = IngestReport(
        records_accepted=len(records),
        records_rejected=sum(reasons.values()),
        rejection_reasons=reasons,
        distinct_persons=len(persons),
        distinct_shelters=len(shelters),
        date_range=None if lo_day is None else (date.fromordinal(lo_day), date.fromordinal(hi_day)),
    )
    return records, report


def read_stay_records(path: str | Path, schema: SchemaConfig | None = None) -> tuple[list[StayRecord], IngestReport]:
    """Parse one stay-record file; `.gz` suffixed files are gunzipped."""
    path = Path(path)
    try:
        if path.suffix == ".gz":
            stream = io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", newline="")
        else:
            stream = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    with stream:
        try:
            return parse_records(stream, schema)
        except (OSError, gzip.BadGzipFile, UnicodeDecodeError) as exc:
            raise InputError(f"cannot read {path}: {exc}") from None


def expand_to_interaction_days(records: Iterable[StayRecord]) -> dict[str, list[InteractionDay]]:
    """Expand stay records into per-person, date-sorted interaction days.

    A record of duration d contributes d consecutive person-days. Duplicate
    (person, day, shelter) triples collapse to one; distinct shelters on the
    same day merge into one multi-shelter day. Record order never matters.
    """
    # Expand into flat (day, shelters) lists first, then sort and merge the
    # rare same-day collisions; singleton sets are interned once per shelter.
    singleton: dict[str, frozenset[str]] = {}
    by_person: dict[str, list[InteractionDay]] = {}
    for person, start, shelter, duration in records:
        fs = singleton.get(shelter)
        if fs is None:
            fs = singleton[shelter] = frozenset((shelter,))
        days = by_person.get(person)
        if days is None:
            days = by_person[person] = []
        first = start.toordinal()
        days.extend((day, fs) for day in range(first, first + duration))

    key = itemgetter(0)
    for person, days in by_person.items():
        days.sort(key=key)
        out: list[InteractionDay] = []
        append = out.append
        prev_day = None
        for item in days:
            day = item[0]
            if day != prev_day:
                append(item)
                prev_day = day
            else:
                fs = item[1]
                last = out[-1][1]
                if last is not fs and not fs.issubset(last):
                    out[-1] = (day, last | fs)
        by_person[person] = out
    return by_person


def interaction_count(days: Iterable[InteractionDay]) -> int:
    """Total interactions (person-shelter-days) in a day list."""
    return sum(len(place) for _, place in days)


def count_multi_shelter_days(index: dict[str, list[InteractionDay]]) -> int:
    """Person-days on which more than one shelter was accessed."""
    return sum(1 for days in index.values() for _, place in days if len(place) > 1)
