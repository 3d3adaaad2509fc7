"""Seeded synthetic stay-record corpora with planted per-person ground truth.

The generator builds each person's journey in *label space* first: episodes
of consecutive days, each day carrying a shelter set, with inter-episode
spacing always over the gap threshold. Ground truth (tenure, stays, unique
shelters, direct transition count, cohort) is computed from that planted
structure by run-length encoding the day labels, before the journey is
lowered to stay records. Lowering and its optional jitter (split records,
duplicate records, short interior absences) are constructed to leave the
planted structure recoverable, so pipeline-vs-ground-truth comparisons
test the pipeline, not the generator.

Same seed, same params: byte-identical corpus.
"""

from __future__ import annotations

import csv
import io
import random
from bisect import bisect_right
from dataclasses import dataclass, field
from datetime import date
from itertools import groupby
from typing import Iterable, Mapping, NamedTuple, Sequence

from .cohorts import CohortConfig, CohortLabel, classify_ordinals
from .ingest import StayRecord
from .journeys import MULTIPLE_NODE, day_location

CSV_HEADER = ("person_id", "start_date", "shelter_id", "duration_days")


@dataclass(frozen=True)
class ArchetypeParams:
    """Bounded integer distributions describing one usage pattern.

    ``gap_days`` bounds the spacing between an episode's last day and the
    next episode's first day; its lower bound must exceed the pipeline gap
    threshold or the two episodes would fuse into one.
    """

    name: str
    episodes: tuple[int, int]
    episode_days: tuple[int, int]
    gap_days: tuple[int, int]


DEFAULT_SHELTERS: tuple[tuple[str, float], ...] = (
    ("Shelter 1", 30.0),
    ("Shelter 2", 20.0),
    ("Shelter 3", 15.0),
    ("Shelter 4", 12.0),
    ("Shelter 5", 10.0),
    ("Shelter 6", 8.0),
    ("Shelter 7", 5.0),
)

DEFAULT_ARCHETYPES: dict[str, ArchetypeParams] = {
    "transient": ArchetypeParams("transient", episodes=(1, 1), episode_days=(1, 12), gap_days=(31, 120)),
    "episodic": ArchetypeParams("episodic", episodes=(2, 5), episode_days=(3, 40), gap_days=(31, 180)),
    "chronic": ArchetypeParams("chronic", episodes=(1, 2), episode_days=(60, 300), gap_days=(31, 90)),
}

DEFAULT_MIX: tuple[tuple[str, float], ...] = (("transient", 0.5), ("episodic", 0.35), ("chronic", 0.15))


@dataclass(frozen=True)
class GeneratorParams:
    n_persons: int = 1000
    shelters: tuple[tuple[str, float], ...] = DEFAULT_SHELTERS  # (name, popularity weight)
    archetype_mix: tuple[tuple[str, float], ...] = DEFAULT_MIX  # proportions, must sum to 1
    archetypes: Mapping[str, ArchetypeParams] = field(default_factory=lambda: dict(DEFAULT_ARCHETYPES))
    p_move: float = 0.05  # per-day probability of switching shelters within an episode
    p_multi: float = 0.01  # per-day probability of accessing a second shelter
    start: date = date(2018, 3, 1)
    end: date = date(2023, 5, 1)
    shock_start: date = date(2020, 3, 18)  # also the lockdown interval for intended cohorts
    shock_end: date = date(2021, 7, 1)
    shock_entry_multiplier: float = 1.0  # <1 thins entries during the shock
    shock_activity_multiplier: float = 1.0  # scales episode lengths started during the shock
    gap_threshold_days: int = 30  # pipeline gap rule the corpus is built against
    exclusion_days: int = 30  # margin used when labeling intended cohorts
    split_stay_prob: float = 0.0  # jitter: chance a stay is emitted as two records
    duplicate_stay_prob: float = 0.0  # jitter: chance a stay gets an overlapping duplicate
    absence_prob: float = 0.0  # jitter: chance a long run loses one interior day
    seed: int = 0


class GroundTruth(NamedTuple):
    person_id: str
    archetype: str
    cohort: CohortLabel
    transitions: int  # direct shelter-to-shelter moves planted in the journey
    unique_shelters: int
    tenure_days: int
    stays: int
    first_day: int  # ordinal
    last_day: int  # ordinal

    def to_json_dict(self) -> dict:
        return {
            "archetype": self.archetype,
            "cohort": self.cohort.value,
            "transitions": self.transitions,
            "unique_shelters": self.unique_shelters,
            "tenure_days": self.tenure_days,
            "stays": self.stays,
            "first_day": date.fromordinal(self.first_day).isoformat(),
            "last_day": date.fromordinal(self.last_day).isoformat(),
        }


class _WeightedShelters:
    def __init__(self, shelters: Sequence[tuple[str, float]]):
        self.names = [name for name, _ in shelters]
        self.singletons = {name: frozenset((name,)) for name in self.names}
        self.cum: list[float] = []
        total = 0.0
        for _, weight in shelters:
            total += weight
            self.cum.append(total)
        self.total = total

    def pick(self, rng: random.Random) -> str:
        return self.names[bisect_right(self.cum, rng.random() * self.total)]

    def pick_other(self, rng: random.Random, exclude: str) -> str:
        while True:
            name = self.pick(rng)
            if name != exclude:
                return name


def _validate(params: GeneratorParams) -> None:
    if params.n_persons < 0:
        raise ValueError(f"n_persons must be >= 0, got {params.n_persons}")
    if not params.shelters:
        raise ValueError("at least one shelter is required")
    if any(w <= 0 for _, w in params.shelters):
        raise ValueError("shelter popularity weights must be positive")
    if len({name for name, _ in params.shelters}) != len(params.shelters):
        raise ValueError("shelter names must be unique")
    mix_total = sum(w for _, w in params.archetype_mix)
    if abs(mix_total - 1.0) > 1e-9:
        raise ValueError(f"archetype mix proportions must sum to 1, got {mix_total}")
    for prob_name in ("p_move", "p_multi", "shock_entry_multiplier", "split_stay_prob", "duplicate_stay_prob", "absence_prob"):
        prob = getattr(params, prob_name)
        if not 0.0 <= prob <= 1.0:
            raise ValueError(f"{prob_name} must be in [0, 1], got {prob}")
    if params.shock_activity_multiplier <= 0:
        raise ValueError(f"shock_activity_multiplier must be positive, got {params.shock_activity_multiplier}")
    if (params.p_move > 0 or params.p_multi > 0) and len(params.shelters) < 2:
        raise ValueError("p_move/p_multi need at least two shelters")
    if params.gap_threshold_days < 1:
        raise ValueError(f"gap_threshold_days must be >= 1, got {params.gap_threshold_days}")
    if params.absence_prob > 0 and params.gap_threshold_days < 2:
        raise ValueError("absence jitter needs gap_threshold_days >= 2")
    for name, weight in params.archetype_mix:
        if name not in params.archetypes:
            raise ValueError(f"archetype mix references unknown archetype {name!r}")
        if weight < 0:
            raise ValueError(f"archetype proportions must be >= 0, got {weight} for {name!r}")
    for arch in params.archetypes.values():
        for bounds_name in ("episodes", "episode_days", "gap_days"):
            lo, hi = getattr(arch, bounds_name)
            if lo > hi:
                raise ValueError(f"{arch.name}.{bounds_name} bounds inverted: ({lo}, {hi})")
        if arch.episodes[0] < 1 or arch.episode_days[0] < 1:
            raise ValueError(f"{arch.name} must have >= 1 episode of >= 1 day")
        if arch.gap_days[0] <= params.gap_threshold_days:
            raise ValueError(
                f"{arch.name}.gap_days lower bound {arch.gap_days[0]} must exceed the "
                f"gap threshold {params.gap_threshold_days}, or episodes would fuse"
            )
    # CohortConfig re-checks date ordering; fail early with the same rule.
    if not (params.start < params.shock_start < params.shock_end < params.end):
        raise ValueError("dates must satisfy start < shock_start < shock_end < end")
    if params.shock_entry_multiplier == 0.0 and (
        params.shock_start <= params.start and params.shock_end > params.end
    ):
        raise ValueError("zero entry rate over the whole corpus window generates nothing")


_Episode = list  # list[InteractionDay], contiguous days apart from punched holes


def _walk_journey(
    rng: random.Random,
    params: GeneratorParams,
    arch: ArchetypeParams,
    shelters: _WeightedShelters,
    entry_day: int,
    end_ord: int,
    shock: tuple[int, int],
) -> list[_Episode]:
    singleton = shelters.singletons
    episodes: list[_Episode] = []
    day = entry_day
    current = shelters.pick(rng)
    for _ in range(rng.randint(*arch.episodes)):
        if day > end_ord:
            break
        length = rng.randint(*arch.episode_days)
        if params.shock_activity_multiplier != 1.0 and shock[0] <= day < shock[1]:
            length = max(1, round(length * params.shock_activity_multiplier))
        episode: _Episode = []
        for k in range(length):
            d = day + k
            if d > end_ord:
                break
            if k > 0 and params.p_move > 0 and rng.random() < params.p_move:
                current = shelters.pick_other(rng, current)
            if params.p_multi > 0 and rng.random() < params.p_multi:
                episode.append((d, frozenset((current, shelters.pick_other(rng, current)))))
            else:
                episode.append((d, singleton[current]))
        if not episode:
            break
        episodes.append(episode)
        day = episode[-1][0] + rng.randint(*arch.gap_days)
    return episodes


def _punch_holes(rng: random.Random, episodes: list[_Episode], absence_prob: float) -> list[_Episode]:
    """Remove one interior day from some same-label runs of length >= 3.

    The hole's neighbors are two days apart, far under the gap threshold,
    so segmentation still reunites the run; endpoints are never removed, so
    the planted run and episode boundaries stay put.
    """
    if absence_prob <= 0:
        return episodes
    out = []
    for episode in episodes:
        labels = [day_location(shelters) for _, shelters in episode]
        remove: set[int] = set()
        for _, run in groupby(range(len(labels)), key=lambda idx: labels[idx]):
            indexes = list(run)
            if len(indexes) >= 3 and rng.random() < absence_prob:
                remove.add(rng.randint(indexes[0] + 1, indexes[-1] - 1))
        if remove:
            episode = [entry for i, entry in enumerate(episode) if i not in remove]
        out.append(episode)
    return out


def _planted_truth(
    person_id: str, archetype: str, episodes: list[_Episode], bounds: tuple[int, int, int, int, int]
) -> GroundTruth:
    first = episodes[0][0][0]
    last = episodes[-1][-1][0]
    stays = 0
    unique: set[str] = set()
    transitions = 0
    for episode in episodes:
        for _, shelters in episode:
            stays += len(shelters)
            unique.update(shelters)
        runs = [label for label, _ in groupby(day_location(s) for _, s in episode)]
        transitions += sum(
            1 for a, b in zip(runs, runs[1:]) if a != MULTIPLE_NODE and b != MULTIPLE_NODE
        )
    return GroundTruth(
        person_id=person_id,
        archetype=archetype,
        cohort=classify_ordinals(first, last, bounds),
        transitions=transitions,
        unique_shelters=len(unique),
        tenure_days=last - first + 1,
        stays=stays,
        first_day=first,
        last_day=last,
    )


def _consecutive_runs(days: Sequence[int]) -> list[tuple[int, int]]:
    """(start, length) of each maximal run of consecutive integers."""
    runs = []
    start = prev = days[0]
    for d in days[1:]:
        if d != prev + 1:
            runs.append((start, prev - start + 1))
            start = d
        prev = d
    runs.append((start, prev - start + 1))
    return runs


def _lower_to_records(
    rng: random.Random, person_id: str, episodes: list[_Episode], params: GeneratorParams
) -> list[StayRecord]:
    by_shelter: dict[str, list[int]] = {}
    for episode in episodes:
        for day, shelters in episode:
            for shelter in shelters:
                by_shelter.setdefault(shelter, []).append(day)
    records = []
    for shelter in sorted(by_shelter):
        for run_start, run_len in _consecutive_runs(by_shelter[shelter]):
            spans = [(run_start, run_len)]
            if run_len >= 2 and rng.random() < params.split_stay_prob:
                cut = rng.randint(1, run_len - 1)
                spans = [(run_start, cut), (run_start + cut, run_len - cut)]
            for span_start, span_len in spans:
                records.append(StayRecord(person_id, date.fromordinal(span_start), shelter, span_len))
            if params.duplicate_stay_prob > 0 and rng.random() < params.duplicate_stay_prob:
                offset = rng.randint(0, run_len - 1)
                records.append(
                    StayRecord(
                        person_id,
                        date.fromordinal(run_start + offset),
                        shelter,
                        rng.randint(1, run_len - offset),
                    )
                )
    return records


def _draw_entry_day(
    rng: random.Random, start_ord: int, end_ord: int, shock: tuple[int, int], multiplier: float
) -> int:
    while True:
        day = rng.randint(start_ord, end_ord)
        if multiplier >= 1.0 or not shock[0] <= day < shock[1] or rng.random() < multiplier:
            return day


def generate_corpus(params: GeneratorParams) -> tuple[list[StayRecord], dict[str, GroundTruth]]:
    """Generate stay records plus the per-person planted ground truth.

    Records come out in a seeded shuffle (ingest must not care about
    order); ground truth is keyed by person id.
    """
    _validate(params)
    rng = random.Random(params.seed)
    shelters = _WeightedShelters(params.shelters)
    archetype_picker = _WeightedShelters(params.archetype_mix)  # same cumulative-weights trick
    cohort_cfg = CohortConfig(
        params.start, params.end, params.shock_start, params.shock_end, params.exclusion_days
    )
    bounds = cohort_cfg.bound_ordinals()
    start_ord = params.start.toordinal()
    end_ord = params.end.toordinal()
    shock = (params.shock_start.toordinal(), params.shock_end.toordinal())

    records: list[StayRecord] = []
    truth: dict[str, GroundTruth] = {}
    for i in range(params.n_persons):
        person_id = f"P{i:06d}"
        archetype = params.archetypes[archetype_picker.pick(rng)]
        entry = _draw_entry_day(rng, start_ord, end_ord, shock, params.shock_entry_multiplier)
        episodes = _walk_journey(rng, params, archetype, shelters, entry, end_ord, shock)
        episodes = _punch_holes(rng, episodes, params.absence_prob)
        truth[person_id] = _planted_truth(person_id, archetype.name, episodes, bounds)
        records.extend(_lower_to_records(rng, person_id, episodes, params))
    rng.shuffle(records)
    return records, truth


def records_to_csv_text(records: Iterable[StayRecord]) -> str:
    """The exact CSV schema ingest parses, newline line endings."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for record in records:
        writer.writerow(
            (record.person_id, record.start_date.isoformat(), record.shelter_id, record.duration_days)
        )
    return buf.getvalue()


def truth_to_json_dict(truth: Mapping[str, GroundTruth]) -> dict:
    return {person: gt.to_json_dict() for person, gt in truth.items()}
