"""Acceptance gate: the ten checks this package must pass, with tolerances.

 1. The two-person worked example renders bit-exact canonical JSON and DOT,
    in under a second.
 2. 200 seeded 1,000-person corpora: pipeline per-person direct transitions,
    unique shelters, tenure and stays all equal the planted truth, 100%
    agreement, under 60 seconds total.
 3. Flow conservation on >= 10,000 randomized corpora: Entry emits and Exit
    absorbs exactly one unit per person, Gap and Multiple net to zero. Exact.
 4. Cohort rules are mutually exclusive and exhaustive over >= 10,000 random
    journeys, and a corpus census sums to the person count. Exact.
 5. median/mean/p95 agree with independent sort-based computation on 1,000
    random samples: median and p95 exact, mean to 1e-9 relative.
 6. A 10,000-person corpus generated with p_move=0.10 yields a
    transitions-to-interactions ratio inside [0.08, 0.12] outside the shock.
 7. Scaling every baseline rate by 0.541 makes every defined relative value
    54.1%, to rounding.
 8. The reference census and summary table shipped as documentation are
    internally consistent; reproducing their numbers is explicitly out of
    scope (the pipeline is accepted through checks 2 and 5).
 9. A 45,000-person, ~3M person-day corpus runs ingest through graphs,
    stats and timelines in under 10 seconds and under 1 GB peak memory.
10. Two identical end-to-end CLI runs produce byte-identical artifacts.
"""

from __future__ import annotations

import json
import math
import random
import re
import shutil
import subprocess
import sys
import time
from dataclasses import replace

from shelterflow import (
    ArchetypeParams,
    GeneratorParams,
    RateGraph,
    build_flow_graph,
    build_sequences,
    canonical_json,
    classify_ordinals,
    classify_sequences,
    cohort_census,
    conservation_violations,
    daily_interactions,
    daily_transitions,
    emit_dot,
    expand_to_interaction_days,
    full_window,
    generate_corpus,
    graph_json_dict,
    net_flows,
    normalize_relative,
    parse_records,
    person_period_stats,
    stats_matrix,
    summarize,
    to_rates,
)
from shelterflow.cohorts import CohortLabel
from shelterflow.export import GraphStyleConfig
from shelterflow.presets import DEFAULT_COHORT_CONFIG, DEFAULT_PERIODS
from tests.conftest import GOLDEN_ROWS
from tests.test_cohorts import _independent_predicates
from tests.test_export import GOLDEN_DOT
from tests.test_flowgraph import random_index
from tests.test_stats import oracle_mean, oracle_median, oracle_p95, random_sample

GOLDEN_JSON = """\
{
  "duration_days": 35,
  "edges": [
    {
      "count": 1,
      "from": "A",
      "to": "Exit"
    },
    {
      "count": 1,
      "from": "A",
      "to": "Gap"
    },
    {
      "count": 1,
      "from": "B",
      "to": "Exit"
    },
    {
      "count": 2,
      "from": "Entry",
      "to": "A"
    },
    {
      "count": 1,
      "from": "Gap",
      "to": "B"
    }
  ],
  "nodes": {
    "A": 4,
    "B": 1,
    "Entry": 0,
    "Exit": 0,
    "Gap": 0
  },
  "window": {
    "end": "2018-05-06",
    "start": "2018-04-01"
  }
}
"""


def test_criterion_1_golden_example(criterion):
    with criterion("1-golden-example"):
        t0 = time.perf_counter()
        records, report = parse_records(GOLDEN_ROWS)
        assert report.records_rejected == 0
        graph = build_flow_graph(build_sequences(expand_to_interaction_days(records)))
        json_text = canonical_json(graph_json_dict(graph))
        dot_text = emit_dot(graph)
        elapsed = time.perf_counter() - t0
        assert json_text == GOLDEN_JSON
        assert dot_text == GOLDEN_DOT
        assert elapsed < 1.0, f"golden example took {elapsed:.3f}s"


# Slimmer usage patterns than the defaults so 200 corpora fit the time
# budget; episode gaps still clear the 30-day threshold, which is what the
# planting argument needs.
SWEEP_ARCHETYPES = {
    "transient": ArchetypeParams("transient", episodes=(1, 1), episode_days=(1, 10), gap_days=(31, 120)),
    "episodic": ArchetypeParams("episodic", episodes=(2, 3), episode_days=(2, 30), gap_days=(31, 180)),
    "chronic": ArchetypeParams("chronic", episodes=(1, 1), episode_days=(30, 90), gap_days=(31, 90)),
}
SWEEP_MIX = (("transient", 0.6), ("episodic", 0.3), ("chronic", 0.1))


def _sweep_params(seed: int, knobs: random.Random) -> GeneratorParams:
    return GeneratorParams(
        n_persons=1000,
        archetypes=SWEEP_ARCHETYPES,
        archetype_mix=SWEEP_MIX,
        p_move=knobs.uniform(0.0, 0.3),
        p_multi=knobs.uniform(0.0, 0.05),
        shock_entry_multiplier=knobs.uniform(0.3, 1.0),
        shock_activity_multiplier=knobs.uniform(0.5, 1.5),
        split_stay_prob=knobs.uniform(0.0, 1.0),
        duplicate_stay_prob=knobs.uniform(0.0, 1.0),
        absence_prob=knobs.uniform(0.0, 1.0),
        seed=seed,
    )


def test_criterion_2_planted_truth_sweep(criterion):
    with criterion("2-planted-truth-sweep"):
        t0 = time.perf_counter()
        knobs = random.Random(20260819)
        compared = 0
        for seed in range(200):
            params = _sweep_params(seed, knobs)
            records, truth = generate_corpus(params)
            index = expand_to_interaction_days(records)
            assert sorted(index) == sorted(truth)
            for person, days in index.items():
                want = truth[person]
                got = person_period_stats(person, days, params.gap_threshold_days)
                assert got.transitions == want.transitions, person
                assert got.unique_shelters == want.unique_shelters, person
                assert got.tenure_days == want.tenure_days, person
                assert got.stays == want.stays, person
                compared += 1
        elapsed = time.perf_counter() - t0
        assert compared == 200 * 1000
        assert elapsed < 60.0, f"sweep took {elapsed:.1f}s"


def test_criterion_3_flow_conservation(criterion):
    with criterion("3-flow-conservation"):
        rng = random.Random(424242)
        cases = 0
        for _ in range(10_000):
            index = random_index(rng)
            sequences = build_sequences(index, rng.choice((5, 30)))
            graph = build_flow_graph(sequences)
            assert conservation_violations(graph) == {}
            nets = net_flows(graph)
            persons = len(index)
            assert nets["Entry"] == -persons
            assert nets["Exit"] == persons
            for hub in ("Gap", "Multiple"):
                if hub in nets:
                    assert nets[hub] == 0
            cases += 1
        assert cases == 10_000


def test_criterion_4_cohort_partition(criterion):
    with criterion("4-cohort-partition"):
        bounds = DEFAULT_COHORT_CONFIG.bound_ordinals()
        lo = DEFAULT_COHORT_CONFIG.data_start.toordinal() - 100
        hi = DEFAULT_COHORT_CONFIG.data_end.toordinal() + 100
        rng = random.Random(515151)
        for _ in range(10_000):
            a, b = rng.randint(lo, hi), rng.randint(lo, hi)
            first, last = min(a, b), max(a, b)
            hits = [
                label for label, hit in _independent_predicates(first, last, bounds).items() if hit
            ]
            assert len(hits) <= 1, (first, last)  # mutually exclusive
            expected = hits[0] if hits else CohortLabel.UNCLASSIFIED  # exhaustive
            assert classify_ordinals(first, last, bounds) == expected

        records, _ = generate_corpus(GeneratorParams(n_persons=2000, seed=21))
        index = expand_to_interaction_days(records)
        labels = classify_sequences(build_sequences(index), DEFAULT_COHORT_CONFIG)
        census = cohort_census(labels)
        assert set(census) == set(CohortLabel)
        assert sum(census.values()) == 2000


def test_criterion_5_summary_oracles(criterion):
    with criterion("5-summary-oracles"):
        rng = random.Random(616161)
        for _ in range(1000):
            sample = random_sample(rng)
            got = summarize(sample)
            assert got.median == oracle_median(sample)
            assert got.p95 == oracle_p95(sample)
            assert math.isclose(got.mean, oracle_mean(sample), rel_tol=1e-9)


def test_criterion_6_transition_ratio(criterion):
    with criterion("6-transition-ratio"):
        params = GeneratorParams(n_persons=10_000, p_move=0.10, p_multi=0.0, seed=42)
        records, _ = generate_corpus(params)
        index = expand_to_interaction_days(records)
        sequences = build_sequences(index, params.gap_threshold_days)
        window = full_window(sequences)
        interactions = daily_interactions(index, window, smoothing_window=1)
        transitions = daily_transitions(sequences, window, "direct", smoothing_window=1)
        shock = (params.shock_start.toordinal(), params.shock_end.toordinal())
        moved = used = 0.0
        for offset in range(len(interactions)):
            day = window[0] + offset
            if not shock[0] <= day < shock[1]:
                moved += transitions.values[offset]
                used += interactions.values[offset]
        ratio = moved / used
        assert 0.08 <= ratio <= 0.12, f"ratio {ratio:.4f} outside [0.08, 0.12]"


def test_criterion_7_relative_scaling(criterion):
    with criterion("7-relative-scaling"):
        records, _ = generate_corpus(GeneratorParams(n_persons=500, p_multi=0.05, seed=13))
        sequences = build_sequences(expand_to_interaction_days(records))
        baseline = to_rates(build_flow_graph(sequences))
        scaled = RateGraph(
            window=baseline.window,
            duration_days=baseline.duration_days,
            node_weights=baseline.node_weights,
            edge_counts=baseline.edge_counts,
            node_rates={n: r * 0.541 for n, r in baseline.node_rates.items()},
            edge_rates={e: r * 0.541 for e, r in baseline.edge_rates.items()},
        )
        rel = normalize_relative(scaled, baseline, "scaled", "baseline")
        checked = 0
        for node, rate in baseline.node_rates.items():
            if rate > 0:
                assert math.isclose(rel.node_pcts[node], 54.1, abs_tol=1e-9), node
                checked += 1
            else:
                assert rel.node_pcts[node] is None, node
        for edge, rate in baseline.edge_rates.items():
            assert rate > 0  # every recorded edge carried at least one move
            assert math.isclose(rel.edge_pcts[edge], 54.1, abs_tol=1e-9), edge
            checked += 1
        assert checked > 20  # a real graph, not a toy

        # and the rendered labels all round to exactly 54.1%
        dot = emit_dot(rel, GraphStyleConfig(min_labeled_rate=0.0))
        percents = re.findall(r"(\d+\.\d)%", dot)
        assert len(percents) > 20
        assert set(percents) == {"54.1"}


# Reference figures from a five-year administrative dataset that shaped the
# default window, periods and cohort rules. The source records are not
# distributable, so reproducing these numbers is out of scope by design;
# correctness of the statistics pipeline is accepted through the planted
# truth sweep (2) and the summary oracles (5). The fixtures stay here as
# documentation and are checked only for internal consistency.
REFERENCE_CENSUS = {
    "Before": (13654, 31.6),
    "Stayed": (7986, 18.5),
    "During": (3874, 9.0),
    "After": (9672, 22.4),
}
REFERENCE_TOTAL_PERSONS = 43263

REFERENCE_COLUMNS = (
    ("pre", "Before", 687),
    ("pre", "Stayed", 687),
    ("lockdown", "During", 381),
    ("lockdown", "Stayed", 381),
    ("post", "During", 639),
    ("post", "Stayed", 639),
    ("post", "After", 639),
)
REFERENCE_SUMMARY = {
    "tenure_days": {
        "median": (11, 123, 8, 25, 75, 49, 10),
        "mean": (87.6, 209.7, 37.6, 79.4, 161.5, 124.2, 61.8),
        "p95": (448, 612, 192, 335, 552, 473, 317),
    },
    "stays": {
        "median": (4, 19, 4, 9, 11, 13, 4),
        "mean": (22.5, 46.5, 17.2, 27.9, 36.1, 33.4, 21.4),
        "p95": (99, 175, 78, 124, 161, 122, 95),
    },
    "use_percent": {
        "median": (6.7, 15.6, 10.0, 16.7, 10.0, 16.8, 10.0),
        "mean": (24.3, 27.2, 28.5, 30.6, 25.1, 30.5, 26.9),
        "p95": (100, 100, 100, 100, 100, 100, 100),
    },
    "unique_shelters": {
        "median": (1, 1, 1, 1, 1, 1, 1),
        "mean": (1.1, 1.2, 1.1, 1.2, 1.3, 1.2, 1.1),
        "p95": (2, 2, 2, 2, 3, 2, 2),
    },
    "transitions": {
        "median": (0, 0, 0, 0, 0, 0, 0),
        "mean": (0.4, 1.5, 0.3, 0.8, 1.5, 0.8, 0.4),
        "p95": (2, 8, 2, 4, 7, 4, 2),
    },
}


def test_criterion_8_reference_fixtures(criterion):
    with criterion("8-reference-fixtures"):
        # census shares match their counts and never cover everyone; the
        # remainder is the unclassified (censored) fraction
        classified = 0
        for count, share in REFERENCE_CENSUS.values():
            assert round(100 * count / REFERENCE_TOTAL_PERSONS, 1) == share
            classified += count
        assert classified < REFERENCE_TOTAL_PERSONS

        # each summary column is ordered the way skewed usage data must be,
        # and tenure never exceeds the period it was measured in
        for metric, stats in REFERENCE_SUMMARY.items():
            for i, (period, cohort, duration) in enumerate(REFERENCE_COLUMNS):
                median, mean, p95 = stats["median"][i], stats["mean"][i], stats["p95"][i]
                assert median <= mean <= p95, (metric, period, cohort)
                if metric == "tenure_days":
                    assert p95 <= duration

        # the pipeline emits the same table shape the reference uses
        records, _ = generate_corpus(GeneratorParams(n_persons=300, seed=8))
        index = expand_to_interaction_days(records)
        labels = classify_sequences(build_sequences(index), DEFAULT_COHORT_CONFIG)
        cells = stats_matrix(index, labels, DEFAULT_PERIODS, gap_days=30)
        assert cells
        period_names = {p.name for p in DEFAULT_PERIODS}
        for cell in cells:
            assert cell.period in period_names
            assert set(cell.metrics) == set(REFERENCE_SUMMARY)
        reference_pairs = {(p, c) for p, c, _ in REFERENCE_COLUMNS}
        assert {p for p, _ in reference_pairs} <= period_names
        # no numeric comparison: these figures are documentation, not targets


GENERATE_SCRIPT = """
import sys
from shelterflow import GeneratorParams, generate_corpus, records_to_csv_text
records, _ = generate_corpus(GeneratorParams(n_persons=45000, seed=99))
with open(sys.argv[1], "w", encoding="utf-8") as fh:
    fh.write(records_to_csv_text(records))
"""

PIPELINE_SCRIPT = """
import json, resource, sys, time
from shelterflow import (
    read_stay_records, expand_to_interaction_days, build_sequences,
    build_flow_graph, to_rates, normalize_relative, classify_sequences,
    stats_matrix, daily_interactions, daily_transitions, transition_ratio,
)
from shelterflow.presets import DEFAULT_COHORT_CONFIG, DEFAULT_PERIODS

t0 = time.perf_counter()
records, report = read_stay_records(sys.argv[1])
index = expand_to_interaction_days(records)
sequences = build_sequences(index)
rates = {}
for period in DEFAULT_PERIODS:
    graph = build_flow_graph(sequences, period.ordinals())
    rates[period.name] = to_rates(graph, period.effective_duration())
for period in DEFAULT_PERIODS:
    if period.name != "pre":
        normalize_relative(rates[period.name], rates["pre"], period.name, "pre")
labels = classify_sequences(sequences, DEFAULT_COHORT_CONFIG)
cells = stats_matrix(index, labels, DEFAULT_PERIODS, gap_days=30)
first, last = report.date_range
window = (first.toordinal(), last.toordinal() + 1)
interactions = daily_interactions(index, window)
transitions = daily_transitions(sequences, window, "direct")
transition_ratio(transitions, interactions)
elapsed = time.perf_counter() - t0

print(json.dumps({
    "elapsed": elapsed,
    "maxrss_kb": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss,  # KB on Linux
    "persons": len(index),
    "person_days": sum(len(days) for days in index.values()),
    "cells": len(cells),
}))
"""


def test_criterion_9_scale_budget(criterion, tmp_path):
    with criterion("9-scale-budget"):
        corpus = tmp_path / "big.csv"
        gen = subprocess.run(
            [sys.executable, "-c", GENERATE_SCRIPT, str(corpus)], capture_output=True, text=True
        )
        assert gen.returncode == 0, gen.stderr
        run = subprocess.run(
            [sys.executable, "-c", PIPELINE_SCRIPT, str(corpus)], capture_output=True, text=True
        )
        assert run.returncode == 0, run.stderr
        report = json.loads(run.stdout)
        assert report["persons"] == 45_000
        assert report["person_days"] > 2_500_000
        assert report["cells"] > 0
        assert report["elapsed"] < 10.0, f"pipeline took {report['elapsed']:.1f}s"
        assert report["maxrss_kb"] < 1_048_576, f"peak memory {report['maxrss_kb']}KB"


def test_criterion_10_deterministic_runs(criterion, tmp_path):
    with criterion("10-deterministic-runs"):
        script = shutil.which("shelterflow")
        assert script is not None, "console script not installed"

        def run_all(outdir):
            def run(*args):
                proc = subprocess.run(
                    [script, "--outdir", str(outdir), *map(str, args)],
                    capture_output=True,
                    text=True,
                )
                assert proc.returncode == 0, proc.stderr

            run("simulate", "--persons", 400, "--seed", 5)
            corpus = outdir / "corpus.csv"
            run("graph", "--input", corpus)
            run("stats", "--input", corpus)
            run("timeline", "--input", corpus, "--mode", "direct")
            run("cohorts", "--input", corpus)

        first, second = tmp_path / "one", tmp_path / "two"
        run_all(first)
        run_all(second)
        names = sorted(p.name for p in first.iterdir())
        assert names == sorted(p.name for p in second.iterdir())
        assert len(names) > 15  # simulate + graph family + stats + timeline + cohorts
        for name in names:
            assert (first / name).read_bytes() == (second / name).read_bytes(), name
