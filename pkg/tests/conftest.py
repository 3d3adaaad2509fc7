"""Shared fixtures: the two-person worked example and acceptance reporting."""

from __future__ import annotations

from contextlib import contextmanager

import pytest

from shelterflow import build_sequences, expand_to_interaction_days, parse_records

# Two people, one month: P1 stays a single night at A. P2 stays three nights
# at A, disappears for a month, then spends one night at B -- long enough
# away that the absence counts as a gap, not continued use.
GOLDEN_ROWS = (
    "person_id,start_date,shelter_id,duration_days",
    "P1,2018-04-01,A,1",
    "P2,2018-04-01,A,3",
    "P2,2018-05-04,B,1",
)

GOLDEN_NODE_WEIGHTS = {"A": 4, "B": 1, "Entry": 0, "Exit": 0, "Gap": 0}
GOLDEN_EDGE_COUNTS = {
    ("Entry", "A"): 2,
    ("A", "Exit"): 1,
    ("A", "Gap"): 1,
    ("Gap", "B"): 1,
    ("B", "Exit"): 1,
}


@pytest.fixture
def golden_index():
    records, report = parse_records(GOLDEN_ROWS)
    assert report.records_rejected == 0
    return expand_to_interaction_days(records)


@pytest.fixture
def golden_sequences(golden_index):
    return build_sequences(golden_index)


# --- acceptance criteria reporting -----------------------------------------
#
# test_acceptance.py wraps each criterion in the `criterion` context manager;
# the terminal-summary hook then prints one PASS/FAIL line per criterion at
# the end of the run, even with output capture on.

_ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


@pytest.fixture(scope="session")
def criterion():
    @contextmanager
    def record(name: str):
        ok = False
        try:
            yield
            ok = True
        finally:
            _ACCEPTANCE_RESULTS.append((name, ok))
            print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for name, ok in _ACCEPTANCE_RESULTS:
            terminalreporter.write_line(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}")
