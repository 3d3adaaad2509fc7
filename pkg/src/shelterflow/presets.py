"""Bundled default analysis configuration.

The defaults describe a five-year study window (March 2018 through April
2023) split around a March 2020 - July 2021 lockdown interval, with the
reporting durations used for per-day rate normalization fixed at 687, 381,
and 639 days. Period dates are half-open, so each period's `end` is the
day after its last covered day. All of it can be overridden via the CLI
config file; nothing below is hardcoded anywhere else.
"""

from __future__ import annotations

from datetime import date

from .cohorts import CohortConfig
from .stats import Period

DATA_START = date(2018, 3, 1)
DATA_END = date(2023, 5, 1)
LOCKDOWN_START = date(2020, 3, 17)
LOCKDOWN_END = date(2021, 7, 1)

DEFAULT_COHORT_CONFIG = CohortConfig(
    data_start=DATA_START,
    data_end=DATA_END,
    lockdown_start=LOCKDOWN_START,
    lockdown_end=LOCKDOWN_END,
    exclusion_days=30,
)

# Reporting durations are presets, deliberately not the calendar lengths of
# the period intervals; pass duration_days=None to fall back to calendar.
DEFAULT_PERIODS = (
    Period("pre", date(2018, 3, 1), date(2020, 3, 18), duration_days=687),
    Period("lockdown", date(2020, 3, 18), date(2021, 7, 2), duration_days=381),
    Period("post", date(2021, 7, 2), date(2023, 5, 2), duration_days=639),
)

DEFAULT_BASELINE_PERIOD = "pre"
