"""Flow-graph analytics for anonymized shelter stay records.

The pipeline reads (person, start_date, shelter, duration) stay records,
expands them into per-person interaction days, segments those into location
sequences, and derives directed flow graphs, cohort labels, summary
statistics and daily activity series from the sequences.
"""

__version__ = "0.1.0"

from .cohorts import (
    CohortConfig,
    CohortLabel,
    classify,
    classify_ordinals,
    classify_sequences,
    cohort_census,
)
from .export import (
    GraphStyleConfig,
    RateGraph,
    RelativeFlowGraph,
    canonical_json,
    edge_csv_rows,
    emit_dot,
    graph_json_dict,
    normalize_relative,
    rate_graph_json_dict,
    relative_json_dict,
    to_rates,
)
from .flowgraph import (
    TRANSITION_MODES,
    FlowGraph,
    Transition,
    build_flow_graph,
    conservation_violations,
    extract_transitions,
    full_window,
    is_counted_move,
    net_flows,
    shelter_transition_count,
)
from .ingest import (
    IngestReport,
    InputError,
    SchemaConfig,
    StayRecord,
    count_multi_shelter_days,
    expand_to_interaction_days,
    interaction_count,
    parse_records,
    read_stay_records,
)
from .journeys import (
    DEFAULT_GAP_DAYS,
    ENTRY_NODE,
    EXIT_NODE,
    GAP_NODE,
    GATEWAY_NODES,
    MULTIPLE_NODE,
    LocationSegment,
    LocationSequence,
    build_location_sequence,
    build_sequences,
    day_location,
    segment_days,
)
from .stats import (
    METRICS,
    MetricSummary,
    Period,
    PersonPeriodStats,
    StatsCell,
    clip_days,
    nearest_rank_p95,
    person_period_stats,
    stats_matrix,
    summarize,
    summarize_persons,
)
from .synthgen import (
    ArchetypeParams,
    GeneratorParams,
    GroundTruth,
    generate_corpus,
    records_to_csv_text,
    truth_to_json_dict,
)
from .timeline import (
    DEFAULT_SMOOTHING_WINDOW,
    DailySeries,
    daily_interactions,
    daily_transitions,
    moving_average,
    series_csv_rows,
    transition_ratio,
)

__all__ = [name for name in dir() if not name.startswith("_")]
