"""Extract dated transitions from location sequences and aggregate flow graphs.

Nodes are shelter ids plus four gateways: Entry and Exit bracket each
person's journey, Gap stands in for over-threshold absences, and Multiple
is the location label for multi-shelter days. Every transition carries an
event date so windowed graphs and daily timelines clip by one rule:

  Entry -> first location   dated the person's first interaction day
  prev  -> next (no gap)    dated the next segment's first day
  prev  -> Gap              dated the prev segment's last day + 1
  Gap   -> next             dated the next segment's first day
  last  -> Exit             dated the person's last interaction day + 1

Node weights count in-window interactions attributed to member shelters,
so Multiple and the other gateways always weigh zero. Because Exit events
land one day after the last interaction, a window meant to cover a corpus
completely must extend two days past the last interaction day;
``full_window`` does that.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from operator import itemgetter
from typing import Iterable, NamedTuple, Sequence

from .journeys import ENTRY_NODE, EXIT_NODE, GAP_NODE, GATEWAY_NODES, LocationSequence

TRANSITION_MODES = ("direct", "mobility")

_NON_MOBILE = frozenset((ENTRY_NODE, EXIT_NODE, GAP_NODE))
_day_of = itemgetter(0)


class Transition(NamedTuple):
    person_id: str
    origin: str
    destination: str
    day: int  # ordinal event date, per the dating rules above


def extract_transitions(seq: LocationSequence) -> list[Transition]:
    """All dated transitions of one sequence, Entry first, Exit last."""
    segments = seq.segments
    person = seq.person_id
    first = segments[0]
    out = [Transition(person, ENTRY_NODE, first.location, first.first_day)]
    append = out.append
    for i, gapped in enumerate(seq.gap_flags):
        prev = segments[i]
        nxt = segments[i + 1]
        if gapped:
            append(Transition(person, prev.location, GAP_NODE, prev.last_day + 1))
            append(Transition(person, GAP_NODE, nxt.location, nxt.first_day))
        else:
            append(Transition(person, prev.location, nxt.location, nxt.first_day))
    last = segments[-1]
    append(Transition(person, last.location, EXIT_NODE, last.last_day + 1))
    return out


def is_counted_move(origin: str, destination: str, mode: str) -> bool:
    """Whether an edge qualifies as a shelter move under a counting mode.

    mode "direct": both endpoints are real shelters, so moves in or out of
    Multiple and all gateway-mediated movement are excluded. mode
    "mobility": both endpoints are locations (shelters or Multiple), which
    admits Multiple-mediated moves but still never Entry/Exit/Gap edges.
    """
    if mode == "direct":
        return origin not in GATEWAY_NODES and destination not in GATEWAY_NODES
    if mode == "mobility":
        return origin not in _NON_MOBILE and destination not in _NON_MOBILE
    raise ValueError(f"unknown transition mode {mode!r}; expected one of {TRANSITION_MODES}")


def shelter_transition_count(transitions: Iterable[Transition], mode: str = "direct") -> int:
    if mode not in TRANSITION_MODES:
        raise ValueError(f"unknown transition mode {mode!r}; expected one of {TRANSITION_MODES}")
    return sum(1 for t in transitions if is_counted_move(t.origin, t.destination, mode))


@dataclass
class FlowGraph:
    """Directed graph totals for journeys inside one half-open window."""

    window: tuple[int, int]  # half-open ordinal interval
    node_weights: dict[str, int] = field(default_factory=dict)
    edge_counts: dict[tuple[str, str], int] = field(default_factory=dict)

    @property
    def duration_days(self) -> int:
        return self.window[1] - self.window[0]


def full_window(sequences: Sequence[LocationSequence]) -> tuple[int, int]:
    """Smallest window containing every interaction and transition event."""
    if not sequences:
        return (0, 2)
    first = min(seq.first_day for seq in sequences)
    last = max(seq.last_day for seq in sequences)
    return (first, last + 2)


def build_flow_graph(
    sequences: Sequence[LocationSequence], window: tuple[int, int] | None = None
) -> FlowGraph:
    """Aggregate sequences into a flow graph clipped to ``window``.

    ``window`` defaults to the full corpus window. Interaction days and
    transition events outside the window are dropped independently, and no
    synthetic Entry/Exit events are invented at window edges, so a clipped
    graph is generally not flow-conserving; a full-window graph is.
    """
    if window is None:
        window = full_window(sequences)
    start, end = window
    if start >= end:
        raise ValueError(f"empty window {window!r}")

    weights: dict[str, int] = {}
    counts: dict[tuple[str, str], int] = {}
    for seq in sequences:
        days = seq.days
        lo = bisect_left(days, start, key=_day_of)
        hi = bisect_left(days, end, lo=lo, key=_day_of)
        for _, shelters in days[lo:hi]:
            for shelter in shelters:
                weights[shelter] = weights.get(shelter, 0) + 1
        for t in extract_transitions(seq):
            if start <= t.day < end:
                key = (t.origin, t.destination)
                counts[key] = counts.get(key, 0) + 1

    for src, dst in counts:
        weights.setdefault(src, 0)
        weights.setdefault(dst, 0)
    return FlowGraph(window=(start, end), node_weights=weights, edge_counts=counts)


def net_flows(graph: FlowGraph) -> dict[str, int]:
    """Inflow minus outflow per node."""
    net: dict[str, int] = {node: 0 for node in graph.node_weights}
    for (src, dst), count in graph.edge_counts.items():
        net[src] = net.get(src, 0) - count
        net[dst] = net.get(dst, 0) + count
    return net


def conservation_violations(graph: FlowGraph) -> dict[str, int]:
    """Nonzero net flows at nodes other than Entry and Exit.

    In a full-window graph every journey is an unbroken Entry->...->Exit
    path, so each node it passes through is entered exactly as often as it
    is left. Returns {} when that invariant holds.
    """
    return {
        node: flow
        for node, flow in net_flows(graph).items()
        if flow != 0 and node != ENTRY_NODE and node != EXIT_NODE
    }
