"""Serialize flow graphs: per-day rates, baseline-relative percentages, DOT/JSON/CSV.

Three graph flavors can be rendered to DOT: raw count graphs, per-day rate
graphs, and baseline-relative percentage graphs. All serializations are
deterministic: nodes and edges are emitted in lexicographic order, floats
are formatted with fixed precision, and JSON uses sorted keys, so two runs
on the same input produce identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import date
from typing import Mapping, Sequence

from .flowgraph import FlowGraph
from .journeys import ENTRY_NODE, EXIT_NODE, GAP_NODE, MULTIPLE_NODE

Edge = tuple[str, str]

GATEWAY_SHAPES = {
    ENTRY_NODE: "invhouse",
    EXIT_NODE: "house",
    GAP_NODE: "diamond",
    MULTIPLE_NODE: "box",
}


@dataclass(frozen=True)
class GraphStyleConfig:
    min_labeled_rate: float = 1.0  # edges below this rate are grey and unlabeled
    node_size_scale: float = 1.5  # inches added to node diameter at the maximum value
    edge_width_scale: float = 3.0  # penwidth added at the maximum edge value
    grey_color: str = "lightgrey"
    label_precision: int = 1

    def __post_init__(self) -> None:
        if self.min_labeled_rate < 0:
            raise ValueError(f"min_labeled_rate must be >= 0, got {self.min_labeled_rate}")


@dataclass
class RateGraph:
    """A FlowGraph's weights divided by a reporting duration in days."""

    window: tuple[int, int]
    duration_days: float
    node_weights: dict[str, int]
    edge_counts: dict[Edge, int]
    node_rates: dict[str, float]
    edge_rates: dict[Edge, float]


@dataclass
class RelativeFlowGraph:
    """Target rates as percentages of a baseline's rates.

    A percentage is None where the baseline rate is zero (the element is
    new, or carries no interactions in either graph); elements present only
    in the baseline appear with 0.0. Target rates ride along because
    rendering greys out low-traffic edges by absolute rate, not by percent.
    """

    baseline_name: str
    target_name: str
    node_pcts: dict[str, float | None]
    edge_pcts: dict[Edge, float | None]
    target_node_rates: dict[str, float]
    target_edge_rates: dict[Edge, float]


def to_rates(graph: FlowGraph, duration_days: float | None = None) -> RateGraph:
    """Per-day rates; ``duration_days`` overrides the window's calendar length."""
    duration = float(graph.duration_days if duration_days is None else duration_days)
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    return RateGraph(
        window=graph.window,
        duration_days=duration,
        node_weights=dict(graph.node_weights),
        edge_counts=dict(graph.edge_counts),
        node_rates={node: weight / duration for node, weight in graph.node_weights.items()},
        edge_rates={edge: count / duration for edge, count in graph.edge_counts.items()},
    )


def normalize_relative(
    target: RateGraph, baseline: RateGraph, target_name: str = "target", baseline_name: str = "baseline"
) -> RelativeFlowGraph:
    """Express target rates as percentages of baseline rates, per node and edge."""

    def pct_map(t_rates: Mapping, b_rates: Mapping) -> dict:
        out = {}
        for key in set(t_rates) | set(b_rates):
            b = b_rates.get(key, 0.0)
            t = t_rates.get(key, 0.0)
            out[key] = 100.0 * t / b if b > 0 else None
        return out

    return RelativeFlowGraph(
        baseline_name=baseline_name,
        target_name=target_name,
        node_pcts=pct_map(target.node_rates, baseline.node_rates),
        edge_pcts=pct_map(target.edge_rates, baseline.edge_rates),
        target_node_rates={n: target.node_rates.get(n, 0.0) for n in set(target.node_rates) | set(baseline.node_rates)},
        target_edge_rates={e: target.edge_rates.get(e, 0.0) for e in set(target.edge_rates) | set(baseline.edge_rates)},
    )


def _quote(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _quote_label(text: str) -> str:
    # Same escaping as _quote, but real newlines become the \n escape so
    # multi-line labels survive the trip.
    escaped = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{escaped}"'


def _node_diameter(value: float | None, vmax: float, scale: float) -> float:
    if value is None or vmax <= 0 or value <= 0:
        return 0.5
    return 0.5 + scale * math.sqrt(value / vmax)


def _penwidth(value: float | None, vmax: float, scale: float) -> float:
    if value is None or vmax <= 0 or value <= 0:
        return 1.0
    return 1.0 + scale * (value / vmax)


def _dot_lines(
    node_values: Mapping[str, float | None],
    edge_values: Mapping[Edge, float | None],
    node_label: "callable",
    edge_attrs: "callable",
    style: GraphStyleConfig,
) -> list[str]:
    lines = ["digraph shelterflow {", "  rankdir=LR;"]
    shelter_values = [
        v for n, v in node_values.items() if n not in GATEWAY_SHAPES and v is not None
    ]
    vmax = max(shelter_values, default=0.0)
    for node in sorted(node_values):
        if node in GATEWAY_SHAPES:
            lines.append(f"  {_quote(node)} [shape={GATEWAY_SHAPES[node]}];")
            continue
        value = node_values[node]
        size = _node_diameter(value, vmax, style.node_size_scale)
        attrs = [
            f"label={_quote_label(node_label(node, value))}",
            "shape=circle",
            f"width={size:.2f}",
            f"height={size:.2f}",
            "fixedsize=true",
        ]
        if value is None:
            attrs.append("style=dashed")
        lines.append(f"  {_quote(node)} [{', '.join(attrs)}];")
    emax = max((v for v in edge_values.values() if v is not None), default=0.0)
    for src, dst in sorted(edge_values):
        attrs = edge_attrs((src, dst), edge_values[(src, dst)], emax)
        lines.append(f"  {_quote(src)} -> {_quote(dst)} [{', '.join(attrs)}];")
    lines.append("}")
    return lines


def emit_dot(graph: FlowGraph | RateGraph | RelativeFlowGraph, style: GraphStyleConfig | None = None) -> str:
    """Deterministic DOT text for any of the three graph flavors.

    Count graphs label every node and edge with integers. Rate graphs label
    values per day and grey out edges below ``min_labeled_rate``. Relative
    graphs label percentages, grey out edges whose *target* rate is below
    the threshold, and draw never-seen-in-baseline elements dashed with a
    "new" marker.
    """
    style = style or GraphStyleConfig()
    p = style.label_precision

    if isinstance(graph, FlowGraph):
        def edge_attrs(edge: Edge, value, emax) -> list[str]:
            return [f"label=\"{int(value)}\"", f"penwidth={_penwidth(value, emax, style.edge_width_scale):.2f}"]

        lines = _dot_lines(
            graph.node_weights,
            graph.edge_counts,
            lambda node, value: f"{node}\n{int(value)}",
            edge_attrs,
            style,
        )
    elif isinstance(graph, RateGraph):
        def edge_attrs(edge: Edge, value, emax) -> list[str]:
            if value < style.min_labeled_rate:
                return [f"color={style.grey_color}", "penwidth=1.00"]
            return [f"label=\"{value:.{p}f}\"", f"penwidth={_penwidth(value, emax, style.edge_width_scale):.2f}"]

        lines = _dot_lines(
            graph.node_rates,
            graph.edge_rates,
            lambda node, value: f"{node}\n{value:.{p}f}/day",
            edge_attrs,
            style,
        )
    elif isinstance(graph, RelativeFlowGraph):
        def edge_attrs(edge: Edge, value, emax) -> list[str]:
            if graph.target_edge_rates.get(edge, 0.0) < style.min_labeled_rate:
                return [f"color={style.grey_color}", "penwidth=1.00"]
            if value is None:
                return ['label="new"', "style=dashed", "penwidth=1.00"]
            return [f"label=\"{value:.{p}f}%\"", f"penwidth={_penwidth(value, emax, style.edge_width_scale):.2f}"]

        def node_label(node: str, value) -> str:
            if value is None:
                return f"{node}\nnew"
            return f"{node}\n{value:.{p}f}%"

        lines = _dot_lines(graph.node_pcts, graph.edge_pcts, node_label, edge_attrs, style)
    else:
        raise TypeError(f"cannot render {type(graph).__name__} as DOT")
    return "\n".join(lines) + "\n"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _window_dict(window: tuple[int, int]) -> dict:
    return {
        "start": date.fromordinal(window[0]).isoformat(),
        "end": date.fromordinal(window[1]).isoformat(),
    }


def _sorted_edge_list(edge_fields: Mapping[Edge, dict]) -> list[dict]:
    return [
        {"from": src, "to": dst, **edge_fields[(src, dst)]} for src, dst in sorted(edge_fields)
    ]


def graph_json_dict(graph: FlowGraph) -> dict:
    return {
        "window": _window_dict(graph.window),
        "duration_days": graph.duration_days,
        "nodes": dict(sorted(graph.node_weights.items())),
        "edges": _sorted_edge_list({e: {"count": c} for e, c in graph.edge_counts.items()}),
    }


def rate_graph_json_dict(rates: RateGraph) -> dict:
    return {
        "window": _window_dict(rates.window),
        "duration_days": rates.duration_days,
        "nodes": {
            node: {"weight": rates.node_weights[node], "rate": rates.node_rates[node]}
            for node in sorted(rates.node_weights)
        },
        "edges": _sorted_edge_list(
            {e: {"count": rates.edge_counts[e], "rate": rates.edge_rates[e]} for e in rates.edge_counts}
        ),
    }


def relative_json_dict(rel: RelativeFlowGraph) -> dict:
    return {
        "baseline": rel.baseline_name,
        "target": rel.target_name,
        "nodes": {
            node: {"target_rate": rel.target_node_rates[node], "percent": rel.node_pcts[node]}
            for node in sorted(rel.node_pcts)
        },
        "edges": _sorted_edge_list(
            {
                e: {"target_rate": rel.target_edge_rates[e], "percent": rel.edge_pcts[e]}
                for e in rel.edge_pcts
            }
        ),
    }


def edge_csv_rows(rates: RateGraph, relative: RelativeFlowGraph | None = None) -> list[tuple[str, ...]]:
    """(from, to, weight, rate, percent) rows; header first, edges sorted.

    Without a relative graph the percent column is empty; with one, an
    undefined percentage (no baseline flow) is also left empty.
    """
    rows: list[tuple[str, ...]] = [("from", "to", "weight", "rate", "percent")]
    edges = set(rates.edge_counts)
    if relative is not None:
        edges |= set(relative.edge_pcts)
    for src, dst in sorted(edges):
        edge = (src, dst)
        pct = relative.edge_pcts.get(edge) if relative is not None else None
        rows.append(
            (
                src,
                dst,
                str(rates.edge_counts.get(edge, 0)),
                repr(rates.edge_rates.get(edge, 0.0)),
                "" if pct is None else repr(pct),
            )
        )
    return rows
