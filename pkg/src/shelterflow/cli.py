"""Command-line driver.

One run = one config. Every artifact embeds the resolved configuration and a
sha256 of the input file, so a result can always be traced back to the exact
knobs that produced it. Runs are deterministic: the same config and input
produce byte-identical artifacts.

Exit codes: 0 success, 1 configuration problem, 2 input problem, 3 bug.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import traceback
from dataclasses import asdict, dataclass
from datetime import date, datetime
from pathlib import Path
from typing import Any, Mapping, Sequence

from . import __version__
from .cohorts import CohortConfig, CohortLabel, classify_sequences, cohort_census
from .export import (
    GraphStyleConfig,
    canonical_json,
    edge_csv_rows,
    emit_dot,
    normalize_relative,
    rate_graph_json_dict,
    relative_json_dict,
    to_rates,
)
from .flowgraph import TRANSITION_MODES, build_flow_graph
from .ingest import (
    InputError,
    SchemaConfig,
    count_multi_shelter_days,
    expand_to_interaction_days,
    read_stay_records,
)
from .journeys import DEFAULT_GAP_DAYS, build_sequences
from .presets import DEFAULT_BASELINE_PERIOD, DEFAULT_COHORT_CONFIG, DEFAULT_PERIODS
from .stats import METRICS, Period, stats_matrix
from .synthgen import DEFAULT_SHELTERS, GeneratorParams, generate_corpus, records_to_csv_text, truth_to_json_dict
from .timeline import (
    DEFAULT_SMOOTHING_WINDOW,
    daily_interactions,
    daily_transitions,
    series_csv_rows,
    transition_ratio,
)


class ConfigError(Exception):
    """The run configuration (file or flags) is unusable."""


# ---------------------------------------------------------------------------
# Configuration


def default_config() -> dict[str, Any]:
    """The full knob set with defaults; config files override subsets of it."""
    c = DEFAULT_COHORT_CONFIG
    return {
        "input": None,
        "outdir": "out",
        "gap_days": DEFAULT_GAP_DAYS,
        "smoothing_window": DEFAULT_SMOOTHING_WINDOW,
        "transition_mode": None,  # timeline refuses to guess; set direct or mobility
        "baseline_period": DEFAULT_BASELINE_PERIOD,
        "cohorts": {
            "data_start": c.data_start,
            "data_end": c.data_end,
            "lockdown_start": c.lockdown_start,
            "lockdown_end": c.lockdown_end,
            "exclusion_days": c.exclusion_days,
        },
        "periods": [
            {"name": p.name, "start": p.start, "end": p.end, "duration_days": p.duration_days}
            for p in DEFAULT_PERIODS
        ],
        "style": {
            "min_labeled_rate": 1.0,
            "node_size_scale": 1.5,
            "edge_width_scale": 3.0,
            "grey_color": "lightgrey",
            "label_precision": 1,
        },
        "schema": {
            "delimiter": ",",
            "person_column": "person_id",
            "date_column": "start_date",
            "shelter_column": "shelter_id",
            "duration_column": "duration_days",
            "date_format": None,
        },
        "simulate": {
            "n_persons": 1000,
            "seed": 0,
            "p_move": 0.05,
            "p_multi": 0.01,
            "start": date(2018, 3, 1),
            "end": date(2023, 5, 1),
            "shock_start": date(2020, 3, 18),
            "shock_end": date(2021, 7, 1),
            "shock_entry_multiplier": 1.0,
            "shock_activity_multiplier": 1.0,
            "split_stay_prob": 0.0,
            "duplicate_stay_prob": 0.0,
            "absence_prob": 0.0,
            "gap_threshold_days": None,  # None = follow gap_days
            "exclusion_days": 30,
            "shelters": None,  # None = built-in seven-shelter mix
        },
    }


def _read_config_file(path: Path) -> Mapping[str, Any]:
    suffix = path.suffix.lower()
    try:
        if suffix == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # 3.10
                import tomli as tomllib
            with open(path, "rb") as fh:
                return tomllib.load(fh)
        if suffix == ".json":
            with open(path, encoding="utf-8") as fh:
                loaded = json.load(fh)
            if not isinstance(loaded, dict):
                raise ConfigError(f"config root in {path} must be an object")
            return loaded
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except ValueError as exc:  # TOMLDecodeError and JSONDecodeError both subclass it
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    raise ConfigError(f"config file must end in .toml or .json, got {path.name}")


def _merge_config(base: dict[str, Any], override: Mapping[str, Any], context: str = "") -> None:
    """Recursive strict merge: unknown keys are an error, tables merge, rest replaces."""
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {context}{key!r}")
        if isinstance(base[key], dict) and isinstance(value, Mapping):
            _merge_config(base[key], value, f"{context}{key}.")
        else:
            base[key] = value


def _as_date(value: Any, keypath: str) -> date:
    if isinstance(value, datetime):
        return value.date()
    if isinstance(value, date):
        return value
    if isinstance(value, str):
        try:
            return date.fromisoformat(value)
        except ValueError:
            raise ConfigError(f"{keypath} is not an ISO date: {value!r}") from None
    raise ConfigError(f"{keypath} must be a date, got {type(value).__name__}")


def _as_int(value: Any, keypath: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{keypath} must be an integer, got {value!r}")
    return value


@dataclass
class ResolvedConfig:
    input: str | None
    outdir: str
    gap_days: int
    smoothing_window: int
    transition_mode: str | None
    baseline_period: str
    cohorts: CohortConfig
    periods: tuple[Period, ...]
    style: GraphStyleConfig
    schema: SchemaConfig
    simulate_raw: dict[str, Any]
    provenance: dict[str, Any]  # json-ready config minus input/output paths


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, datetime):
        return value.date().isoformat()
    if isinstance(value, date):
        return value.isoformat()
    return value


def resolve_config(args: argparse.Namespace) -> ResolvedConfig:
    raw = default_config()
    if getattr(args, "config", None):
        _merge_config(raw, _read_config_file(Path(args.config)))

    # Flags override the file one-for-one.
    if getattr(args, "input", None) is not None:
        raw["input"] = args.input
    if getattr(args, "outdir", None) is not None:
        raw["outdir"] = args.outdir
    if getattr(args, "gap_days", None) is not None:
        raw["gap_days"] = args.gap_days
    if getattr(args, "smoothing_window", None) is not None:
        raw["smoothing_window"] = args.smoothing_window
    if getattr(args, "mode", None) is not None:
        raw["transition_mode"] = args.mode
    if getattr(args, "baseline", None) is not None:
        raw["baseline_period"] = args.baseline
    for key in (
        "n_persons",
        "seed",
        "p_move",
        "p_multi",
        "shock_entry_multiplier",
        "shock_activity_multiplier",
        "split_stay_prob",
        "duplicate_stay_prob",
        "absence_prob",
    ):
        value = getattr(args, key, None)
        if value is not None:
            raw["simulate"][key] = value

    gap_days = _as_int(raw["gap_days"], "gap_days")
    if gap_days < 1:
        raise ConfigError(f"gap_days must be >= 1, got {gap_days}")
    smoothing = _as_int(raw["smoothing_window"], "smoothing_window")
    if smoothing < 1:
        raise ConfigError(f"smoothing_window must be >= 1, got {smoothing}")
    mode = raw["transition_mode"]
    if mode is not None and mode not in TRANSITION_MODES:
        raise ConfigError(f"transition_mode must be one of {TRANSITION_MODES}, got {mode!r}")

    cohort_section = raw["cohorts"]
    try:
        cohorts = CohortConfig(
            data_start=_as_date(cohort_section["data_start"], "cohorts.data_start"),
            data_end=_as_date(cohort_section["data_end"], "cohorts.data_end"),
            lockdown_start=_as_date(cohort_section["lockdown_start"], "cohorts.lockdown_start"),
            lockdown_end=_as_date(cohort_section["lockdown_end"], "cohorts.lockdown_end"),
            exclusion_days=_as_int(cohort_section["exclusion_days"], "cohorts.exclusion_days"),
        )
    except ValueError as exc:
        raise ConfigError(f"cohorts: {exc}") from None

    periods = []
    for i, entry in enumerate(raw["periods"]):
        if not isinstance(entry, Mapping) or "name" not in entry or "start" not in entry or "end" not in entry:
            raise ConfigError(f"periods[{i}] needs name, start and end")
        duration = entry.get("duration_days")
        period = Period(
            name=str(entry["name"]),
            start=_as_date(entry["start"], f"periods[{i}].start"),
            end=_as_date(entry["end"], f"periods[{i}].end"),
            duration_days=None if duration is None else _as_int(duration, f"periods[{i}].duration_days"),
        )
        if period.start >= period.end:
            raise ConfigError(f"periods[{i}] ({period.name}): start must precede end")
        if period.duration_days is not None and period.duration_days < 1:
            raise ConfigError(f"periods[{i}] ({period.name}): duration_days must be >= 1")
        periods.append(period)
    names = [p.name for p in periods]
    if len(set(names)) != len(names):
        raise ConfigError(f"period names must be unique, got {names}")

    try:
        style = GraphStyleConfig(**raw["style"])
        schema = SchemaConfig(**raw["schema"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

    provenance = {
        "gap_days": gap_days,
        "smoothing_window": smoothing,
        "transition_mode": mode,
        "baseline_period": raw["baseline_period"],
        "cohorts": _jsonable(
            {
                "data_start": cohorts.data_start,
                "data_end": cohorts.data_end,
                "lockdown_start": cohorts.lockdown_start,
                "lockdown_end": cohorts.lockdown_end,
                "exclusion_days": cohorts.exclusion_days,
            }
        ),
        "periods": [
            {
                "name": p.name,
                "start": p.start.isoformat(),
                "end": p.end.isoformat(),
                "duration_days": p.duration_days,
            }
            for p in periods
        ],
        "style": asdict(style),
        "schema": {k: v for k, v in asdict(schema).items() if k not in ("min_start_date", "max_start_date")},
        "simulate": _jsonable(raw["simulate"]),
    }

    return ResolvedConfig(
        input=raw["input"],
        outdir=str(raw["outdir"]),
        gap_days=gap_days,
        smoothing_window=smoothing,
        transition_mode=mode,
        baseline_period=str(raw["baseline_period"]),
        cohorts=cohorts,
        periods=tuple(periods),
        style=style,
        schema=schema,
        simulate_raw=raw["simulate"],
        provenance=provenance,
    )


# ---------------------------------------------------------------------------
# Artifact plumbing


class Artifacts:
    """Writes named artifacts under outdir; leaves a FAILED marker on a crash."""

    def __init__(self, outdir: Path):
        self.outdir = outdir
        self.written: list[str] = []

    def write(self, name: str, text: str) -> None:
        self.outdir.mkdir(parents=True, exist_ok=True)
        if not self.written:
            # A fresh run supersedes any failure evidence from the previous one.
            (self.outdir / "FAILED").unlink(missing_ok=True)
        (self.outdir / name).write_text(text, encoding="utf-8")
        self.written.append(name)

    def mark_failed(self, exc: BaseException) -> None:
        if self.written:
            note = f"incomplete run: {type(exc).__name__}: {exc}\nartifacts written: {', '.join(self.written)}\n"
            (self.outdir / "FAILED").write_text(note, encoding="utf-8")


def _meta(cfg: ResolvedConfig, input_sha256: str | None) -> dict[str, Any]:
    return {
        "tool": "shelterflow",
        "version": __version__,
        "config": cfg.provenance,
        "input_sha256": input_sha256,
    }


def _compact(meta: Mapping[str, Any]) -> str:
    return json.dumps(meta, sort_keys=True, separators=(",", ":"))


def _dot_artifact(meta: Mapping[str, Any], dot_text: str) -> str:
    return f"// provenance: {_compact(meta)}\n{dot_text}"


def _csv_text(rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _csv_artifact(meta: Mapping[str, Any], rows: Sequence[Sequence[str]]) -> str:
    return f"# provenance: {_compact(meta)}\n{_csv_text(rows)}"


def _load_input(cfg: ResolvedConfig, allow_empty: bool = False):
    if not cfg.input:
        raise ConfigError("no input file given (use --input or the 'input' config key)")
    path = Path(cfg.input)
    try:
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    records, report = read_stay_records(path, cfg.schema)
    if not records and not allow_empty:
        raise InputError(f"no valid stay records in {path}")
    return records, report, digest


# ---------------------------------------------------------------------------
# Subcommands


def cmd_validate(cfg: ResolvedConfig, args: argparse.Namespace, out: Artifacts) -> None:
    records, report, digest = _load_input(cfg, allow_empty=True)
    index = expand_to_interaction_days(records)
    report.multi_shelter_person_days = count_multi_shelter_days(index)
    meta = _meta(cfg, digest)
    out.write("report.json", canonical_json({"meta": meta, "report": report.to_json_dict()}))


def cmd_graph(cfg: ResolvedConfig, args: argparse.Namespace, out: Artifacts) -> None:
    names = [p.name for p in cfg.periods]
    if cfg.baseline_period not in names:
        raise ConfigError(f"baseline_period {cfg.baseline_period!r} is not a configured period (have {names})")
    records, report, digest = _load_input(cfg)
    index = expand_to_interaction_days(records)
    sequences = build_sequences(index, cfg.gap_days)
    meta = _meta(cfg, digest)

    rates_by_name = {}
    for period in cfg.periods:
        graph = build_flow_graph(sequences, period.ordinals())
        rates = to_rates(graph, period.effective_duration())
        rates_by_name[period.name] = rates
        out.write(f"graph_{period.name}.json", canonical_json({"meta": meta, "graph": rate_graph_json_dict(rates)}))
        out.write(f"graph_{period.name}.dot", _dot_artifact(meta, emit_dot(rates, cfg.style)))
        out.write(f"graph_{period.name}_edges.csv", _csv_artifact(meta, edge_csv_rows(rates)))

    baseline = rates_by_name[cfg.baseline_period]
    for period in cfg.periods:
        if period.name == cfg.baseline_period:
            continue
        rel = normalize_relative(rates_by_name[period.name], baseline, period.name, cfg.baseline_period)
        stem = f"relative_{period.name}_vs_{cfg.baseline_period}"
        out.write(f"{stem}.json", canonical_json({"meta": meta, "graph": relative_json_dict(rel)}))
        out.write(f"{stem}.dot", _dot_artifact(meta, emit_dot(rel, cfg.style)))
        out.write(f"{stem}_edges.csv", _csv_artifact(meta, edge_csv_rows(rates_by_name[period.name], rel)))


def cmd_timeline(cfg: ResolvedConfig, args: argparse.Namespace, out: Artifacts) -> None:
    mode = cfg.transition_mode
    if mode is None:
        raise ConfigError("timeline needs a counting mode: --mode direct|mobility (or the transition_mode config key)")
    records, report, digest = _load_input(cfg)
    index = expand_to_interaction_days(records)
    sequences = build_sequences(index, cfg.gap_days)
    first, last = report.date_range
    window = (first.toordinal(), last.toordinal() + 1)

    interactions = daily_interactions(index, window, smoothing_window=cfg.smoothing_window)
    transitions = daily_transitions(sequences, window, mode, smoothing_window=cfg.smoothing_window)
    series = [
        interactions,
        transitions,
        transition_ratio(transitions, interactions, label=f"ratio[{mode}]"),
    ]
    if getattr(args, "by_cohort", False):
        labels = classify_sequences(sequences, cfg.cohorts)
        for cohort in CohortLabel:
            series.append(
                daily_interactions(index, window, cohort, labels, smoothing_window=cfg.smoothing_window)
            )
            series.append(
                daily_transitions(sequences, window, mode, cohort, labels, smoothing_window=cfg.smoothing_window)
            )

    rows = [("date", "value", "label"), *series_csv_rows(series)]
    out.write("timeline.csv", _csv_artifact(_meta(cfg, digest), rows))


def _render_number(value: Any) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def cmd_stats(cfg: ResolvedConfig, args: argparse.Namespace, out: Artifacts) -> None:
    records, report, digest = _load_input(cfg)
    index = expand_to_interaction_days(records)
    sequences = build_sequences(index, cfg.gap_days)
    labels = classify_sequences(sequences, cfg.cohorts)
    cells = stats_matrix(index, labels, cfg.periods, gap_days=cfg.gap_days)
    if not cells:
        raise InputError("no persons fall inside any configured period")
    meta = _meta(cfg, digest)

    columns = [
        {
            "period": cell.period,
            "cohort": cell.cohort,
            "n_persons": cell.n_persons,
            "duration_days": cell.duration_days,
            "metrics": {
                metric: {"median": s.median, "mean": s.mean, "p95": s.p95}
                for metric, s in cell.metrics.items()
            },
        }
        for cell in cells
    ]
    out.write("stats.json", canonical_json({"meta": meta, "columns": columns}))

    rows: list[tuple[str, ...]] = [("metric", *[f"{c.period}:{c.cohort}" for c in cells])]
    rows.append(("persons", *[str(c.n_persons) for c in cells]))
    rows.append(("duration_days", *[str(c.duration_days) for c in cells]))
    for metric in METRICS:
        for stat in ("median", "mean", "p95"):
            rows.append(
                (
                    f"{stat}_{metric}",
                    *[_render_number(getattr(c.metrics[metric], stat)) for c in cells],
                )
            )
    out.write("stats.csv", _csv_artifact(meta, rows))


def cmd_cohorts(cfg: ResolvedConfig, args: argparse.Namespace, out: Artifacts) -> None:
    records, report, digest = _load_input(cfg)
    index = expand_to_interaction_days(records)
    sequences = build_sequences(index, cfg.gap_days)
    labels = classify_sequences(sequences, cfg.cohorts)
    census = cohort_census(labels)
    payload = {
        "census": {label.value: census[label] for label in CohortLabel},
        "total": len(labels),
    }
    out.write("cohorts.json", canonical_json({"meta": _meta(cfg, digest), **payload}))


def cmd_simulate(cfg: ResolvedConfig, args: argparse.Namespace, out: Artifacts) -> None:
    sim = cfg.simulate_raw
    shelters = sim["shelters"]
    if shelters is None:
        shelter_weights = DEFAULT_SHELTERS
    else:
        try:
            shelter_weights = tuple((str(name), float(weight)) for name, weight in shelters)
        except (TypeError, ValueError):
            raise ConfigError("simulate.shelters must be a list of [name, weight] pairs") from None
    gap = sim["gap_threshold_days"]
    try:
        params = GeneratorParams(
            n_persons=_as_int(sim["n_persons"], "simulate.n_persons"),
            shelters=shelter_weights,
            p_move=float(sim["p_move"]),
            p_multi=float(sim["p_multi"]),
            start=_as_date(sim["start"], "simulate.start"),
            end=_as_date(sim["end"], "simulate.end"),
            shock_start=_as_date(sim["shock_start"], "simulate.shock_start"),
            shock_end=_as_date(sim["shock_end"], "simulate.shock_end"),
            shock_entry_multiplier=float(sim["shock_entry_multiplier"]),
            shock_activity_multiplier=float(sim["shock_activity_multiplier"]),
            gap_threshold_days=cfg.gap_days if gap is None else _as_int(gap, "simulate.gap_threshold_days"),
            exclusion_days=_as_int(sim["exclusion_days"], "simulate.exclusion_days"),
            split_stay_prob=float(sim["split_stay_prob"]),
            duplicate_stay_prob=float(sim["duplicate_stay_prob"]),
            absence_prob=float(sim["absence_prob"]),
            seed=_as_int(sim["seed"], "simulate.seed"),
        )
        records, truth = generate_corpus(params)
    except ValueError as exc:
        raise ConfigError(f"simulate: {exc}") from None
    meta = _meta(cfg, None)
    out.write("corpus.csv", f"# provenance: {_compact(meta)}\n{records_to_csv_text(records)}")
    out.write("ground_truth.json", canonical_json({"meta": meta, "truth": truth_to_json_dict(truth)}))


_COMMANDS = {
    "validate": cmd_validate,
    "graph": cmd_graph,
    "timeline": cmd_timeline,
    "stats": cmd_stats,
    "cohorts": cmd_cohorts,
    "simulate": cmd_simulate,
}


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shelterflow",
        description="Flow-graph analytics over shelter stay records.",
    )
    parser.add_argument("--config", metavar="PATH", help="TOML or JSON run configuration")
    parser.add_argument("--outdir", metavar="DIR", help="artifact directory (default: out)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add_command(name: str, help_text: str, needs_input: bool = True) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_text)
        if needs_input:
            sp.add_argument("--input", metavar="PATH", help="stay-record CSV (.gz accepted)")
            sp.add_argument("--gap-days", type=int, dest="gap_days", metavar="N", help="absence length that opens a gap")
        return sp

    add_command("validate", "parse the input and write a data-quality report")
    graph = add_command("graph", "per-period flow graphs plus baseline-relative views")
    graph.add_argument("--baseline", metavar="PERIOD", help="period the relative views divide by")
    timeline = add_command("timeline", "daily interaction, transition and ratio series")
    timeline.add_argument("--mode", choices=TRANSITION_MODES, help="which moves count as transitions")
    timeline.add_argument("--smoothing", type=int, dest="smoothing_window", metavar="N", help="moving-average window")
    timeline.add_argument("--by-cohort", action="store_true", dest="by_cohort", help="also emit per-cohort series")
    add_command("stats", "per-period, per-cohort summary statistics")
    add_command("cohorts", "classify people and write the cohort census")
    simulate = add_command("simulate", "generate a synthetic corpus with ground truth", needs_input=False)
    simulate.add_argument("--persons", type=int, dest="n_persons", metavar="N")
    simulate.add_argument("--seed", type=int, metavar="N")
    simulate.add_argument("--p-move", type=float, dest="p_move", metavar="P")
    simulate.add_argument("--p-multi", type=float, dest="p_multi", metavar="P")
    simulate.add_argument("--entry-multiplier", type=float, dest="shock_entry_multiplier", metavar="X")
    simulate.add_argument("--activity-multiplier", type=float, dest="shock_activity_multiplier", metavar="X")
    simulate.add_argument("--split-prob", type=float, dest="split_stay_prob", metavar="P")
    simulate.add_argument("--duplicate-prob", type=float, dest="duplicate_stay_prob", metavar="P")
    simulate.add_argument("--absence-prob", type=float, dest="absence_prob", metavar="P")
    return parser


def _diagnostic(kind: str, exc: BaseException) -> None:
    print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for usage errors; fold the latter
        # into the config-error code.
        return 0 if exc.code in (0, None) else 1

    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        _diagnostic("config", exc)
        return 1

    out = Artifacts(Path(cfg.outdir))
    try:
        _COMMANDS[args.command](cfg, args, out)
        return 0
    except ConfigError as exc:
        out.mark_failed(exc)
        _diagnostic("config", exc)
        return 1
    except InputError as exc:
        out.mark_failed(exc)
        _diagnostic("input", exc)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        out.mark_failed(exc)
        traceback.print_exc()
        _diagnostic("internal", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
