"""Command-line pipeline: synth -> ingest -> build-graph -> communities ->
metrics / timeline / evaluate / simulate.

All subcommands accept --config pointing at a TOML file with one section
per stage; explicit flags win over config values.  Artifacts are plain
files in a run directory, annotated with provenance (tool version, config
hash, seed).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import date
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from . import community, epidemic, evaluation, graph, ingest, metrics, synth


class StageError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage
        self.message = message


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise StageError("config", f"config file not found: {path}") from exc


def config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def provenance_lines(cfg: dict, seed: int | None) -> list[str]:
    return [
        f"tool=colograph {__version__}",
        f"config_hash={config_hash(cfg)}",
        f"seed={seed}",
    ]


def _cfg_get(cfg: dict, section: str, key: str, flag_value, default):
    if flag_value is not None:
        return flag_value
    return cfg.get(section, {}).get(key, default)


def _window_spec(center: str, span_days: int, epoch_seconds: int) -> ingest.WindowSpec:
    return ingest.WindowSpec(
        center_date=date.fromisoformat(center),
        span_days=span_days,
        epoch_seconds=epoch_seconds,
    )


def _format_spec(args) -> ingest.FormatSpec:
    kwargs = {}
    if getattr(args, "format", None):
        kwargs["kind"] = args.format
    if getattr(args, "delimiter", None):
        kwargs["delimiter"] = args.delimiter
    if getattr(args, "has_header", False):
        kwargs["has_header"] = True
    if getattr(args, "map", None):
        mapping = dict(kv.split("=", 1) for kv in args.map.split(","))
        if kwargs.get("kind", "csv") == "jsonl":
            kwargs["keys"] = mapping
        else:
            cols = sorted(mapping, key=lambda k: int(mapping[k]))
            kwargs["columns"] = tuple(cols)
    return ingest.FormatSpec(**kwargs)


def _load_window_graph(args, cfg, events_path, center) -> tuple:
    span = _cfg_get(cfg, "window", "span_days", args.span_days, 42)
    epoch = _cfg_get(cfg, "window", "epoch_seconds", args.epoch_seconds, 86400)
    window = _window_spec(center, span, epoch)
    epoched, report = ingest.parse_event_file(events_path, _format_spec(args), window)
    params = graph.BuildParams(
        n_max=_cfg_get(cfg, "graph", "n_max", getattr(args, "n_max", None), 50),
        gamma=_cfg_get(cfg, "graph", "gamma", getattr(args, "gamma", None), 0.8),
    )
    g = graph.build_graph(
        epoched,
        params,
        max_pairs_in_memory=_cfg_get(
            cfg, "graph", "max_pairs_in_memory", getattr(args, "max_pairs_in_memory", None), 4_000_000
        ),
    )
    return window, g, report


# ---------------------------------------------------------------- subcommands


def cmd_synth(args, cfg) -> int:
    sec = cfg.get("synth", {})
    schedule = synth.MixingSchedule(
        tuple(
            float(x)
            for x in (args.schedule or ",".join(map(str, sec.get("schedule", []))) or "0.9").split(",")
        )
    )
    pop = synth.PopulationSpec(
        households=_cfg_get(cfg, "synth", "households", args.households, 100),
        workplaces=_cfg_get(cfg, "synth", "workplaces", args.workplaces, 10),
        household_size_range=(
            _cfg_get(cfg, "synth", "household_size_min", args.household_size_min, 1),
            _cfg_get(cfg, "synth", "household_size_max", args.household_size_max, 4),
        ),
        workplace_assignment_fraction=_cfg_get(
            cfg, "synth", "worker_fraction", args.worker_fraction, 0.5
        ),
        devices_per_person=_cfg_get(
            cfg, "synth", "devices_per_person", args.devices_per_person, 2
        ),
        seed=_cfg_get(cfg, "synth", "seed", args.seed, 0),
        guest_fraction=_cfg_get(cfg, "synth", "guest_fraction", args.guest_fraction, 0.0),
    )
    start = date.fromisoformat(_cfg_get(cfg, "synth", "start", args.start, "2020-01-20"))
    out = Path(args.out or "data")
    summary = synth.generate_events(pop, schedule, start, out)
    span = _cfg_get(cfg, "window", "span_days", args.span_days, 42)
    centers = synth.scenario_manifest(
        schedule, start, summary["events"], out / "manifest.csv", span_days=span
    )
    summary["manifest"] = str(out / "manifest.csv")
    summary["windows"] = len(centers)
    print(json.dumps(summary))
    return 0


def cmd_ingest(args, cfg) -> int:
    window = None
    if args.center:
        window = _window_spec(
            args.center,
            _cfg_get(cfg, "window", "span_days", args.span_days, 42),
            _cfg_get(cfg, "window", "epoch_seconds", args.epoch_seconds, 86400),
        )
    try:
        _, report = ingest.parse_event_file(args.input, _format_spec(args), window)
    except FileNotFoundError as exc:
        raise StageError("ingest", f"event file not found: {args.input}") from exc
    except ingest.IngestError as exc:
        raise StageError("ingest", str(exc)) from exc
    line = report.to_json()
    if args.out:
        Path(args.out).write_text(line + "\n", encoding="utf-8")
    print(line)
    return 0


def cmd_build_graph(args, cfg) -> int:
    try:
        window, g, report = _load_window_graph(args, cfg, args.input, args.center)
    except FileNotFoundError as exc:
        raise StageError("ingest", f"event file not found: {args.input}") from exc
    except ingest.IngestError as exc:
        raise StageError("ingest", str(exc)) from exc
    out = args.out or "graph"
    graph.write_graph(g, out, provenance_lines(cfg, args.seed))
    print(json.dumps(graph.graph_stats(g) | {"ingest": json.loads(report.to_json())}))
    return 0


def cmd_communities(args, cfg) -> int:
    g = graph.read_graph(args.graph)
    seed = _cfg_get(cfg, "community", "seed", args.seed, 0)
    resolution = _cfg_get(cfg, "community", "resolution", args.resolution, 1.0)
    if args.level == "first":
        part = community.louvain_first_level(g, seed=seed, resolution=resolution)
    else:
        part = community.louvain_hierarchy(g, seed=seed, resolution=resolution)[-1]
    community.write_partition(part, args.out, provenance_lines(cfg, seed))
    print(json.dumps({"communities": part.community_count, "nodes": len(part.assignment)}))
    return 0


def cmd_metrics(args, cfg) -> int:
    g = graph.read_graph(args.graph)
    part = community.read_partition(args.partition)
    out = {}
    # both modes are reported; --mode selects which leads the output
    for mode in (args.mode, *(m for m in metrics.MODES if m != args.mode)):
        try:
            m = metrics.compute_metrics(g, part, mode)
            out[mode] = {"q": m.q, "r": m.r, "l_total": m.l_total}
        except metrics.UndefinedMetricError:
            out[mode] = {"q": None, "r": None, "l_total": 0.0}
    line = json.dumps(out)
    if args.out:
        Path(args.out).write_text(line + "\n", encoding="utf-8")
    print(line)
    return 0


def _timeline_windows(args, cfg):
    rows = synth.read_manifest(args.windows)
    seed = _cfg_get(cfg, "community", "seed", args.seed, 0)
    resolution = _cfg_get(cfg, "community", "resolution", args.resolution, 1.0)
    windows = []
    for center, events_path in rows:
        window, g, _ = _load_window_graph(args, cfg, events_path, center.isoformat())
        part = community.louvain_first_level(g, seed=seed, resolution=resolution)
        windows.append((window, g, part))
    return windows


def cmd_timeline(args, cfg) -> int:
    windows = _timeline_windows(args, cfg)
    mode = _cfg_get(cfg, "metrics", "mode", args.mode, "weighted")
    rows = metrics.metric_timeline(windows, mode)
    out = args.out or "timeline.csv"
    metrics.write_timeline(rows, out, provenance_lines(cfg, args.seed))
    print(json.dumps({"windows": len(rows), "out": str(out)}))
    return 0


def cmd_evaluate(args, cfg) -> int:
    observations = evaluation.read_observations(args.ground_truth)
    min_days = _cfg_get(cfg, "evaluate", "min_days", args.min_days, 2)
    if args.no_guest_filter:
        gt = evaluation.unfiltered_ground_truth(observations)
    else:
        gt = evaluation.guest_filter(observations, min_days)
    part = community.read_partition(args.partition)
    report = evaluation.precision_recall(gt, part)
    if args.out:
        evaluation.write_report(report, args.out)
    print(
        json.dumps(
            {
                "count": report.count,
                "mean_precision": report.mean_precision,
                "mean_recall": report.mean_recall,
                "weighted_mean_precision": report.weighted_mean_precision,
                "weighted_mean_recall": report.weighted_mean_recall,
                "provenance": gt.provenance,
            }
        )
    )
    return 0


def cmd_simulate(args, cfg) -> int:
    g = graph.read_graph(args.graph)
    part = community.read_partition(args.partition) if args.partition else None
    params = epidemic.EpidemicParams(
        model=_cfg_get(cfg, "simulate", "model", args.model, "sir"),
        beta=_cfg_get(cfg, "simulate", "beta", args.beta, 0.1),
        recovery_steps=_cfg_get(cfg, "simulate", "recovery_steps", args.recovery_steps, 5),
        initial_infected=(args.seeds, _cfg_get(cfg, "simulate", "seed", args.seed, 0)),
        max_steps=_cfg_get(cfg, "simulate", "max_steps", args.max_steps, 100),
        trials=_cfg_get(cfg, "simulate", "trials", args.trials, 1),
        weight_coupling=_cfg_get(
            cfg, "simulate", "weight_coupling", args.weight_coupling, "bernoulli_scaled"
        ),
    )
    seed = _cfg_get(cfg, "simulate", "seed", args.seed, 0)
    try:
        trajectories = epidemic.simulate(g, params, part, seed)
    except epidemic.SimulationParameterError as exc:
        raise StageError("simulate", str(exc)) from exc
    if args.out:
        epidemic.write_trajectories(trajectories, args.out)
    print(epidemic.run_summary(params, seed, trajectories))
    return 0


def cmd_run(args, cfg) -> int:
    """Run the configured stages end to end into one run directory."""
    out = Path(args.out or cfg.get("run", {}).get("out", "run"))
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else cfg.get("run", {}).get("seed", 0)
    manifest = {
        "tool": f"colograph {__version__}",
        "config_hash": config_hash(cfg),
        "seed": seed,
        "stages": [],
    }

    def _stage(name, fn):
        try:
            fn()
        except StageError:
            raise
        except FileNotFoundError as exc:
            raise StageError(name, str(exc)) from exc
        except (ValueError, OSError, ingest.IngestError) as exc:
            raise StageError(name, str(exc)) from exc
        manifest["stages"].append(name)

    if "synth" in cfg:
        ns_synth = _namespace_defaults(
            households=None, workplaces=None, household_size_min=None,
            household_size_max=None, worker_fraction=None, devices_per_person=None,
            guest_fraction=None, schedule=None, start=None, span_days=None,
            seed=seed, out=str(out / "data"),
        )
        _stage("synth", lambda: cmd_synth(ns_synth, cfg))
        events = out / "data" / "events.csv"
        windows_manifest = out / "data" / "manifest.csv"
    else:
        events = Path(cfg.get("ingest", {}).get("events", "events.csv"))
        windows_manifest = Path(cfg.get("timeline", {}).get("windows", "manifest.csv"))
    if not events.exists():
        raise StageError("ingest", f"event file not found: {events}")

    ns_tl = _namespace_defaults(
        windows=str(windows_manifest), span_days=None, epoch_seconds=None,
        n_max=None, gamma=None, max_pairs_in_memory=None, seed=seed,
        resolution=None, mode=None, out=str(out / "timeline.csv"),
        format=None, delimiter=None, has_header=False, map=None,
    )
    _stage("timeline", lambda: cmd_timeline(ns_tl, cfg))

    (out / "run_manifest.json").write_text(json.dumps(manifest) + "\n", encoding="utf-8")
    print(json.dumps(manifest))
    return 0


def _namespace_defaults(**kwargs) -> argparse.Namespace:
    base = dict(
        format=None, delimiter=None, has_header=False, map=None,
        span_days=None, epoch_seconds=None, n_max=None, gamma=None,
        max_pairs_in_memory=None, seed=None, resolution=None, mode=None,
        out=None,
    )
    base.update(kwargs)
    return argparse.Namespace(**base)


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="colograph",
        description="IP-colocation device graphs: build, cluster, measure, simulate.",
    )
    parser.add_argument("--version", action="version", version=f"colograph {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML config file; flags override it")
        p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
        p.add_argument("--threads", type=int, default=1, help="parallelism cap (default 1)")
        p.add_argument("--out", default=None, help="output path or directory")

    def fmt_flags(p):
        p.add_argument("--format", choices=["csv", "jsonl"], default=None,
                       help="event file layout (default csv)")
        p.add_argument("--delimiter", default=None, help="CSV delimiter (default ,)")
        p.add_argument("--has-header", action="store_true", help="skip a CSV header line")
        p.add_argument("--map", default=None,
                       help="field mapping, e.g. device_id=0,ip=1,ts=2 or JSON keys")

    def window_flags(p):
        p.add_argument("--center", default=None, help="window center date YYYY-MM-DD")
        p.add_argument("--span-days", type=int, default=None, help="window length (default 42)")
        p.add_argument("--epoch-seconds", type=int, default=None, help="epoch width (default 86400)")

    def graph_flags(p):
        p.add_argument("--n-max", type=int, default=None, help="IP fan-out cap (default 50)")
        p.add_argument("--gamma", type=float, default=None, help="edge cutoff (default 0.8)")
        p.add_argument("--max-pairs-in-memory", type=int, default=None,
                       help="pair accumulator size before spilling to disk")

    p = sub.add_parser("synth", help="generate a synthetic scenario")
    common(p)
    p.add_argument("--households", type=int, default=None)
    p.add_argument("--workplaces", type=int, default=None)
    p.add_argument("--household-size-min", type=int, default=None)
    p.add_argument("--household-size-max", type=int, default=None)
    p.add_argument("--worker-fraction", type=float, default=None)
    p.add_argument("--devices-per-person", type=int, default=None)
    p.add_argument("--guest-fraction", type=float, default=None)
    p.add_argument("--schedule", default=None, help="weekly mixing, e.g. 0.9,0.5,0.1")
    p.add_argument("--start", default=None, help="first day YYYY-MM-DD (default 2020-01-20)")
    p.add_argument("--span-days", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse and validate an event file")
    common(p)
    fmt_flags(p)
    window_flags(p)
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build-graph", help="build the colocation graph for one window")
    common(p)
    fmt_flags(p)
    window_flags(p)
    graph_flags(p)
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("communities", help="Louvain community detection")
    common(p)
    p.add_argument("--graph", required=True, help="graph directory")
    p.add_argument("--resolution", type=float, default=None, help="default 1.0")
    p.add_argument("--level", choices=["first", "last"], default="first",
                   help="first Louvain pass (default) or final hierarchy level")
    p.set_defaults(func=cmd_communities)

    p = sub.add_parser("metrics", help="modularity Q and cross-community ratio R")
    common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--mode", choices=list(metrics.MODES), default="weighted")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("timeline", help="Q/R time series over windowed graphs")
    common(p)
    fmt_flags(p)
    p.add_argument("--windows", required=True, help="manifest CSV: center_date,events")
    p.add_argument("--span-days", type=int, default=None)
    p.add_argument("--epoch-seconds", type=int, default=None)
    graph_flags(p)
    p.add_argument("--resolution", type=float, default=None)
    p.add_argument("--mode", choices=list(metrics.MODES), default=None)
    p.set_defaults(func=cmd_timeline)

    p = sub.add_parser("evaluate", help="precision/recall against ground truth")
    common(p)
    p.add_argument("--ground-truth", required=True, help="CSV gt_id,device_id,observed_day")
    p.add_argument("--partition", required=True)
    p.add_argument("--min-days", type=int, default=None,
                   help="keep devices seen on more than this many distinct days (default 2)")
    p.add_argument("--no-guest-filter", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="contact-process simulation on a graph")
    common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--partition", default=None)
    p.add_argument("--model", choices=["si", "sir"], default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--recovery-steps", type=int, default=None)
    p.add_argument("--seeds", type=int, default=1, help="number of initially infected nodes")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--weight-coupling", choices=list(epidemic.COUPLINGS), default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="run the configured pipeline end to end")
    common(p)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = {}
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except StageError as exc:
        record = {"error": exc.message, "stage": exc.stage}
        print(json.dumps(record), file=sys.stderr)
        out = getattr(args, "out", None)
        if out and Path(out).is_dir():
            (Path(out) / "error.json").write_text(json.dumps(record) + "\n", encoding="utf-8")
        return 2
    except FileNotFoundError as exc:
        print(json.dumps({"error": str(exc), "stage": args.command}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
