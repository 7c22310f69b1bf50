"""Subcommand CLI driving the full pipeline with a JSON run config.

Every stage reads its inputs from disk, writes its artifact plus a JSON
manifest (content hashes of inputs and outputs, result-affecting parameters,
seed, version), and reports progress and timing to stderr. Reruns with the
same config are byte-identical; thread count and output location never
influence artifact bytes, so they are not recorded in manifests.

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .correction import correct_divide, correct_subtract, read_corrected_csv, write_corrected_csv
from .events import ThresholdSpec, extract_events
from .grid_io import (
    SEASON_MONTHS,
    extract_season,
    load_gridded,
    read_edge_list,
    read_event_series,
    read_grid_csv,
    read_metric_csv,
    write_edge_list,
    write_event_series,
    write_grid_csv,
    write_gridded,
    write_metric_csv,
)
from .netmetrics import METRIC_NAMES, Network, compute_metric, log_bc
from .render import PALETTES, render_map
from .stats import compare_methods
from .surrogate import (
    ensemble_stats,
    estimate_profile,
    read_profile_csv,
    read_surrogate_stats_csv,
    write_profile_csv,
    write_surrogate_stats_csv,
)
from .sync import SyncParams, build_network
from .synth import RectLattice, gen_gridded_values

VARIABLES = ("precip", "tmax", "tmin")
CORRECTION_METHODS = ("subtract", "divide")

# per-variable threshold defaults: (percentile, direction, support)
_THRESHOLD_DEFAULTS = {
    "precip": (95.0, "above", "positive_only"),
    "tmax": (95.0, "above", "all"),
    "tmin": (5.0, "below", "all"),
}

STAGES = ("events", "network", "metrics", "surrogate", "correct", "compare")


class ConfigError(ValueError):
    """Invalid run configuration; carries every problem found."""

    def __init__(self, problems: list[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class RunConfig:
    input: str | None
    format: str
    variable: str
    season: str
    threshold: ThresholdSpec
    sync: SyncParams
    ensemble_size: int
    bin_width_km: float
    corrections: tuple[str, ...]
    metrics: tuple[str, ...]
    alpha: float
    use_normalized: bool
    out: str
    seed: int
    threads: int
    synth: dict | None

    @property
    def network_label(self) -> str:
        return "EPE" if self.variable == "precip" else "ETE"

    def result_parameters(self) -> dict:
        """Parameters that influence artifact bytes (paths/threads excluded)."""
        return {
            "variable": self.variable,
            "season": self.season,
            "threshold": {
                "percentile": self.threshold.percentile,
                "direction": self.threshold.direction,
                "support": self.threshold.support,
                "positive_floor": self.threshold.positive_floor,
                "min_support": self.threshold.min_support,
            },
            "sync": {
                "tau_max": self.sync.tau_max,
                "n_shuffles": self.sync.n_shuffles,
                "link_quantile": self.sync.link_quantile,
                "simultaneous_weight": self.sync.simultaneous_weight,
                "memoize": self.sync.memoize,
            },
            "surrogate": {
                "ensemble_size": self.ensemble_size,
                "bin_width_km": self.bin_width_km,
            },
            "corrections": list(self.corrections),
            "metrics": list(self.metrics),
            "alpha": self.alpha,
            "use_normalized": self.use_normalized,
            "synth": self.synth,
        }


def _get(d: dict, key: str, default):
    v = d.get(key, default)
    return default if v is None else v


def validate_config(doc: dict, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from a JSON document, collecting every problem."""
    problems: list[str] = []
    overrides = overrides or {}
    doc = dict(doc)
    for k in ("seed", "threads", "out"):
        if overrides.get(k) is not None:
            doc[k] = overrides[k]

    variable = _get(doc, "variable", "precip")
    if variable not in VARIABLES:
        problems.append(f"variable must be one of {VARIABLES}, got {variable!r}")
        variable = "precip"
    season = _get(doc, "season", "JJA")
    if season not in SEASON_MONTHS:
        problems.append(f"season must be one of {sorted(SEASON_MONTHS)}, got {season!r}")
        season = "JJA"

    p_def, dir_def, sup_def = _THRESHOLD_DEFAULTS[variable]
    tdoc = _get(doc, "threshold", {})
    try:
        threshold = ThresholdSpec(
            percentile=float(_get(tdoc, "percentile", p_def)),
            direction=_get(tdoc, "direction", dir_def),
            support=_get(tdoc, "support", sup_def),
            positive_floor=float(_get(tdoc, "positive_floor", 0.0)),
            min_support=int(_get(tdoc, "min_support", 20)),
        )
    except (ValueError, TypeError) as e:
        problems.append(f"threshold: {e}")
        threshold = ThresholdSpec(percentile=p_def, direction=dir_def, support=sup_def)

    seed = doc.get("seed")
    if seed is None:
        problems.append("seed is mandatory (wall-clock seeding is not allowed)")
        seed = 0
    try:
        seed = int(seed)
    except (ValueError, TypeError):
        problems.append(f"seed must be an integer, got {seed!r}")
        seed = 0

    sdoc = _get(doc, "sync", {})
    try:
        sync = SyncParams(
            tau_max=int(_get(sdoc, "tau_max", 0)),
            n_shuffles=int(_get(sdoc, "n_shuffles", 1000)),
            link_quantile=float(_get(sdoc, "link_quantile", 0.995)),
            seed=seed,
            simultaneous_weight=float(_get(sdoc, "simultaneous_weight", 1.0)),
            memoize=bool(_get(sdoc, "memoize", True)),
        )
    except (ValueError, TypeError) as e:
        problems.append(f"sync: {e}")
        sync = SyncParams(seed=seed)

    gdoc = _get(doc, "surrogate", {})
    ensemble_size = int(_get(gdoc, "ensemble_size", 1000))
    if ensemble_size < 1:
        problems.append(f"surrogate.ensemble_size must be >= 1, got {ensemble_size}")
        ensemble_size = 1
    bin_width_km = float(_get(gdoc, "bin_width_km", 50.0))
    if bin_width_km <= 0:
        problems.append(f"surrogate.bin_width_km must be positive, got {bin_width_km}")
        bin_width_km = 50.0

    corrections = tuple(_get(doc, "corrections", list(CORRECTION_METHODS)))
    for c in corrections:
        if c not in CORRECTION_METHODS:
            problems.append(f"unknown correction {c!r}; expected from {CORRECTION_METHODS}")
    metrics = tuple(_get(doc, "metrics", list(METRIC_NAMES)))
    for m in metrics:
        if m not in METRIC_NAMES:
            problems.append(f"unknown metric {m!r}; expected from {METRIC_NAMES}")

    alpha = float(_get(doc, "alpha", 0.05))
    if not 0.0 < alpha < 1.0:
        problems.append(f"alpha must lie in (0, 1), got {alpha}")
        alpha = 0.05

    fmt = _get(doc, "format", "binary")
    if fmt not in ("binary", "csv"):
        problems.append(f"format must be 'binary' or 'csv', got {fmt!r}")
        fmt = "binary"

    threads = doc.get("threads")
    threads = os.cpu_count() or 1 if threads is None else int(threads)
    if threads < 1:
        problems.append(f"threads must be >= 1, got {threads}")
        threads = 1

    synth = doc.get("synth")
    if synth is not None and not isinstance(synth, dict):
        problems.append("synth must be an object")
        synth = None

    cfg = RunConfig(
        input=doc.get("input"),
        format=fmt,
        variable=variable,
        season=season,
        threshold=threshold,
        sync=sync,
        ensemble_size=ensemble_size,
        bin_width_km=bin_width_km,
        corrections=corrections,
        metrics=metrics,
        alpha=alpha,
        use_normalized=bool(_get(doc, "use_normalized", True)),
        out=str(_get(doc, "out", "out")),
        seed=seed,
        threads=threads,
        synth=synth,
    )
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path, overrides: dict | None = None) -> RunConfig:
    try:
        with open(path) as f:
            doc = json.load(f)
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"])
    except json.JSONDecodeError as e:
        raise ConfigError([f"config is not valid JSON: {e}"])
    return validate_config(doc, overrides)


# ---------------------------------------------------------------------------
# manifests and progress


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: Path, stage: str, cfg: RunConfig, inputs: dict, outputs: list,
                    extra: dict | None = None) -> None:
    doc = {
        "stage": stage,
        "version": __version__,
        "seed": cfg.seed,
        "parameters": cfg.result_parameters(),
        "inputs": {name: _sha256(p) for name, p in inputs.items()},
        "outputs": {Path(p).name: _sha256(p) for p in outputs},
    }
    if extra:
        doc.update(extra)
    with open(out_dir / f"{stage}_manifest.json", "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


class _Progress:
    def __init__(self, stage: str):
        self.stage = stage

    def __enter__(self):
        self.t0 = time.perf_counter()
        print(f"[{self.stage}] start", file=sys.stderr)
        return self

    def __exit__(self, exc_type, exc, tb):
        dt = time.perf_counter() - self.t0
        status = "done" if exc_type is None else "FAILED"
        print(f"[{self.stage}] {status} in {dt:.2f}s", file=sys.stderr)
        return False


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise ConfigError([f"{what} not found: {path} (run the upstream stage first)"])
    return path


# ---------------------------------------------------------------------------
# stages


def stage_synth(cfg: RunConfig, out_dir: Path) -> Path:
    """Generate a synthetic gridded input file from cfg.synth."""
    sdoc = cfg.synth or {}
    layout = RectLattice(
        rows=int(_get(sdoc, "rows", 8)),
        cols=int(_get(sdoc, "cols", 8)),
        spacing_km=float(_get(sdoc, "spacing_km", 50.0)),
        lat0=float(_get(sdoc, "lat0", 0.0)),
        lon0=float(_get(sdoc, "lon0", 0.0)),
    )
    gs = gen_gridded_values(
        layout,
        n_years=int(_get(sdoc, "n_years", 5)),
        seed=cfg.seed,
        season=cfg.season,
        storm_groups=int(_get(sdoc, "storm_groups", 4)),
        storm_rate=float(_get(sdoc, "storm_rate", 0.08)),
        wet_prob=float(_get(sdoc, "wet_prob", 0.55)),
    )
    default_name = "synthetic.cng1" if cfg.format == "binary" else "synthetic.csv"
    name = _get(sdoc, "output", default_name)
    path = out_dir / name
    write_gridded(gs, path, format=cfg.format)
    _write_manifest(out_dir, "synth", cfg, inputs={}, outputs=[path])
    return path


def stage_events(cfg: RunConfig, out_dir: Path) -> None:
    if cfg.input is None:
        raise ConfigError(["input is required for the events stage"])
    in_path = _require(Path(cfg.input), "input gridded file")
    gs = load_gridded(in_path, cfg.format)
    seasonal = extract_season(gs, cfg.season)
    series, unusable = extract_events(seasonal, cfg.threshold, dedup=True)
    if unusable:
        print(
            f"[events] {len(unusable)} unusable node(s) excluded: {unusable[:20]}"
            + ("..." if len(unusable) > 20 else ""),
            file=sys.stderr,
        )
    sidecar = {
        "n_nodes": seasonal.n_nodes,
        "T": seasonal.n_days,
        "season": cfg.season,
        "percentile": cfg.threshold.percentile,
        "direction": cfg.threshold.direction,
        "support": cfg.threshold.support,
        "positive_floor": cfg.threshold.positive_floor,
        "min_support": cfg.threshold.min_support,
        "dedup": True,
        "season_days": [int(d) for d in seasonal.days],
        "unusable_nodes": unusable,
    }
    events_path = out_dir / "events.csv"
    grid_path = out_dir / "grid.csv"
    write_event_series(series, events_path, sidecar)
    write_grid_csv(seasonal.grid, grid_path)
    _write_manifest(
        out_dir,
        "events",
        cfg,
        inputs={"gridded": in_path},
        outputs=[events_path, Path(str(events_path) + ".json"), grid_path],
    )


def stage_network(cfg: RunConfig, out_dir: Path) -> None:
    events_path = _require(out_dir / "events.csv", "events artifact")
    grid_path = _require(out_dir / "grid.csv", "grid artifact")
    series, sidecar = read_event_series(events_path)
    grid = read_grid_csv(grid_path)
    net = build_network(series, grid, cfg.sync, threads=cfg.threads)
    edges_path = out_dir / "edges.csv"
    write_edge_list(net.edge_array(), edges_path)
    _write_manifest(
        out_dir,
        "network",
        cfg,
        inputs={"events": events_path, "grid": grid_path},
        outputs=[edges_path],
        extra={
            "event_counts": [es.n_events for es in series],
            "unusable_count": len(sidecar.get("unusable_nodes", [])),
            "edge_count": net.edge_count,
        },
    )


def _load_network(out_dir: Path) -> Network:
    edges_path = _require(out_dir / "edges.csv", "edge-list artifact")
    grid_path = _require(out_dir / "grid.csv", "grid artifact")
    return Network.from_edges(read_grid_csv(grid_path), read_edge_list(edges_path))


def stage_metrics(cfg: RunConfig, out_dir: Path) -> None:
    net = _load_network(out_dir)
    outputs = []
    for m in cfg.metrics:
        mf = compute_metric(net, m, threads=cfg.threads)
        path = out_dir / f"metric_{m}.csv"
        write_metric_csv(mf.values, net.grid, path)
        outputs.append(path)
        if m == "BC":
            lb = log_bc(mf)
            path = out_dir / "metric_logBC.csv"
            write_metric_csv(lb.values, net.grid, path)
            outputs.append(path)
    _write_manifest(
        out_dir,
        "metrics",
        cfg,
        inputs={"edges": out_dir / "edges.csv", "grid": out_dir / "grid.csv"},
        outputs=outputs,
    )


def stage_surrogate(cfg: RunConfig, out_dir: Path) -> None:
    net = _load_network(out_dir)
    profile = estimate_profile(net, bin_width_km=cfg.bin_width_km)
    stats = ensemble_stats(
        profile,
        net.grid,
        metrics=cfg.metrics,
        ensemble_size=cfg.ensemble_size,
        seed=cfg.seed,
        threads=cfg.threads,
    )
    profile_path = out_dir / "profile.csv"
    stats_path = out_dir / "surrogate_stats.csv"
    write_profile_csv(profile, profile_path)
    write_surrogate_stats_csv(stats, stats_path)
    _write_manifest(
        out_dir,
        "surrogate",
        cfg,
        inputs={"edges": out_dir / "edges.csv", "grid": out_dir / "grid.csv"},
        outputs=[profile_path, stats_path],
        extra={"zero_mean_counts": {m: int(st.zero_mean_nodes.size) for m, st in stats.items()}},
    )


def stage_correct(cfg: RunConfig, out_dir: Path) -> None:
    from .netmetrics import MetricField

    stats_path = _require(out_dir / "surrogate_stats.csv", "surrogate stats artifact")
    stats = read_surrogate_stats_csv(stats_path, ensemble_size=cfg.ensemble_size)
    grid = read_grid_csv(_require(out_dir / "grid.csv", "grid artifact"))
    inputs = {"surrogate_stats": stats_path}
    outputs = []
    for m in cfg.metrics:
        metric_path = _require(out_dir / f"metric_{m}.csv", f"metric {m} artifact")
        inputs[f"metric_{m}"] = metric_path
        values, _ = read_metric_csv(metric_path)
        raw = MetricField(m, values)
        for method in cfg.corrections:
            cf = correct_subtract(raw, stats[m]) if method == "subtract" else correct_divide(raw, stats[m])
            path = out_dir / f"corrected_{m}_{method}.csv"
            write_corrected_csv(cf, grid, path)
            outputs.append(path)
    _write_manifest(out_dir, "correct", cfg, inputs=inputs, outputs=outputs)


def stage_compare(cfg: RunConfig, out_dir: Path) -> None:
    if not ("subtract" in cfg.corrections and "divide" in cfg.corrections):
        raise ConfigError(["compare stage needs both 'subtract' and 'divide' corrections"])
    runs = {}
    inputs = {}
    for m in cfg.metrics:
        sub_path = _require(out_dir / f"corrected_{m}_subtract.csv", f"corrected {m} (subtract)")
        div_path = _require(out_dir / f"corrected_{m}_divide.csv", f"corrected {m} (divide)")
        inputs[f"corrected_{m}_subtract"] = sub_path
        inputs[f"corrected_{m}_divide"] = div_path
        sub = read_corrected_csv(sub_path, metric=m, method="subtract")
        div = read_corrected_csv(div_path, metric=m, method="divide")
        runs[(cfg.network_label, cfg.season, m)] = (sub, div)
    report = compare_methods(runs, alpha=cfg.alpha, use_normalized=cfg.use_normalized)
    json_path = out_dir / "report.json"
    txt_path = out_dir / "report.txt"
    with open(json_path, "w") as f:
        json.dump(report.to_json_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    with open(txt_path, "w") as f:
        f.write(report.to_text_table())
    _write_manifest(out_dir, "compare", cfg, inputs=inputs, outputs=[json_path, txt_path])


def stage_render(cfg: RunConfig, out_dir: Path, field: str, palette: str,
                 vmin: float | None, vmax: float | None) -> None:
    path = Path(field)
    if not path.is_absolute():
        path = out_dir / path
    _require(path, "field CSV")
    with open(path) as f:
        header = f.readline().strip()
    if header == "node_id,lat,lon,value":
        values, grid = read_metric_csv(path)
        defined = None
    elif header.startswith("node_id,lat,lon,raw"):
        name = path.stem.split("_")
        cf = read_corrected_csv(path, metric=name[1] if len(name) > 1 else "?",
                                method=name[2] if len(name) > 2 else "?")
        grid = read_grid_csv(_require(out_dir / "grid.csv", "grid artifact"))
        values = cf.normalized
        defined = ~cf.undefined
        if vmin is None and vmax is None:
            vmin, vmax = 0.0, 1.0
    else:
        raise ConfigError([f"unrecognized field header in {path}"])
    out_path = Path(str(path) + ".ppm")
    h, w = render_map(values, grid, out_path, defined=defined, vmin=vmin, vmax=vmax, palette=palette)
    print(f"[render] wrote {out_path} ({w} x {h})", file=sys.stderr)


def run_pipeline(cfg: RunConfig, out_dir: Path) -> None:
    """All stages in order, each re-reading its inputs from disk."""
    if cfg.synth is not None and cfg.input is None:
        with _Progress("synth"):
            path = stage_synth(cfg, out_dir)
        cfg = replace(cfg, input=str(path))
    for name, fn in (
        ("events", stage_events),
        ("network", stage_network),
        ("metrics", stage_metrics),
        ("surrogate", stage_surrogate),
        ("correct", stage_correct),
        ("compare", stage_compare),
    ):
        with _Progress(name):
            fn(cfg, out_dir)


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridsync",
        description="Climate networks from gridded extreme-event series.",
    )
    parser.add_argument("--version", action="version", version=f"gridsync {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES + ("synth", "pipeline", "render"):
        p = sub.add_parser(name, help=f"run the {name} stage")
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--threads", type=int, default=None, help="override thread count")
        p.add_argument("--out", default=None, help="override output directory")
        if name == "render":
            p.add_argument("--field", required=True, help="field CSV to rasterize")
            p.add_argument("--palette", default="heat", choices=PALETTES)
            p.add_argument("--vmin", type=float, default=None)
            p.add_argument("--vmax", type=float, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(
            args.config,
            overrides={"seed": args.seed, "threads": args.threads, "out": args.out},
        )
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "pipeline":
            run_pipeline(cfg, out_dir)
        elif args.command == "synth":
            with _Progress("synth"):
                stage_synth(cfg, out_dir)
        elif args.command == "render":
            stage_render(cfg, out_dir, args.field, args.palette, args.vmin, args.vmax)
        else:
            fn = {
                "events": stage_events,
                "network": stage_network,
                "metrics": stage_metrics,
                "surrogate": stage_surrogate,
                "correct": stage_correct,
                "compare": stage_compare,
            }[args.command]
            with _Progress(args.command):
                fn(cfg, out_dir)
        return 0
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        return 1
    except Exception as e:  # runtime failure; prior artifacts stay intact
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
