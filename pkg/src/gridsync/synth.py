"""Seeded synthetic inputs with known ground truth.

Three generator families: spatially embedded random networks on a lattice
(for boundary-bias experiments), clustered event fields (for link-detection
checks against the exact null), and paired-sample fixtures where a
subtraction-like and a division-like correction demonstrably diverge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .events import EventSeries, dedup_consecutive
from .grid_io import GridSpec, GriddedSeries
from .netmetrics import EARTH_RADIUS_KM, Network
from .seeding import SYNTH_TAG, mix64, stream

KM_PER_DEG = np.pi * EARTH_RADIUS_KM / 180.0


@dataclass(frozen=True)
class RectLattice:
    """rows x cols lattice at low latitude, so distances are near-planar."""

    rows: int
    cols: int
    spacing_km: float
    lat0: float = 0.0
    lon0: float = 0.0


@dataclass(frozen=True)
class HardCutoff:
    d0_km: float


@dataclass(frozen=True)
class Exponential:
    p0: float
    lambda_km: float


@dataclass(frozen=True)
class SynthNetSpec:
    layout: object  # RectLattice | GridSpec
    link_model: object  # HardCutoff | Exponential
    seed: int = 0


@dataclass(frozen=True)
class SynthEventSpec:
    grid: GridSpec
    T: int
    base_rate: float
    cluster_groups: tuple = ()  # ((node_ids, rho), ...)
    seed: int = 0
    start_day: int = 0


def lattice_grid(layout: RectLattice) -> GridSpec:
    """Node coordinates for a rectangular lattice, centered on (lat0, lon0)."""
    step_deg = layout.spacing_km / KM_PER_DEG
    r = np.arange(layout.rows)
    c = np.arange(layout.cols)
    lat = layout.lat0 + (r - (layout.rows - 1) / 2.0) * step_deg
    lon = layout.lon0 + (c - (layout.cols - 1) / 2.0) * step_deg
    latg, long_ = np.meshgrid(lat, lon, indexing="ij")
    return GridSpec(lat=latg.ravel(), lon=long_.ravel())


def lattice_boundary_mask(layout: RectLattice) -> np.ndarray:
    """True for nodes on the outer ring of the lattice."""
    r, c = np.meshgrid(np.arange(layout.rows), np.arange(layout.cols), indexing="ij")
    mask = (r == 0) | (r == layout.rows - 1) | (c == 0) | (c == layout.cols - 1)
    return mask.ravel()


def link_probability(model, d_km: np.ndarray) -> np.ndarray:
    if isinstance(model, HardCutoff):
        if model.d0_km <= 0:
            raise ValueError("cutoff distance must be positive")
        return (d_km <= model.d0_km).astype(float)
    if isinstance(model, Exponential):
        if not 0.0 < model.p0 <= 1.0:
            raise ValueError("p0 must lie in (0, 1]")
        if model.lambda_km <= 0:
            raise ValueError("lambda must be positive")
        return model.p0 * np.exp(-d_km / model.lambda_km)
    raise ValueError(f"unknown link model {model!r}")


def gen_embedded_network(spec: SynthNetSpec) -> Network:
    """Random spatially embedded network: per-pair Bernoulli at p(distance)."""
    from .netmetrics import pair_distances

    grid = spec.layout if isinstance(spec.layout, GridSpec) else lattice_grid(spec.layout)
    if grid.n < 3:
        raise ValueError("layout must place at least 3 nodes")
    iu, ju, d = pair_distances(grid)
    p = link_probability(spec.link_model, d)
    rng = stream(spec.seed, SYNTH_TAG, 1)
    mask = rng.random(p.size) < p
    return Network.from_edges(grid, np.stack([iu[mask], ju[mask]], axis=1))


def gen_event_field(spec: SynthEventSpec) -> list[EventSeries]:
    """Clustered synthetic event series (deduplicated).

    Each day, every cluster group fires jointly with its probability rho
    (all members get the event) and every node fires independently at
    base_rate.
    """
    if not 0.0 <= spec.base_rate <= 1.0:
        raise ValueError("base_rate must lie in [0, 1]")
    n = spec.grid.n
    rng = stream(spec.seed, SYNTH_TAG, 2)
    active = rng.random((n, spec.T)) < spec.base_rate
    for nodes, rho in spec.cluster_groups:
        if not 0.0 <= rho <= 1.0:
            raise ValueError("cluster rho must lie in [0, 1]")
        fires = rng.random(spec.T) < rho
        idx = np.asarray(list(nodes), dtype=int)
        active[np.ix_(idx, np.nonzero(fires)[0])] = True
    season_days = spec.start_day + np.arange(spec.T, dtype=np.int64)
    out = []
    for i in range(n):
        es = EventSeries(
            node_id=i, event_days=season_days[active[i]], season_days=season_days
        )
        out.append(dedup_consecutive(es))
    return out


def gen_divergence_fixture(
    n: int,
    seed: int,
    denominator_base: float = 1.0,
    small_fraction: float = 0.05,
    small_denominator: float = 0.05,
) -> tuple[np.ndarray, np.ndarray]:
    """Paired samples where subtracting and dividing by a baseline diverge.

    Integer-valued raw counts are corrected against heterogeneous
    denominators: a small fraction of nodes get a near-zero denominator,
    which blows up their ratio and compresses everyone else's normalized
    ratio toward zero. With small_fraction = 0 and denominator_base = 1 the
    two outputs are identical.
    """
    if n < 30:
        raise ValueError("fixture needs n >= 30")
    rng = stream(seed, SYNTH_TAG, 3)
    raw = rng.binomial(60, 0.25, size=n).astype(float)
    denom = np.full(n, float(denominator_base))
    k = int(round(small_fraction * n))
    if k > 0:
        idx = rng.choice(n, size=k, replace=False)
        denom[idx] = small_denominator
    x = _minmax(raw - denom)
    y = _minmax(raw / denom)
    return x, y


def _minmax(v: np.ndarray) -> np.ndarray:
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        raise ValueError("constant field cannot be min-max normalized")
    return (v - lo) / (hi - lo)


def gen_gridded_values(
    layout: RectLattice,
    n_years: int,
    seed: int,
    season: str = "JJA",
    storm_groups: int = 4,
    storm_rate: float = 0.08,
    wet_prob: float = 0.55,
) -> GriddedSeries:
    """Precipitation-like daily gridded series with synchronized extremes.

    Covers the given season for n_years consecutive years starting 2001.
    Nodes are partitioned into contiguous row bands ("storm groups"); on a
    group's storm days every member draws from a heavy upper tail, which
    yields synchronized threshold exceedances downstream.
    """
    from .grid_io import SEASON_MONTHS, day_index_months

    grid = lattice_grid(layout)
    n = grid.n
    months = SEASON_MONTHS[season]
    start = np.datetime64("2001-01-01") - np.datetime64("1970-01-01")
    all_days = int(start / np.timedelta64(1, "D")) + np.arange(n_years * 366 + 40)
    in_season = np.isin(day_index_months(all_days), months)
    limit = np.datetime64(f"{2001 + n_years - 1}-12-31")
    in_range = all_days <= int((limit - np.datetime64("1970-01-01")) / np.timedelta64(1, "D"))
    days = all_days[in_season & in_range].astype(np.int64)
    T = days.size

    rng = stream(seed, SYNTH_TAG, 4)
    wet = rng.random((n, T)) < wet_prob
    values = np.where(wet, rng.gamma(1.2, 4.0, size=(n, T)), 0.0)
    group_of = (np.arange(n) * storm_groups) // n
    for g in range(storm_groups):
        storm_days = rng.random(T) < storm_rate
        members = np.nonzero(group_of == g)[0]
        boost = rng.gamma(4.0, 12.0, size=(members.size, int(storm_days.sum())))
        values[np.ix_(members, np.nonzero(storm_days)[0])] += 30.0 + boost
    return GriddedSeries(grid=grid, days=days, values=values)
