"""Distance-preserving surrogate networks and ensemble-mean metrics.

The surrogate null keeps node positions and the empirical distance-dependent
link probability while randomizing which particular pairs connect; comparing
a node's metric with its surrogate-ensemble mean isolates what spatial
embedding alone (including domain boundaries) would produce.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid_io import GridSpec
from .netmetrics import Network, compute_metric, pair_distances
from .seeding import SURROGATE_TAG, mix64, ordered_map


@dataclass(frozen=True)
class DistanceProfile:
    """Per-distance-bin link probability p = links / pairs."""

    bin_edges: np.ndarray  # length n_bins + 1, ascending, starts at 0
    bin_prob: np.ndarray
    bin_pair_count: np.ndarray
    bin_link_count: np.ndarray

    @property
    def n_bins(self) -> int:
        return int(self.bin_prob.size)

    @property
    def bin_width_km(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])


@dataclass(frozen=True)
class SurrogateStats:
    """Arithmetic ensemble mean of one metric, per node."""

    metric: str
    mean: np.ndarray
    ensemble_size: int
    zero_mean_nodes: np.ndarray

    @property
    def n(self) -> int:
        return int(self.mean.size)


def _bin_index(d_km: np.ndarray, bin_width_km: float, n_bins: int) -> np.ndarray:
    idx = np.floor(d_km / bin_width_km).astype(np.int64)
    return np.minimum(idx, n_bins - 1)


def _pair_rank(i: np.ndarray, j: np.ndarray, n: int) -> np.ndarray:
    """Position of pair (i, j), i < j, within the triu_indices(n, 1) order."""
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


def estimate_profile(net: Network, bin_width_km: float = 50.0) -> DistanceProfile:
    """Bin all unordered node pairs by distance; probability = edges / pairs.

    Bins are [k*w, (k+1)*w) and cover [0, max pairwise distance]; bins with
    no pairs get probability 0.
    """
    if bin_width_km <= 0:
        raise ValueError("bin width must be positive")
    if net.edge_count == 0:
        raise ValueError("cannot estimate a link-probability profile from an edgeless network")
    iu, ju, d = pair_distances(net.grid)
    n_bins = int(np.floor(d.max() / bin_width_km)) + 1
    idx = _bin_index(d, bin_width_km, n_bins)
    pair_count = np.bincount(idx, minlength=n_bins)
    edges = net.edge_array()
    linked = np.zeros(iu.size, dtype=bool)
    if edges.size:
        linked[_pair_rank(edges[:, 0], edges[:, 1], net.n)] = True
    link_count = np.bincount(idx[linked], minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        prob = np.where(pair_count > 0, link_count / np.maximum(pair_count, 1), 0.0)
    edges = np.arange(n_bins + 1, dtype=float) * bin_width_km
    return DistanceProfile(
        bin_edges=edges,
        bin_prob=prob,
        bin_pair_count=pair_count,
        bin_link_count=link_count,
    )


def pair_link_probabilities(
    profile: DistanceProfile, grid: GridSpec
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(iu, ju, p) for every unordered pair; pairs beyond the last bin get 0."""
    iu, ju, d = pair_distances(grid)
    w = profile.bin_width_km
    idx = np.floor(d / w).astype(np.int64)
    p = np.zeros(d.size)
    inside = idx < profile.n_bins
    p[inside] = profile.bin_prob[idx[inside]]
    return iu, ju, p


def _draw_member(
    iu: np.ndarray, ju: np.ndarray, p: np.ndarray, grid: GridSpec, member_seed: int
) -> Network:
    rng = np.random.Generator(np.random.PCG64(member_seed))
    mask = rng.random(p.size) < p
    edges = np.stack([iu[mask], ju[mask]], axis=1)
    return Network.from_edges(grid, edges)


def sample_surrogate(profile: DistanceProfile, grid: GridSpec, member_seed: int) -> Network:
    """One surrogate: independent Bernoulli draw per pair at its bin probability."""
    iu, ju, p = pair_link_probabilities(profile, grid)
    return _draw_member(iu, ju, p, grid, member_seed)


def ensemble_stats(
    profile: DistanceProfile,
    grid: GridSpec,
    metrics: tuple[str, ...] = ("DC", "CC", "MGD", "BC"),
    ensemble_size: int = 1000,
    seed: int = 0,
    threads: int = 1,
) -> dict[str, SurrogateStats]:
    """Per-node ensemble means of the requested metrics.

    Member k is sample_surrogate with seed mix64(seed, SURROGATE_TAG, k).
    Undefined-flag nodes contribute their numeric convention value (0).
    Member contributions are reduced in member order (pairwise summation),
    so the result does not depend on thread scheduling.
    """
    if ensemble_size < 1:
        raise ValueError("ensemble_size must be >= 1")
    iu, ju, p = pair_link_probabilities(profile, grid)

    def member_fields(k: int) -> dict[str, np.ndarray]:
        net = _draw_member(iu, ju, p, grid, mix64(seed, SURROGATE_TAG, k))
        return {m: compute_metric(net, m).values for m in metrics}

    sums = {m: np.zeros(grid.n) for m in metrics}
    chunk = 64
    for start in range(0, ensemble_size, chunk):
        members = range(start, min(start + chunk, ensemble_size))
        fields = ordered_map(member_fields, members, threads)
        for m in metrics:
            sums[m] += np.sum(np.stack([f[m] for f in fields]), axis=0)

    out = {}
    for m in metrics:
        mean = sums[m] / ensemble_size
        out[m] = SurrogateStats(
            metric=m,
            mean=mean,
            ensemble_size=ensemble_size,
            zero_mean_nodes=np.nonzero(mean == 0.0)[0],
        )
    return out


# ---------------------------------------------------------------------------
# on-disk formats


def write_profile_csv(profile: DistanceProfile, path) -> None:
    from .grid_io import _fmt

    with open(path, "w", newline="") as f:
        f.write("bin_lo_km,bin_hi_km,pairs,links,prob\n")
        for k in range(profile.n_bins):
            f.write(
                f"{_fmt(profile.bin_edges[k])},{_fmt(profile.bin_edges[k + 1])},"
                f"{int(profile.bin_pair_count[k])},{int(profile.bin_link_count[k])},"
                f"{_fmt(profile.bin_prob[k])}\n"
            )


def read_profile_csv(path) -> DistanceProfile:
    from .grid_io import GridIOError

    lo, hi, pairs, links, prob = [], [], [], [], []
    with open(path, "r", newline="") as f:
        header = f.readline().strip()
        if header != "bin_lo_km,bin_hi_km,pairs,links,prob":
            raise GridIOError(f"malformed header {header!r}", path, line=1)
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise GridIOError(f"expected 5 fields, got {len(parts)}", path, line=lineno)
            lo.append(float(parts[0]))
            hi.append(float(parts[1]))
            pairs.append(int(parts[2]))
            links.append(int(parts[3]))
            prob.append(float(parts[4]))
    if not lo:
        raise GridIOError("no profile rows", path)
    edges = np.asarray(lo + [hi[-1]])
    return DistanceProfile(
        bin_edges=edges,
        bin_prob=np.asarray(prob),
        bin_pair_count=np.asarray(pairs),
        bin_link_count=np.asarray(links),
    )


def write_surrogate_stats_csv(stats: dict[str, SurrogateStats], path) -> None:
    from .grid_io import _fmt

    with open(path, "w", newline="") as f:
        f.write("node_id,metric,mean,zero_flag\n")
        for metric in sorted(stats):
            st = stats[metric]
            zero = np.zeros(st.n, dtype=bool)
            zero[st.zero_mean_nodes] = True
            for i in range(st.n):
                f.write(f"{i},{metric},{_fmt(st.mean[i])},{int(zero[i])}\n")


def read_surrogate_stats_csv(path, ensemble_size: int = 1) -> dict[str, SurrogateStats]:
    from .grid_io import GridIOError

    rows: dict[str, dict[int, float]] = {}
    zeros: dict[str, set[int]] = {}
    with open(path, "r", newline="") as f:
        header = f.readline().strip()
        if header != "node_id,metric,mean,zero_flag":
            raise GridIOError(f"malformed header {header!r}", path, line=1)
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise GridIOError(f"expected 4 fields, got {len(parts)}", path, line=lineno)
            i, metric, mean, flag = int(parts[0]), parts[1], float(parts[2]), int(parts[3])
            rows.setdefault(metric, {})[i] = mean
            if flag:
                zeros.setdefault(metric, set()).add(i)
    out = {}
    for metric, by_node in rows.items():
        n = max(by_node) + 1
        if sorted(by_node) != list(range(n)):
            raise GridIOError(f"metric {metric}: node ids not contiguous", path)
        mean = np.array([by_node[i] for i in range(n)])
        out[metric] = SurrogateStats(
            metric=metric,
            mean=mean,
            ensemble_size=ensemble_size,
            zero_mean_nodes=np.asarray(sorted(zeros.get(metric, ())), dtype=np.int64),
        )
    return out
