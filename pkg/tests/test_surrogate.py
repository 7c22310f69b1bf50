import numpy as np
import pytest

from gridsync.netmetrics import Network, degree, haversine_matrix
from gridsync.seeding import SURROGATE_TAG, mix64
from gridsync.surrogate import (
    DistanceProfile,
    ensemble_stats,
    estimate_profile,
    pair_link_probabilities,
    read_profile_csv,
    read_surrogate_stats_csv,
    sample_surrogate,
    write_profile_csv,
    write_surrogate_stats_csv,
)
from gridsync.synth import Exponential, HardCutoff, RectLattice, SynthNetSpec, gen_embedded_network, lattice_grid

from conftest import random_grid, random_network


def complete_net(n, seed=0):
    grid = random_grid(n, seed)
    iu, ju = np.triu_indices(n, k=1)
    return Network.from_edges(grid, np.stack([iu, ju], axis=1))


# ---------------------------------------------------------------------------
# profile estimation


def test_profile_complete_graph():
    prof = estimate_profile(complete_net(8), bin_width_km=100.0)
    nonempty = prof.bin_pair_count > 0
    assert np.all(prof.bin_prob[nonempty] == 1.0)
    assert np.all(prof.bin_prob[~nonempty] == 0.0)
    assert prof.bin_pair_count.sum() == 28
    assert prof.bin_link_count.sum() == 28


def test_profile_rejects_edgeless_and_bad_width():
    grid = random_grid(5, 1)
    empty = Network.from_edges(grid, np.empty((0, 2)))
    with pytest.raises(ValueError, match="edgeless"):
        estimate_profile(empty)
    with pytest.raises(ValueError, match="positive"):
        estimate_profile(complete_net(4), bin_width_km=0.0)


def test_profile_hard_cutoff_brute_force():
    layout = RectLattice(rows=6, cols=6, spacing_km=50.0)
    net = gen_embedded_network(SynthNetSpec(layout=layout, link_model=HardCutoff(80.0), seed=1))
    w = 25.0
    prof = estimate_profile(net, bin_width_km=w)
    # brute-force bin counts from the distance matrix
    d = haversine_matrix(net.grid)
    iu, ju = np.triu_indices(net.n, k=1)
    idx = np.minimum(np.floor(d[iu, ju] / w).astype(int), prof.n_bins - 1)
    assert np.array_equal(prof.bin_pair_count, np.bincount(idx, minlength=prof.n_bins))
    # probability is 1 below the cutoff bin boundary and 0 above it
    lo_bins = prof.bin_edges[1:] <= 80.0 - 1e-9
    nonempty = prof.bin_pair_count > 0
    assert np.all(prof.bin_prob[lo_bins & nonempty] == 1.0)
    hi_bins = prof.bin_edges[:-1] >= 80.0
    assert np.all(prof.bin_prob[hi_bins & nonempty] == 0.0)


def test_profile_covers_max_distance(rng):
    net = random_network(12, 0.4, 7)
    prof = estimate_profile(net, bin_width_km=75.0)
    d = haversine_matrix(net.grid)
    assert prof.bin_edges[-1] >= d.max()
    assert prof.bin_pair_count.sum() == 12 * 11 // 2


# ---------------------------------------------------------------------------
# sampling


def const_profile(p, max_km=40000.0, width=1000.0):
    n_bins = int(max_km / width)
    return DistanceProfile(
        bin_edges=np.arange(n_bins + 1) * width,
        bin_prob=np.full(n_bins, float(p)),
        bin_pair_count=np.ones(n_bins, dtype=int),
        bin_link_count=np.zeros(n_bins, dtype=int),
    )


def test_sample_p_zero_and_one():
    grid = random_grid(10, 3)
    assert sample_surrogate(const_profile(0.0), grid, 1).edge_count == 0
    full = sample_surrogate(const_profile(1.0), grid, 1)
    assert full.edge_count == 10 * 9 // 2


def test_sample_deterministic_per_seed():
    grid = random_grid(12, 5)
    prof = const_profile(0.3)
    a = sample_surrogate(prof, grid, 123).edge_array()
    b = sample_surrogate(prof, grid, 123).edge_array()
    c = sample_surrogate(prof, grid, 124).edge_array()
    assert a.tolist() == b.tolist()
    assert a.tolist() != c.tolist()


def test_sample_expected_edge_count(rng):
    net = random_network(25, 0.25, 11)
    prof = estimate_profile(net, bin_width_km=300.0)
    _, _, p = pair_link_probabilities(prof, net.grid)
    expect = p.sum()
    var = (p * (1 - p)).sum()
    counts = [sample_surrogate(prof, net.grid, int(s)).edge_count for s in range(200)]
    assert abs(np.mean(counts) - expect) <= 3 * np.sqrt(var / 200)


def test_profile_consistency_resampling(rng):
    # per-bin link counts of resampled members match the profile within 3 sigma
    net = random_network(20, 0.3, 13)
    w = 200.0
    prof = estimate_profile(net, bin_width_km=w)
    iu, ju, p = pair_link_probabilities(prof, net.grid)
    d = haversine_matrix(net.grid)[iu, ju]
    idx = np.minimum(np.floor(d / w).astype(int), prof.n_bins - 1)
    K = 200
    link_sums = np.zeros(prof.n_bins)
    for s in range(K):
        sur = sample_surrogate(prof, net.grid, mix64(99, s))
        linked = np.fromiter(
            (sur.has_edge(int(i), int(j)) for i, j in zip(iu, ju)), bool, count=iu.size
        )
        link_sums += np.bincount(idx[linked], minlength=prof.n_bins)
    mean_links = link_sums / K
    expect = prof.bin_pair_count * prof.bin_prob
    sigma = np.sqrt(np.maximum(prof.bin_pair_count * prof.bin_prob * (1 - prof.bin_prob), 1e-12) / K)
    assert np.all(np.abs(mean_links - expect) <= 3 * sigma + 1e-9)


# ---------------------------------------------------------------------------
# ensemble statistics


def test_ensemble_size_one_equals_member():
    grid = random_grid(10, 17)
    prof = const_profile(0.4)
    stats = ensemble_stats(prof, grid, metrics=("DC",), ensemble_size=1, seed=55)
    member = sample_surrogate(prof, grid, mix64(55, SURROGATE_TAG, 0))
    assert np.array_equal(stats["DC"].mean, degree(member).values)


def test_ensemble_dc_mean_analytic(rng):
    net = random_network(22, 0.3, 19)
    prof = estimate_profile(net, bin_width_km=250.0)
    iu, ju, p = pair_link_probabilities(prof, net.grid)
    expect = np.zeros(net.n)
    var = np.zeros(net.n)
    for k in range(iu.size):
        expect[iu[k]] += p[k]
        expect[ju[k]] += p[k]
        var[iu[k]] += p[k] * (1 - p[k])
        var[ju[k]] += p[k] * (1 - p[k])
    K = 200
    stats = ensemble_stats(prof, net.grid, metrics=("DC",), ensemble_size=K, seed=7)
    sigma = np.sqrt(var / K)
    assert np.all(np.abs(stats["DC"].mean - expect) <= 3 * sigma + 1e-9)


def test_ensemble_zero_mean_nodes():
    # node 3 sits 5000+ers km away from a tight cluster; profile has no
    # positive-probability bin at that range, so its surrogate degree is 0
    grid_lat = np.array([0.0, 0.1, 0.2, 45.0])
    grid_lon = np.array([0.0, 0.1, 0.2, 90.0])
    from gridsync.grid_io import GridSpec

    grid = GridSpec(lat=grid_lat, lon=grid_lon)
    net = Network.from_edges(grid, np.array([[0, 1], [0, 2], [1, 2]]))
    prof = estimate_profile(net, bin_width_km=50.0)
    stats = ensemble_stats(prof, grid, metrics=("DC",), ensemble_size=50, seed=3)
    assert 3 in stats["DC"].zero_mean_nodes.tolist()
    assert stats["DC"].mean[3] == 0.0
    assert np.all(stats["DC"].mean[:3] > 0)


def test_ensemble_thread_invariance():
    grid = random_grid(15, 23)
    prof = const_profile(0.25)
    a = ensemble_stats(prof, grid, metrics=("DC", "CC"), ensemble_size=64, seed=5, threads=1)
    b = ensemble_stats(prof, grid, metrics=("DC", "CC"), ensemble_size=64, seed=5, threads=4)
    for m in ("DC", "CC"):
        assert np.array_equal(a[m].mean, b[m].mean)


def test_boundary_signature_on_lattice():
    # homogeneous geometric model on a bounded rectangle: surrogate-mean DC
    # is depressed at the boundary relative to the interior
    from gridsync.synth import lattice_boundary_mask

    layout = RectLattice(rows=10, cols=10, spacing_km=50.0)
    grid = lattice_grid(layout)
    net = gen_embedded_network(
        SynthNetSpec(layout=layout, link_model=Exponential(p0=0.8, lambda_km=100.0), seed=2)
    )
    prof = estimate_profile(net, bin_width_km=50.0)
    stats = ensemble_stats(prof, grid, metrics=("DC",), ensemble_size=100, seed=9)
    boundary = lattice_boundary_mask(layout)
    assert stats["DC"].mean[boundary].mean() < stats["DC"].mean[~boundary].mean()


# ---------------------------------------------------------------------------
# file formats


def test_profile_csv_roundtrip(tmp_path):
    net = random_network(15, 0.3, 29)
    prof = estimate_profile(net, bin_width_km=150.0)
    p = tmp_path / "profile.csv"
    write_profile_csv(prof, p)
    back = read_profile_csv(p)
    assert np.array_equal(back.bin_edges, prof.bin_edges)
    assert np.array_equal(back.bin_prob, prof.bin_prob)
    assert np.array_equal(back.bin_pair_count, prof.bin_pair_count)
    assert np.array_equal(back.bin_link_count, prof.bin_link_count)


def test_surrogate_stats_csv_roundtrip(tmp_path):
    grid = random_grid(8, 31)
    prof = const_profile(0.5)
    stats = ensemble_stats(prof, grid, metrics=("DC", "MGD"), ensemble_size=10, seed=77)
    p = tmp_path / "stats.csv"
    write_surrogate_stats_csv(stats, p)
    back = read_surrogate_stats_csv(p, ensemble_size=10)
    for m in ("DC", "MGD"):
        assert np.array_equal(back[m].mean, stats[m].mean)
        assert np.array_equal(back[m].zero_mean_nodes, stats[m].zero_mean_nodes)
