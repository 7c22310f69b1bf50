import math

import numpy as np
import pytest

from gridsync.events import EventSeries
from gridsync.grid_io import GridSpec
from gridsync.seeding import NULL_MODEL_TAG, mix64, stream
from gridsync.sync import (
    SyncParams,
    build_network,
    delay_pair,
    event_sync,
    local_tau,
    null_threshold,
    null_threshold_exact,
    pair_sync,
)

from conftest import random_event_series, random_grid


def mk(days, T=50, node_id=0):
    return EventSeries(node_id, np.asarray(days, dtype=np.int64), np.arange(T, dtype=np.int64))


# ---------------------------------------------------------------------------
# local time scale


def test_local_tau_hand_example():
    ei = mk([10, 14, 20])
    ej = mk([13, 19])
    # gaps around day 14: 4 and 6; around day 13: 6 -> tau = 0.5 * 4
    assert local_tau(ei, ej, 2, 1) == 2.0


def test_local_tau_two_event_series():
    assert local_tau(mk([5, 7]), mk([6, 8]), 1, 1) == 1.0


def test_local_tau_singletons_infinite():
    assert local_tau(mk([5]), mk([9]), 1, 1) == math.inf


def test_local_tau_index_errors():
    with pytest.raises(IndexError):
        local_tau(mk([5]), mk([9]), 2, 1)
    with pytest.raises(IndexError):
        local_tau(mk([5]), mk([9]), 1, 0)


def test_delay_pair():
    dp = delay_pair(mk([10, 14, 20]), mk([13, 19]), 2, 1)
    assert dp.delta == -1
    assert dp.tau == 2.0


# ---------------------------------------------------------------------------
# event synchronization


def test_es_identical_series():
    a, b = mk([10, 20, 30]), mk([10, 20, 30], node_id=1)
    assert event_sync(a, b, 0) == 3


def test_es_disjoint():
    assert event_sync(mk([1, 5]), mk([2, 8]), 0) == 0


def test_es_intersection_oracle(rng):
    for _ in range(200):
        a = random_event_series(0, 2760, rng.uniform(0.01, 0.10), rng)
        b = random_event_series(1, 2760, rng.uniform(0.01, 0.10), rng)
        expect = len(set(a.event_days.tolist()) & set(b.event_days.tolist()))
        assert event_sync(a, b, 0) == expect


def test_es_symmetry(rng):
    for tau_max in (0, 1, 3):
        for _ in range(30):
            a = random_event_series(0, 300, 0.08, rng)
            b = random_event_series(1, 300, 0.08, rng)
            assert event_sync(a, b, tau_max) == event_sync(b, a, tau_max)


def test_es_half_weight_convention():
    a, b = mk([10, 20, 30]), mk([10, 20, 30], node_id=1)
    assert event_sync(a, b, 0, simultaneous_weight=0.5) == 1.5


def test_es_lagged_pairs():
    # far-apart events: with tau_max = 2, |delta| = 1 pairs qualify when tau > 1
    a = mk([10, 30])
    b = mk([11, 31], node_id=1)
    # gaps are 20 -> tau = 10; deltas are +1/-19/+21/+1 -> two qualifying pairs
    assert event_sync(a, b, 2) == 2
    assert event_sync(a, b, 0) == 0


def test_es_monotone_in_shared_days(rng):
    # splicing one more shared day (with room on both sides) never lowers ES
    for trial in range(20):
        a = random_event_series(0, 500, 0.05, rng)
        b = random_event_series(1, 500, 0.05, rng)
        base = event_sync(a, b, 0)
        taken = set(a.event_days.tolist()) | set(b.event_days.tolist())
        candidates = [
            d
            for d in range(502, 998)
            if not taken & {d - 1, d, d + 1}
        ]
        d = candidates[0]
        universe = np.arange(1000, dtype=np.int64)
        a2 = EventSeries(0, np.sort(np.append(a.event_days, d)), universe)
        b2 = EventSeries(1, np.sort(np.append(b.event_days, d)), universe)
        assert event_sync(a2, b2, 0) >= base


# ---------------------------------------------------------------------------
# null model


def test_null_threshold_empty_series():
    params = SyncParams()
    a = mk([], T=100)
    b = mk([5, 10], T=100, node_id=1)
    assert null_threshold(a, b, params, pair_seed=1) == 0.0
    r = pair_sync(a, b, params, pair_seed=1)
    assert not r.significant


def test_null_threshold_saturated_series():
    T = 40
    days = np.arange(T, dtype=np.int64)
    a = EventSeries(0, days, days)
    b = EventSeries(1, days, days)
    params = SyncParams(n_shuffles=100)
    assert null_threshold(a, b, params, pair_seed=3) == float(T)


def test_null_threshold_rejects_few_shuffles():
    with pytest.raises(ValueError, match="n_shuffles"):
        SyncParams(n_shuffles=50)


def test_null_threshold_matches_hypergeometric(rng):
    # unit-scale version of the oracle check (the full one runs in acceptance)
    T, N = 600, 30
    universe = np.arange(T, dtype=np.int64)
    a = EventSeries(0, universe[:N], universe)
    b = EventSeries(1, universe[:N], universe)
    params = SyncParams(n_shuffles=1000, link_quantile=0.995)
    exact = null_threshold_exact(T, N, N, 0.995)
    hits = sum(
        abs(null_threshold(a, b, params, pair_seed=mix64(7, t)) - exact) <= 1
        for t in range(20)
    )
    assert hits >= 18


def test_null_threshold_exact_edge_cases():
    assert null_threshold_exact(10, 0, 5, 0.995) == 0
    assert null_threshold_exact(10, 5, 5, 1.0) == 5
    assert null_threshold_exact(12, 12, 7, 1.0) == 7
    # overlap support starts at n_i + n_j - T
    assert null_threshold_exact(10, 9, 9, 0.001) == 8


def test_null_threshold_exact_enumeration_oracle():
    from itertools import combinations

    T = 8
    for n_i, n_j, q in [(4, 4, 0.995), (3, 5, 0.9), (2, 6, 0.5), (4, 4, 0.25)]:
        counts = {}
        for a in combinations(range(T), n_i):
            sa = set(a)
            for b in combinations(range(T), n_j):
                k = len(sa.intersection(b))
                counts[k] = counts.get(k, 0) + 1
        total = sum(counts.values())
        cdf = 0.0
        expected = None
        for k in sorted(counts):
            cdf += counts[k] / total
            if expected is None and cdf >= q:
                expected = k
        assert null_threshold_exact(T, n_i, n_j, q) == expected


# ---------------------------------------------------------------------------
# network construction


def empty_series(n, T=100):
    days = np.arange(T, dtype=np.int64)
    return [EventSeries(i, np.empty(0, dtype=np.int64), days) for i in range(n)]


def test_build_network_all_empty():
    grid = random_grid(5, 2)
    net = build_network(empty_series(5), grid, SyncParams(n_shuffles=100))
    assert net.edge_count == 0


def test_build_network_two_heavy_series():
    T = 400
    days = np.arange(T, dtype=np.int64)
    heavy = np.arange(0, T, 2, dtype=np.int64)  # 200 events, deduped by construction
    series = empty_series(6, T)
    series[1] = EventSeries(1, heavy, days)
    series[4] = EventSeries(4, heavy, days)
    grid = random_grid(6, 3)
    net = build_network(series, grid, SyncParams(n_shuffles=200, seed=5))
    assert net.edge_count == 1
    assert net.has_edge(1, 4)
    # ES = 200 dominates any null quantile
    assert null_threshold_exact(T, 200, 200, 0.995) < 200


def test_build_network_deterministic_across_threads(rng):
    n, T = 12, 400
    series = [random_event_series(i, T, 0.06, rng) for i in range(n)]
    grid = random_grid(n, 4)
    params = SyncParams(n_shuffles=200, seed=11)
    nets = [build_network(series, grid, params, threads=k) for k in (1, 4)]
    assert nets[0].edge_array().tolist() == nets[1].edge_array().tolist()


def test_memoized_threshold_equals_fresh_compute(rng):
    # the cache key fixes the RNG stream, so a cached entry must equal a
    # fresh pairwise computation that uses the key-derived stream
    T = 300
    universe = np.arange(T, dtype=np.int64)
    params = SyncParams(n_shuffles=200, seed=21)
    for n_lo, n_hi in [(10, 15), (12, 12), (5, 30)]:
        a = EventSeries(0, universe[:n_lo], universe)
        b = EventSeries(1, universe[:n_hi], universe)
        seed = mix64(params.seed, NULL_MODEL_TAG, T, n_lo, n_hi)
        direct = null_threshold(a, b, params, pair_seed=seed)
        # same key, different pair objects: same stream, same threshold
        a2 = EventSeries(0, universe[100 : 100 + n_lo], universe)
        b2 = EventSeries(1, universe[50 : 50 + n_hi], universe)
        again = null_threshold(a2, b2, params, pair_seed=seed)
        assert direct == again


def test_build_network_memoize_off_uses_pair_streams(rng):
    # with memoization off every pair draws from its (seed, i, j) stream
    n, T = 6, 300
    series = [random_event_series(i, T, 0.08, rng) for i in range(n)]
    grid = random_grid(n, 8)
    params = SyncParams(n_shuffles=150, seed=9, memoize=False)
    net = build_network(series, grid, params)
    for i in range(n):
        for j in range(i + 1, n):
            r = pair_sync(series[i], series[j], params, mix64(params.seed, i, j))
            assert net.has_edge(i, j) == r.significant


def test_false_link_rate(rng):
    # independent random series: per-pair link probability is at most
    # 1 - link_quantile plus the discreteness slack of the integer-valued
    # null (quantified by the exact hypergeometric tail)
    from gridsync.sync import hypergeom_pmf

    n, T, N = 160, 2760, 138
    universe = np.arange(T, dtype=np.int64)
    series = []
    for i in range(n):
        days = np.sort(rng.choice(T, size=N, replace=False)).astype(np.int64)
        series.append(EventSeries(i, days, universe))
    grid = random_grid(n, 6)
    params = SyncParams(n_shuffles=1000, seed=13, link_quantile=0.995)
    net = build_network(series, grid, params)
    n_pairs = n * (n - 1) // 2  # 12,720 pairs, one shared (T, N, N) key

    k_star = null_threshold_exact(T, N, N, params.link_quantile)
    # quantile guarantee: exceeding the exact threshold is rarer than 0.005
    tail = {k: sum(hypergeom_pmf(T, N, N, j) for j in range(k, N + 1)) for k in
            (k_star - 1, k_star + 1)}
    assert tail[k_star + 1] <= 1 - params.link_quantile
    # Monte-Carlo threshold sits within 1 of k*, so the worst-case rate is
    # the tail at k* - 1, plus binomial noise over the observed pairs
    bound = tail[k_star - 1]
    rate = net.edge_count / n_pairs
    assert rate <= bound + 3 * np.sqrt(bound * (1 - bound) / n_pairs)


def test_build_network_size_mismatch():
    grid = random_grid(4, 1)
    with pytest.raises(ValueError, match="event series"):
        build_network(empty_series(3), grid, SyncParams(n_shuffles=100))
