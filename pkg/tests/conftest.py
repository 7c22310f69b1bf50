import numpy as np
import pytest

from gridsync.events import EventSeries, dedup_consecutive
from gridsync.grid_io import GridSpec
from gridsync.netmetrics import Network


def random_grid(n, seed, lat_range=(20.0, 50.0), lon_range=(-120.0, -70.0)) -> GridSpec:
    rng = np.random.default_rng(seed)
    return GridSpec(
        lat=rng.uniform(*lat_range, n),
        lon=rng.uniform(*lon_range, n),
    )


def random_network(n, density, seed) -> Network:
    rng = np.random.default_rng(seed)
    grid = random_grid(n, seed + 10_000)
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.size) < density
    return Network.from_edges(grid, np.stack([iu[mask], ju[mask]], axis=1))


def random_event_series(node_id, T, rate, rng, start=0) -> EventSeries:
    days = start + np.nonzero(rng.random(T) < rate)[0].astype(np.int64)
    es = EventSeries(node_id, days, start + np.arange(T, dtype=np.int64))
    return dedup_consecutive(es)


def dense_adjacency(net: Network) -> np.ndarray:
    a = np.zeros((net.n, net.n), dtype=bool)
    for i, nbrs in enumerate(net.neighbors):
        a[i, nbrs] = True
    return a


@pytest.fixture
def rng():
    return np.random.default_rng(20260811)
