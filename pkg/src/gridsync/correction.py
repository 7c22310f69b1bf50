"""Boundary corrections: surrogate-mean subtraction and division.

Subtraction replaces a node's metric by its excess over the surrogate mean;
division replaces it by the ratio. Both corrected fields are min-max
normalized onto [0, 1] before comparison. Division is undefined wherever the
surrogate mean is zero; such nodes are excluded from the normalization
bounds and from downstream statistics rather than regularized away.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netmetrics import MetricField
from .surrogate import SurrogateStats


class DegenerateFieldError(ValueError):
    """Corrected field is constant, so min-max normalization is undefined."""


@dataclass(frozen=True)
class CorrectedField:
    method: str  # "subtract" | "divide"
    metric: str
    raw: np.ndarray
    surrogate_mean: np.ndarray
    corrected: np.ndarray  # NaN at undefined nodes
    normalized: np.ndarray  # NaN at undefined nodes
    norm_bounds: tuple[float, float]
    undefined: np.ndarray  # bool, True where the method is undefined

    @property
    def n(self) -> int:
        return int(self.raw.size)

    @property
    def defined_count(self) -> int:
        return int((~self.undefined).sum())


def _normalize(corrected: np.ndarray, defined: np.ndarray, method: str, metric: str):
    vals = corrected[defined]
    lo = float(vals.min())
    hi = float(vals.max())
    if hi == lo:
        raise DegenerateFieldError(
            f"{method} correction of {metric}: corrected field is constant "
            f"({lo!r}) over {vals.size} defined nodes; min-max normalization undefined"
        )
    normalized = np.full(corrected.size, np.nan)
    normalized[defined] = (corrected[defined] - lo) / (hi - lo)
    return normalized, (lo, hi)


def _check_alignment(raw: MetricField, sur: SurrogateStats) -> None:
    if raw.n != sur.n:
        raise ValueError(f"raw field has {raw.n} nodes, surrogate stats {sur.n}")
    if raw.metric != sur.metric:
        raise ValueError(f"metric mismatch: raw {raw.metric!r} vs surrogate {sur.metric!r}")


def correct_subtract(raw: MetricField, sur: SurrogateStats) -> CorrectedField:
    """corrected = raw - surrogate mean, then min-max normalized over all nodes."""
    _check_alignment(raw, sur)
    corrected = raw.values - sur.mean
    defined = np.ones(raw.n, dtype=bool)
    normalized, bounds = _normalize(corrected, defined, "subtract", raw.metric)
    return CorrectedField(
        method="subtract",
        metric=raw.metric,
        raw=raw.values.copy(),
        surrogate_mean=sur.mean.copy(),
        corrected=corrected,
        normalized=normalized,
        norm_bounds=bounds,
        undefined=~defined,
    )


def correct_divide(raw: MetricField, sur: SurrogateStats) -> CorrectedField:
    """corrected = raw / surrogate mean where the mean is positive.

    Zero-mean nodes are undefined: excluded from the normalization bounds and
    from downstream statistics (their count is visible via the flags).
    """
    _check_alignment(raw, sur)
    defined = sur.mean > 0
    if not defined.any():
        raise ValueError("division correction undefined everywhere (all surrogate means zero)")
    corrected = np.full(raw.n, np.nan)
    corrected[defined] = raw.values[defined] / sur.mean[defined]
    normalized, bounds = _normalize(corrected, defined, "divide", raw.metric)
    return CorrectedField(
        method="divide",
        metric=raw.metric,
        raw=raw.values.copy(),
        surrogate_mean=sur.mean.copy(),
        corrected=corrected,
        normalized=normalized,
        norm_bounds=bounds,
        undefined=~defined,
    )


def paired_fields(
    sub: CorrectedField, div: CorrectedField, use_normalized: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Aligned per-node values over nodes defined under BOTH corrections.

    Defaults to the normalized values; set use_normalized=False to compare
    the unnormalized corrected values instead.
    """
    if sub.n != div.n:
        raise ValueError("corrected fields cover different node counts")
    both = ~sub.undefined & ~div.undefined
    if not both.any():
        raise ValueError("no node is defined under both corrections")
    if use_normalized:
        return sub.normalized[both].copy(), div.normalized[both].copy()
    return sub.corrected[both].copy(), div.corrected[both].copy()


# ---------------------------------------------------------------------------
# on-disk format


def write_corrected_csv(cf: CorrectedField, grid, path) -> None:
    from .grid_io import _fmt

    if grid.n != cf.n:
        raise ValueError("grid size does not match corrected field")
    with open(path, "w", newline="") as f:
        f.write("node_id,lat,lon,raw,surrogate_mean,corrected,normalized,defined\n")
        for i in range(cf.n):
            f.write(
                f"{i},{_fmt(grid.lat[i])},{_fmt(grid.lon[i])},{_fmt(cf.raw[i])},"
                f"{_fmt(cf.surrogate_mean[i])},{_fmt(cf.corrected[i])},"
                f"{_fmt(cf.normalized[i])},{int(not cf.undefined[i])}\n"
            )


def read_corrected_csv(path, metric: str, method: str) -> "CorrectedField":
    from .grid_io import GridIOError, GridSpec

    cols: list[tuple] = []
    with open(path, "r", newline="") as f:
        header = f.readline().strip()
        expect = "node_id,lat,lon,raw,surrogate_mean,corrected,normalized,defined"
        if header != expect:
            raise GridIOError(f"malformed header {header!r}", path, line=1)
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 8:
                raise GridIOError(f"expected 8 fields, got {len(parts)}", path, line=lineno)
            cols.append(
                (
                    int(parts[0]),
                    float(parts[1]),
                    float(parts[2]),
                    float(parts[3]),
                    float(parts[4]),
                    float(parts[5]),
                    float(parts[6]),
                    bool(int(parts[7])),
                )
            )
    cols.sort()
    if [c[0] for c in cols] != list(range(len(cols))):
        raise GridIOError("node ids are not 0..n-1 without gaps", path)
    arr = np.array([c[1:7] for c in cols], dtype=float)
    defined = np.array([c[7] for c in cols], dtype=bool)
    GridSpec(lat=arr[:, 0], lon=arr[:, 1])  # validate coordinates
    corrected = arr[:, 4]
    vals = corrected[defined]
    bounds = (float(vals.min()), float(vals.max())) if vals.size else (np.nan, np.nan)
    return CorrectedField(
        method=method,
        metric=metric,
        raw=arr[:, 2],
        surrogate_mean=arr[:, 3],
        corrected=corrected,
        normalized=arr[:, 5],
        norm_bounds=bounds,
        undefined=~defined,
    )
