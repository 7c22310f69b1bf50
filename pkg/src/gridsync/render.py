"""Rasterize a per-node field on a regular lat/lon grid to a PPM image.

Nodes off a perfectly regular grid are assigned to the nearest cell. A text
legend sidecar records the value range, palette, and image dimensions.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .grid_io import GridSpec

UNDEFINED_RGB = (255, 0, 255)  # magenta sentinel
EMPTY_RGB = (40, 40, 40)  # cells with no node

PALETTES = ("heat", "grayscale")


def _ramp(t: np.ndarray, palette: str) -> np.ndarray:
    """Map t in [0, 1] to RGB rows."""
    t = np.clip(t, 0.0, 1.0)
    if palette == "grayscale":
        g = np.round(255 * t).astype(np.uint8)
        return np.stack([g, g, g], axis=-1)
    if palette == "heat":
        # blue -> yellow -> red
        r = np.clip(2.0 * t, 0, 1)
        g = np.clip(2.0 * np.minimum(t, 1.0 - t) + 0.15 * (1 - t), 0, 1)
        b = np.clip(1.0 - 2.0 * t, 0, 1)
        return np.round(255 * np.stack([r, g, b], axis=-1)).astype(np.uint8)
    raise ValueError(f"unknown palette {palette!r}; expected one of {PALETTES}")


def _axis_step(coords: np.ndarray) -> float:
    uniq = np.unique(coords)
    if uniq.size < 2:
        return 1.0
    diffs = np.diff(uniq)
    return float(np.median(diffs))


def render_map(
    values: np.ndarray,
    grid: GridSpec,
    path,
    *,
    defined: np.ndarray | None = None,
    vmin: float | None = None,
    vmax: float | None = None,
    palette: str = "heat",
) -> tuple[int, int]:
    """Write a P6 PPM raster plus a '.legend.txt' sidecar.

    Returns (height, width). The ramp spans [vmin, vmax]; defaults are the
    min/max of the defined values. Undefined nodes get the sentinel color.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0 or grid.n == 0:
        raise ValueError("cannot render an empty field")
    if values.shape != (grid.n,):
        raise ValueError("field length does not match grid")
    defined = ~np.isnan(values) if defined is None else np.asarray(defined, dtype=bool)

    lat_step = _axis_step(grid.lat)
    lon_step = _axis_step(grid.lon)
    lat_min, lat_max = float(grid.lat.min()), float(grid.lat.max())
    lon_min, lon_max = float(grid.lon.min()), float(grid.lon.max())
    height = int(round((lat_max - lat_min) / lat_step)) + 1
    width = int(round((lon_max - lon_min) / lon_step)) + 1

    good = defined & np.isfinite(values)
    if vmin is None:
        vmin = float(values[good].min()) if good.any() else 0.0
    if vmax is None:
        vmax = float(values[good].max()) if good.any() else 1.0
    span = vmax - vmin if vmax > vmin else 1.0

    img = np.empty((height, width, 3), dtype=np.uint8)
    img[:, :] = EMPTY_RGB
    rows = np.clip(np.round((lat_max - grid.lat) / lat_step).astype(int), 0, height - 1)
    cols = np.clip(np.round((grid.lon - lon_min) / lon_step).astype(int), 0, width - 1)
    t = (np.where(good, values, vmin) - vmin) / span
    rgb = _ramp(t, palette)
    for i in range(grid.n):
        img[rows[i], cols[i]] = rgb[i] if good[i] else UNDEFINED_RGB

    path = Path(path)
    with open(path, "wb") as f:
        f.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        f.write(img.tobytes())
    legend = path.with_suffix(path.suffix + ".legend.txt")
    with open(legend, "w") as f:
        f.write(f"range: [{vmin!r}, {vmax!r}]\n")
        f.write(f"palette: {palette}\n")
        f.write(f"size: {width} x {height}\n")
        f.write(f"undefined color: rgb{UNDEFINED_RGB}\n")
    return height, width
