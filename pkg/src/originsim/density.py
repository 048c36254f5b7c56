"""Origin maps: Gaussian kernel density over capture locations.

The estimator is an isotropic bivariate normal kernel with a single scale
parameter, evaluated at grid cell centers. Conditioning selects the traces
whose exit port and year match a query before smoothing, which turns the
trace archive into "where did the people sold at these ports come from"
maps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .grids import GridSpec
from .ingest import WaterMask
from .pipeline import SimulationArchive

__all__ = [
    "KDE_SCALE_DEFAULT",
    "KDE_SCALE_BOUNDS",
    "OriginDensityMap",
    "kde_grid",
    "conditional_origin_map",
    "total_variation",
]

KDE_SCALE_DEFAULT = 0.75
KDE_SCALE_BOUNDS = (0.25, 6.0)

_POINT_CHUNK = 4096


def kde_grid(points: np.ndarray, grid: GridSpec, h: float) -> np.ndarray:
    """Kernel density of `points` at every cell center, shape (ny, nx).

    Values are a proper density in per-square-degree units: summing
    value * cell_area over an unbounded grid tends to 1. The isotropic
    Gaussian kernel factorizes, so each chunk costs two (cells x points)
    exponentials and one matmul instead of a full pairwise distance pass.
    """
    if h <= 0:
        raise ValueError("kernel scale must be positive")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n == 0:
        raise ValueError("kernel density needs at least one point")
    lon_c = grid.lon_centers()
    lat_c = grid.lat_centers()
    acc = np.zeros((grid.ny, grid.nx))
    inv = -0.5 / (h * h)
    for lo in range(0, n, _POINT_CHUNK):
        block = pts[lo : lo + _POINT_CHUNK]
        a = np.exp(inv * (lon_c[:, None] - block[None, :, 0]) ** 2)  # (nx, m)
        b = np.exp(inv * (lat_c[:, None] - block[None, :, 1]) ** 2)  # (ny, m)
        acc += b @ a.T
    return acc / (2.0 * math.pi * h * h * n)


@dataclass(frozen=True)
class OriginDensityMap:
    """Conditional origin map: per-cell probability mass over land.

    `values` is None when no trace matched the condition; callers must
    check `is_empty` before rendering. Otherwise water cells are exactly
    zero and the land cells sum to one.
    """

    grid: GridSpec
    values: Optional[np.ndarray]
    sample_count: int
    h: float
    ports: Optional[tuple[str, ...]] = None
    years: Optional[tuple[int, ...]] = None

    @property
    def is_empty(self) -> bool:
        return self.sample_count == 0


def conditional_origin_map(
    archive: SimulationArchive,
    years: Optional[Iterable[int]] = None,
    ports: Optional[Iterable[str]] = None,
    h: float = KDE_SCALE_DEFAULT,
    water: Optional[WaterMask] = None,
    grid: Optional[GridSpec] = None,
) -> OriginDensityMap:
    """Smooth the capture points of the matching traces into a cell PMF.

    Water cells (under `water`) are forced to zero and the remaining mass
    is renormalized over land. An empty condition yields an empty map
    rather than an error so callers can distinguish "no data" from "bad
    query".
    """
    lo, hi = KDE_SCALE_BOUNDS
    if not (lo <= h <= hi):
        raise ValueError(f"kernel scale {h} outside [{lo}, {hi}]")
    years_t = None if years is None else tuple(sorted(set(int(y) for y in years)))
    ports_t = None if ports is None else tuple(sorted(set(ports)))
    if grid is None:
        if archive.years:
            grid = archive.years[0].density.grid
        else:
            raise ValueError("archive has no simulated years and no grid was given")
    traces = archive.traces(years=years_t, ports=ports_t)
    if not traces:
        return OriginDensityMap(grid, None, 0, h, ports_t, years_t)
    points = np.array([[t.capture.lon, t.capture.lat] for t in traces])
    values = kde_grid(points, grid, h)
    if water is not None:
        values = values.copy()
        values[water.water_cells(grid)] = 0.0
    total = values.sum()
    if total <= 0:
        # every kernel sat entirely over water; treat as no usable data
        return OriginDensityMap(grid, None, 0, h, ports_t, years_t)
    return OriginDensityMap(grid, values / total, len(traces), h, ports_t, years_t)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation distance between two cell PMFs on the same grid."""
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if p.shape != q.shape:
        raise ValueError("PMF shapes differ")
    return 0.5 * float(np.abs(p - q).sum())
