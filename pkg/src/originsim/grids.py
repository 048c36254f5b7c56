"""Regular lon/lat grids and the plain-text grid interchange format.

A grid covers a bounding box with square cells of ``resolution`` degrees.
Values are stored as a ``(ny, nx)`` float array; row ``j`` is the latitude
band starting at ``lat_min + j * resolution``, column ``i`` the longitude
band starting at ``lon_min + i * resolution``. Flat cell indices are
row-major: ``index = j * nx + i``.

Text format: one header line ``lon_min lat_min resolution nx ny`` followed
by ``ny`` lines of ``nx`` whitespace-separated values (row 0 first).
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["GridSpec", "write_grid", "read_grid", "format_grid", "parse_grid"]


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a regular rectangular grid in decimal degrees."""

    lon_min: float
    lat_min: float
    lon_max: float
    lat_max: float
    resolution: float
    nx: int
    ny: int

    def __post_init__(self):
        for name in ("lon_min", "lat_min", "lon_max", "lat_max", "resolution"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        if self.resolution <= 0:
            raise ValueError("grid resolution must be positive")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid must have at least one cell per axis")

    @classmethod
    def from_bbox(cls, lon_min, lat_min, lon_max, lat_max, resolution) -> "GridSpec":
        if not (lon_max > lon_min and lat_max > lat_min):
            raise ValueError("bounding box must have positive extent")
        nx = max(1, math.ceil((lon_max - lon_min) / resolution - 1e-9))
        ny = max(1, math.ceil((lat_max - lat_min) / resolution - 1e-9))
        return cls(lon_min, lat_min, lon_max, lat_max, resolution, nx, ny)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def cell_area(self) -> float:
        return self.resolution * self.resolution

    def lon_centers(self) -> np.ndarray:
        return self.lon_min + (np.arange(self.nx) + 0.5) * self.resolution

    def lat_centers(self) -> np.ndarray:
        return self.lat_min + (np.arange(self.ny) + 0.5) * self.resolution

    def cell_centers(self) -> np.ndarray:
        """All cell centers as an ``(n_cells, 2)`` array of (lon, lat), flat order."""
        lons, lats = np.meshgrid(self.lon_centers(), self.lat_centers())
        return np.column_stack([lons.ravel(), lats.ravel()])

    def contains(self, lon, lat) -> bool:
        return (
            self.lon_min <= lon <= self.lon_min + self.nx * self.resolution
            and self.lat_min <= lat <= self.lat_min + self.ny * self.resolution
        )

    def cell_of(self, lon, lat):
        """Nearest-cell (i, j) indices for a point, clipped to the grid edge."""
        i = np.clip(
            np.floor((np.asarray(lon) - self.lon_min) / self.resolution).astype(int),
            0,
            self.nx - 1,
        )
        j = np.clip(
            np.floor((np.asarray(lat) - self.lat_min) / self.resolution).astype(int),
            0,
            self.ny - 1,
        )
        return i, j

    def flat_index(self, lon, lat):
        i, j = self.cell_of(lon, lat)
        return j * self.nx + i


def format_grid(grid: GridSpec, values: np.ndarray) -> str:
    """Serialize a grid to the text interchange format."""
    arr = np.asarray(values, dtype=float).reshape(grid.ny, grid.nx)
    buf = io.StringIO()
    buf.write(f"{grid.lon_min!r} {grid.lat_min!r} {grid.resolution!r} {grid.nx} {grid.ny}\n")
    for row in arr:
        buf.write(" ".join(repr(float(v)) for v in row))
        buf.write("\n")
    return buf.getvalue()


def parse_grid(text: str) -> tuple[GridSpec, np.ndarray]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty grid file")
    head = lines[0].split()
    if len(head) != 5:
        raise ValueError("grid header must be 'lon_min lat_min resolution nx ny'")
    lon_min, lat_min, resolution = (float(x) for x in head[:3])
    nx, ny = int(head[3]), int(head[4])
    if len(lines) - 1 != ny:
        raise ValueError(f"expected {ny} value rows, found {len(lines) - 1}")
    rows = [np.array([float(v) for v in ln.split()]) for ln in lines[1:]]
    values = np.vstack(rows)
    if values.shape != (ny, nx):
        raise ValueError("grid values do not match declared dimensions")
    grid = GridSpec(
        lon_min,
        lat_min,
        lon_min + nx * resolution,
        lat_min + ny * resolution,
        resolution,
        nx,
        ny,
    )
    return grid, values


def write_grid(path, grid: GridSpec, values: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_grid(grid, values))


def read_grid(path) -> tuple[GridSpec, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        return parse_grid(fh.read())
