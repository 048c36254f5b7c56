"""Annual conflict-intensity surfaces.

Zero-mean simple kriging with a Matérn covariance turns the year's discrete
conflict sites into a smooth intensity surface on a regular grid. The
surface is clamped at zero and normalized into a probability mass function
from which capture locations are drawn.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

from .grids import GridSpec

__all__ = [
    "MaternParams",
    "ConflictSurface",
    "ConflictDensity",
    "CapturePoint",
    "AllZeroSurfaceError",
    "matern_cov",
    "build_covariance",
    "krige_predict",
    "normalize_surface",
    "sample_captures",
]

# Below this scaled distance the covariance is the sill to double precision.
_TINY_Z = 1e-8


class AllZeroSurfaceError(ValueError):
    """The clamped surface has no positive mass to normalize."""


@dataclass(frozen=True)
class MaternParams:
    """Covariance parameters: sill, range (degrees), smoothness, nugget."""

    sill: float = 0.4
    range_: float = 0.13
    smoothness: float = 3.0
    nugget: float = 0.1

    def __post_init__(self):
        for name in ("sill", "range_", "smoothness", "nugget"):
            if getattr(self, name) <= 0:
                raise ValueError(f"Matern parameter {name} must be positive")


@dataclass(frozen=True)
class ConflictSurface:
    grid: GridSpec
    values: np.ndarray  # (ny, nx) kriged intensity

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float).reshape(self.grid.ny, self.grid.nx)
        if not np.all(np.isfinite(arr)):
            raise ValueError("surface values must be finite")
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class ConflictDensity:
    grid: GridSpec
    pmf: np.ndarray  # (ny, nx), non-negative, sums to 1

    def __post_init__(self):
        arr = np.asarray(self.pmf, dtype=float).reshape(self.grid.ny, self.grid.nx)
        if np.any(arr < 0):
            raise ValueError("density entries must be non-negative")
        if abs(arr.sum() - 1.0) > 1e-9:
            raise ValueError(f"density must sum to 1, got {arr.sum()!r}")
        object.__setattr__(self, "pmf", arr)

    @property
    def max_value(self) -> float:
        return float(self.pmf.max())

    def value_at(self, lon, lat) -> np.ndarray:
        """Nearest-cell density lookup (points clipped to the grid edge)."""
        i, j = self.grid.cell_of(lon, lat)
        return self.pmf[j, i]


@dataclass(frozen=True)
class CapturePoint:
    lon: float
    lat: float
    cell_index: int
    year: int

    def __post_init__(self):
        object.__setattr__(self, "lon", float(self.lon))
        object.__setattr__(self, "lat", float(self.lat))
        object.__setattr__(self, "cell_index", int(self.cell_index))

    @property
    def location(self) -> tuple[float, float]:
        return (self.lon, self.lat)


def _bessel_k_int(order: int, z: np.ndarray) -> np.ndarray:
    """Modified Bessel K of integer order via upward recurrence.

    K_{m+1}(z) = K_{m-1}(z) + (2m/z) K_m(z), seeded with the standard
    machine-precision rational approximations for orders 0 and 1. Upward
    recurrence is stable for K because the function grows with order.
    """
    k_prev, k_cur = special.k0(z), special.k1(z)
    if order == 0:
        return k_prev
    for m in range(1, order):
        k_prev, k_cur = k_cur, k_prev + (2.0 * m / z) * k_cur
    return k_cur


def matern_cov(d, p: MaternParams):
    """Matérn covariance at distance(s) d; returns the sill at d = 0."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError("distances must be non-negative")
    nu = p.smoothness
    z = np.maximum(d / p.range_, _TINY_Z)
    if float(nu).is_integer():
        k = _bessel_k_int(int(nu), z)
    else:
        k = special.kv(nu, z)
    scale = p.sill * 2.0 ** (1.0 - nu) / math.gamma(nu)
    out = scale * z**nu * k
    out = np.where(d / p.range_ < _TINY_Z, p.sill, out)
    return out if out.ndim else float(out)


def build_covariance(sites: np.ndarray, p: MaternParams) -> np.ndarray:
    """Site-to-site covariance Σ with Σ_ij = matern_cov(‖s_i − s_j‖)."""
    sites = np.asarray(sites, dtype=float).reshape(-1, 2)
    diff = sites[:, None, :] - sites[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    return np.asarray(matern_cov(dist, p))


def _factor(sites: np.ndarray, p: MaternParams):
    cov = build_covariance(sites, p)
    try:
        return linalg.cho_factor(cov + p.nugget * np.eye(len(cov)), lower=True)
    except linalg.LinAlgError as exc:
        raise ValueError(
            "covariance factorization failed; check for duplicate or "
            "near-duplicate sites and parameter validity"
        ) from exc


def krige_predict(
    sites: np.ndarray, y: np.ndarray, p: MaternParams, grid: GridSpec
) -> ConflictSurface:
    """Simple-kriging prediction at every grid cell center.

    Zero prior mean, so predictions decay to 0 away from the observations:
    Ŷ(g) = k(g, S) (Σ + τ²I)^{-1} y.
    """
    sites = np.asarray(sites, dtype=float).reshape(-1, 2)
    y = np.asarray(y, dtype=float).ravel()
    if len(sites) != len(y) or len(y) == 0:
        raise ValueError("need equal, non-zero site and intensity counts")
    weights = linalg.cho_solve(_factor(sites, p), y)
    centers = grid.cell_centers()
    # Chunk the (n_cells, n_sites) cross-covariance to bound peak memory.
    values = np.empty(grid.n_cells)
    step = max(1, 2_000_000 // max(1, len(sites)))
    for lo in range(0, grid.n_cells, step):
        block = centers[lo : lo + step]
        diff = block[:, None, :] - sites[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        values[lo : lo + step] = np.asarray(matern_cov(dist, p)) @ weights
    return ConflictSurface(grid, values.reshape(grid.ny, grid.nx))


def normalize_surface(surface: ConflictSurface) -> ConflictDensity:
    """Clamp negatives to zero and normalize to a grid PMF."""
    clamped = np.maximum(surface.values, 0.0)
    total = clamped.sum()
    if total <= 0:
        raise AllZeroSurfaceError("surface has no positive mass after clamping")
    return ConflictDensity(surface.grid, clamped / total)


def sample_captures(
    density: ConflictDensity, n: int, rng: np.random.Generator, year: int = 0
) -> list[CapturePoint]:
    """Draw n capture locations: cells i.i.d. from the PMF, jittered
    uniformly within the drawn cell."""
    if n < 0:
        raise ValueError("sample count must be >= 0")
    if n == 0:
        return []
    grid = density.grid
    flat = density.pmf.ravel()
    cells = rng.choice(grid.n_cells, size=n, p=flat)
    ju = rng.random(n)
    iu = rng.random(n)
    jj, ii = np.divmod(cells, grid.nx)
    lons = grid.lon_min + (ii + iu) * grid.resolution
    lats = grid.lat_min + (jj + ju) * grid.resolution
    return [
        CapturePoint(float(lo), float(la), int(c), year)
        for lo, la, c in zip(lons, lats, cells)
    ]
