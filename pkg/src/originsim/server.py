"""Read-only HTTP facade over a simulation archive.

Five endpoints: /api/meta, /api/density, /api/conflict, /api/network,
/api/sankey. Every response is a pure function of (archive, query string),
so successful density/sankey bodies are cached LRU-style by their
canonicalized query. Parameter errors are 400, unknown years/ports 404,
and a valid condition matching zero traces 422; the archive still loading
is 503.
"""
from __future__ import annotations

import json
from contextlib import asynccontextmanager
from functools import lru_cache
from typing import Optional

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from . import __version__
from .cli import port_class, resolve_ports
from .density import KDE_SCALE_BOUNDS, KDE_SCALE_DEFAULT, conditional_origin_map
from .grids import GridSpec
from .ingest import conflicts_active_in_year
from .pipeline import (
    InputData,
    SimulationArchive,
    load_archive,
    sankey_flows,
    year_density,
)

__all__ = ["create_app", "ArchiveStore"]

_CACHE_SIZE = 256


class ArchiveStore:
    """Immutable archive plus its inputs, shared by all requests."""

    def __init__(self, archive: SimulationArchive, inputs: InputData):
        self.archive = archive
        self.inputs = inputs
        self.grid = archive.years[0].density.grid if archive.years else None

    @classmethod
    def from_dir(cls, archive_dir) -> "ArchiveStore":
        return cls(*load_archive(archive_dir))


def _json_bytes(doc) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _grid_doc(grid: GridSpec, values) -> dict:
    return {
        "bbox": [
            grid.lon_min,
            grid.lat_min,
            grid.lon_min + grid.nx * grid.resolution,
            grid.lat_min + grid.ny * grid.resolution,
        ],
        "resolution": grid.resolution,
        "nx": grid.nx,
        "ny": grid.ny,
        "values": [float(v) for v in values.ravel()],
    }


def _parse_int(raw: str, what: str) -> int:
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise HTTPException(400, f"invalid {what}: {raw!r}")


def _parse_years_param(raw: Optional[str]) -> Optional[list[int]]:
    if raw is None or raw == "":
        return None
    years: list[int] = []
    for token in raw.split(","):
        token = token.strip()
        if ":" in token:
            a, b = token.split(":", 1)
            lo, hi = _parse_int(a, "year"), _parse_int(b, "year")
            if lo > hi:
                raise HTTPException(400, f"empty year range {token!r}")
            years.extend(range(lo, hi + 1))
        elif token:
            years.append(_parse_int(token, "year"))
    if not years:
        raise HTTPException(400, "no years given")
    return sorted(set(years))


def create_app(archive_dir=None, store: Optional[ArchiveStore] = None) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if app.state.store is None and archive_dir is not None:
            app.state.store = ArchiveStore.from_dir(archive_dir)
        yield

    app = FastAPI(title="originsim", version=__version__, lifespan=lifespan)
    app.state.store = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET"],
        allow_headers=["*"],
    )

    def get_store() -> ArchiveStore:
        st = app.state.store
        if st is None:
            raise HTTPException(503, "archive not loaded yet")
        return st

    def resolve_port_param(raw: Optional[str]) -> tuple[str, ...]:
        if not raw:
            raise HTTPException(400, "ports parameter is required")
        try:
            return tuple(resolve_ports(raw, get_store().inputs.network))
        except ValueError as exc:
            msg = str(exc)
            raise HTTPException(404 if "unknown port" in msg else 400, msg)

    @lru_cache(maxsize=_CACHE_SIZE)
    def density_bytes(year: int, ports: tuple[str, ...], h: float) -> bytes:
        st = get_store()
        m = conditional_origin_map(
            st.archive, years=[year], ports=list(ports), h=h, water=st.inputs.water
        )
        if m.is_empty:
            raise HTTPException(
                422, f"no simulated individuals for year {year} and ports {list(ports)}"
            )
        doc = _grid_doc(m.grid, m.values)
        doc["condition"] = {"year": year, "ports": list(ports), "h": h}
        doc["sample_count"] = m.sample_count
        return _json_bytes(doc)

    @lru_cache(maxsize=_CACHE_SIZE)
    def conflict_bytes(year: int) -> bytes:
        st = get_store()
        records = conflicts_active_in_year(
            st.inputs.conflicts, year, include_founded=st.archive.config.include_founded
        )
        if not records:
            raise HTTPException(404, f"no conflict records active in year {year}")
        try:
            ys = st.archive.year(year)
            surface = ys.surface
        except KeyError:
            surface = None
        if surface is None:
            surface, _density = year_density(year, st.archive.config, st.inputs)
        doc = {
            "year": year,
            "points": [
                {
                    "name": r.city_name,
                    "lon": r.lon,
                    "lat": r.lat,
                    "start_year": r.start_year,
                    "end_year": r.end_year,
                    "intensity": r.intensity_code,
                    "affiliation": r.affiliation,
                }
                for r in records
            ],
            "surface": _grid_doc(surface.grid, surface.values),
        }
        return _json_bytes(doc)

    @lru_cache(maxsize=_CACHE_SIZE)
    def sankey_bytes(ports: tuple[str, ...], years: Optional[tuple[int, ...]]) -> bytes:
        st = get_store()
        available = set(st.archive.years_available())
        if years is not None:
            missing = [y for y in years if y not in available]
            if missing:
                raise HTTPException(404, f"year {missing[0]} not in archive")
        flows = sankey_flows(st.archive, ports=list(ports), years=years)
        doc = {
            "ports": list(ports),
            "years": list(years) if years is not None else None,
            "rows": [[a, b, c] for a, b, c in flows.rows],
        }
        return _json_bytes(doc)

    def json_response(body: bytes) -> Response:
        return Response(content=body, media_type="application/json")

    @app.get("/api/meta")
    def api_meta():
        st = get_store()
        ports = [
            {"id": pid, "name": st.inputs.network.node(pid).name, "class": port_class(pid)}
            for pid in st.inputs.network.absorbing_ids()
        ]
        grid = st.grid
        doc = {
            "version": __version__,
            "years": st.archive.years_available(),
            "skipped_years": list(st.archive.skipped_years),
            "ports": ports,
            "grid": {
                "lon_min": grid.lon_min,
                "lat_min": grid.lat_min,
                "lon_max": grid.lon_min + grid.nx * grid.resolution,
                "lat_max": grid.lat_min + grid.ny * grid.resolution,
                "resolution": grid.resolution,
                "nx": grid.nx,
                "ny": grid.ny,
            },
            "bandwidth": {
                "min": KDE_SCALE_BOUNDS[0],
                "max": KDE_SCALE_BOUNDS[1],
                "default": KDE_SCALE_DEFAULT,
            },
        }
        return json_response(_json_bytes(doc))

    @app.get("/api/density")
    def api_density(request: Request):
        st = get_store()
        q = request.query_params
        year = _parse_int(q.get("year"), "year")
        if year not in st.archive.years_available():
            raise HTTPException(404, f"year {year} not in archive")
        ports = resolve_port_param(q.get("ports"))
        h_raw = q.get("h")
        if h_raw is None or h_raw == "":
            h = KDE_SCALE_DEFAULT
        else:
            try:
                h = float(h_raw)
            except ValueError:
                raise HTTPException(400, f"invalid h: {h_raw!r}")
        lo, hi = KDE_SCALE_BOUNDS
        if not (lo <= h <= hi):
            raise HTTPException(400, f"kernel scale {h} outside [{lo}, {hi}]")
        return json_response(density_bytes(year, ports, h))

    @app.get("/api/conflict")
    def api_conflict(request: Request):
        year = _parse_int(request.query_params.get("year"), "year")
        return json_response(conflict_bytes(year))

    @app.get("/api/network")
    def api_network():
        st = get_store()
        net = st.inputs.network
        doc = {
            "nodes": [
                {
                    "id": nd.id,
                    "name": nd.name,
                    "lon": nd.lon,
                    "lat": nd.lat,
                    "absorbing": nd.is_absorbing,
                }
                for nd in net.nodes
            ],
            "edges": [
                [net.nodes[i].id, net.nodes[j].id] for i, j in net.undirected_edges()
            ],
        }
        return json_response(_json_bytes(doc))

    @app.get("/api/sankey")
    def api_sankey(request: Request):
        q = request.query_params
        ports = resolve_port_param(q.get("ports"))
        years = _parse_years_param(q.get("years"))
        return json_response(sankey_bytes(ports, tuple(years) if years else None))

    return app
