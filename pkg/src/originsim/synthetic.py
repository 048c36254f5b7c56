"""Synthetic datasets: the bundled demo region and randomized test instances.

The bundled dataset sketches a Bight-of-Benin-like region: six coastal
points of sale on an east-west shoreline, three inland off-map exits, a
lattice of interior market towns, and twenty years of conflict activity
drifting from the southwest toward the northeast. Everything is generated
from fixed seeds so the files under data/ can be regenerated verbatim.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import numpy as np

from .ingest import (
    ATTACKED,
    DESTROYED,
    FOUNDED,
    ConflictRecord,
    ConflictTable,
    Node,
    TradeNetwork,
    WaterMask,
    parse_water_mask,
    serialize_conflict_table,
    serialize_network_edges,
    serialize_network_nodes,
)
from .pipeline import InputData
from .streams import substream

__all__ = [
    "DATASET_SEED",
    "YEAR_START",
    "YEAR_END",
    "coastal_ports",
    "offmap_ports",
    "synthetic_network",
    "synthetic_conflicts",
    "synthetic_water_geojson",
    "synthetic_inputs",
    "write_dataset",
    "random_network",
    "random_conflict_table",
]

DATASET_SEED = 1817
YEAR_START = 1817
YEAR_END = 1836

_COASTAL = (
    ("little_popo", "Little Popo", 1.63, 6.22),
    ("ouidah", "Ouidah", 2.09, 6.35),
    ("jakin", "Jakin", 2.46, 6.39),
    ("porto_novo", "Porto Novo", 2.63, 6.48),
    ("badagry", "Badagry", 2.88, 6.42),
    ("lagos", "Lagos", 3.38, 6.45),
)
_OFFMAP = (
    ("offmap_ne", "Off Map NE", 5.60, 10.60),
    ("offmap_se", "Off Map SE", 5.60, 7.20),
    ("offmap_nw", "Off Map NW", 0.40, 10.60),
)

_LATTICE_COLS = 7
_LATTICE_ROWS = 6


def coastal_ports() -> list[str]:
    return [pid for pid, *_ in _COASTAL]


def offmap_ports() -> list[str]:
    return [pid for pid, *_ in _OFFMAP]


def synthetic_network(seed: int = DATASET_SEED) -> TradeNetwork:
    """Interior towns on a jittered lattice, ports attached at the edges."""
    rng = substream(seed, "nodes")
    nodes = []
    lon_axis = np.linspace(0.7, 5.3, _LATTICE_COLS)
    lat_axis = np.linspace(6.8, 10.4, _LATTICE_ROWS)
    index_of = {}
    for r, lat in enumerate(lat_axis):
        for c, lon in enumerate(lon_axis):
            k = r * _LATTICE_COLS + c + 1
            jlon = lon + rng.uniform(-0.12, 0.12)
            jlat = lat + rng.uniform(-0.12, 0.12)
            nid = f"t{k:02d}"
            index_of[(r, c)] = len(nodes)
            nodes.append(Node(nid, f"Town {k:02d}", round(jlon, 4), round(jlat, 4), False))
    n_towns = len(nodes)
    for pid, name, lon, lat in _COASTAL + _OFFMAP:
        nodes.append(Node(pid, name, lon, lat, True))
    n = len(nodes)
    adj = np.zeros((n, n), dtype=np.int8)
    for (r, c), i in index_of.items():
        for dr, dc in ((0, 1), (1, 0)):
            if (r + dr, c + dc) in index_of:
                j = index_of[(r + dr, c + dc)]
                adj[i, j] = adj[j, i] = 1
    coords = np.array([[nd.lon, nd.lat] for nd in nodes])
    towns = np.arange(n_towns)
    for p in range(n_towns, n):
        d2 = ((coords[towns] - coords[p]) ** 2).sum(axis=1)
        for j in np.argsort(d2)[:2]:
            adj[p, towns[j]] = adj[towns[j], p] = 1
    for i, nd in enumerate(nodes):
        if nd.is_absorbing:
            adj[i, :] = 0
            adj[i, i] = 1
    return TradeNetwork(tuple(nodes), adj)


def synthetic_conflicts(
    seed: int = DATASET_SEED, year_start: int = YEAR_START, year_end: int = YEAR_END
) -> ConflictTable:
    """Conflict sites whose center of activity drifts northeast over time."""
    rng = substream(seed, "conflicts")
    records = []
    n_years = year_end - year_start
    for year in range(year_start, year_end + 1):
        t = (year - year_start) / max(1, n_years)
        center = np.array([1.5 + 3.0 * t, 7.2 + 2.8 * t])
        n_sites = int(rng.integers(4, 9))
        for k in range(n_sites):
            lon = float(np.clip(center[0] + rng.normal(0, 0.45), 0.5, 5.5))
            lat = float(np.clip(center[1] + rng.normal(0, 0.40), 6.5, 10.5))
            code = DESTROYED if rng.random() < 0.3 else ATTACKED
            span = 1 if (rng.random() < 0.2 and year < year_end) else 0
            records.append(
                ConflictRecord(
                    city_name=f"Site {year}-{k + 1}",
                    lon=round(lon, 4),
                    lat=round(lat, 4),
                    start_year=year,
                    end_year=year + span,
                    intensity_code=code,
                    affiliation=("north" if lat > 8.5 else "south"),
                )
            )
        if rng.random() < 0.25:
            records.append(
                ConflictRecord(
                    city_name=f"Founded {year}",
                    lon=round(float(rng.uniform(1.0, 5.0)), 4),
                    lat=round(float(rng.uniform(7.0, 10.0)), 4),
                    start_year=year,
                    end_year=year_end,
                    intensity_code=FOUNDED,
                )
            )
    return ConflictTable(tuple(records))


def synthetic_water_geojson() -> str:
    """Atlantic strip south of the coast, with one island to exercise holes."""
    sea = [
        [[-1.0, 4.0], [7.0, 4.0], [7.0, 6.15], [-1.0, 6.15], [-1.0, 4.0]],
        [[2.9, 5.7], [3.1, 5.7], [3.1, 5.9], [2.9, 5.9], [2.9, 5.7]],
    ]
    lagoon = [[[4.2, 6.55], [4.6, 6.55], [4.6, 6.75], [4.2, 6.75], [4.2, 6.55]]]
    doc = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "properties": {"name": "sea"},
                "geometry": {"type": "Polygon", "coordinates": sea},
            },
            {
                "type": "Feature",
                "properties": {"name": "lagoon"},
                "geometry": {"type": "Polygon", "coordinates": lagoon},
            },
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def synthetic_inputs(
    seed: int = DATASET_SEED, port_totals_text: Optional[str] = None
) -> InputData:
    from .ingest import parse_port_totals

    network = synthetic_network(seed)
    conflicts = synthetic_conflicts(seed)
    water_text = synthetic_water_geojson()
    sources = {
        "conflicts.csv": serialize_conflict_table(conflicts),
        "nodes.csv": serialize_network_nodes(network),
        "edges.csv": serialize_network_edges(network),
        "water.geojson": water_text,
    }
    totals = None
    if port_totals_text is not None:
        sources["port_totals.csv"] = port_totals_text
        totals = parse_port_totals(port_totals_text, network)
    return InputData(
        conflicts=conflicts,
        network=network,
        port_totals=totals,
        water=parse_water_mask(water_text),
        sources=sources,
    )


def write_dataset(outdir, inputs: InputData) -> Path:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(inputs.sources.items()):
        (out / name).write_text(text, encoding="utf-8")
    return out


# ---------------------------------------------------------------------------
# Randomized instances for tests
# ---------------------------------------------------------------------------


def random_network(
    rng: np.random.Generator,
    n_free: int = 12,
    n_ports: int = 3,
    extra_edge_prob: float = 0.25,
    bbox: tuple[float, float, float, float] = (0.0, 0.0, 10.0, 10.0),
) -> TradeNetwork:
    """Connected random network: spanning tree over the free nodes, ports
    attached to random free nodes, plus optional extra free-free edges."""
    if n_free < 1 or n_ports < 1:
        raise ValueError("need at least one free node and one port")
    lon0, lat0, lon1, lat1 = bbox
    n = n_free + n_ports
    coords = np.column_stack(
        [rng.uniform(lon0, lon1, size=n), rng.uniform(lat0, lat1, size=n)]
    )
    nodes = []
    for i in range(n_free):
        nodes.append(Node(f"f{i:02d}", f"Free {i:02d}", *coords[i], False))
    for k in range(n_ports):
        nodes.append(Node(f"p{k:02d}", f"Port {k:02d}", *coords[n_free + k], True))
    adj = np.zeros((n, n), dtype=np.int8)
    for i in range(1, n_free):
        j = int(rng.integers(0, i))
        adj[i, j] = adj[j, i] = 1
    for k in range(n_ports):
        p = n_free + k
        j = int(rng.integers(0, n_free))
        adj[p, j] = adj[j, p] = 1
    for i in range(n_free):
        for j in range(i + 1, n_free):
            if not adj[i, j] and rng.random() < extra_edge_prob:
                adj[i, j] = adj[j, i] = 1
    for k in range(n_ports):
        adj[n_free + k, :] = 0
        adj[n_free + k, n_free + k] = 1
    return TradeNetwork(tuple(nodes), adj)


def random_conflict_table(
    rng: np.random.Generator,
    n_records: int = 12,
    years: tuple[int, int] = (1820, 1830),
    bbox: tuple[float, float, float, float] = (0.0, 0.0, 10.0, 10.0),
) -> ConflictTable:
    lon0, lat0, lon1, lat1 = bbox
    records = []
    for k in range(n_records):
        start = int(rng.integers(years[0], years[1] + 1))
        end = min(years[1], start + int(rng.integers(0, 3)))
        code = int(rng.choice([ATTACKED, ATTACKED, DESTROYED, FOUNDED]))
        records.append(
            ConflictRecord(
                city_name=f"r{k}",
                lon=float(rng.uniform(lon0, lon1)),
                lat=float(rng.uniform(lat0, lat1)),
                start_year=start,
                end_year=end,
                intensity_code=code,
            )
        )
    return ConflictTable(tuple(records))
