"""Parsing and validation of the four external datasets.

Inputs are delimited text with a header row (conflicts, network nodes,
network edges, port totals) and GeoJSON for the water mask. Headers are
matched case-insensitively; a column-mapping config can rename them.
All parsed objects are immutable value objects.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

__all__ = [
    "ATTACKED",
    "DESTROYED",
    "FOUNDED",
    "IngestError",
    "ConflictRecord",
    "ConflictTable",
    "Node",
    "TradeNetwork",
    "PortTotals",
    "WaterMask",
    "parse_conflict_table",
    "parse_trade_network",
    "parse_port_totals",
    "parse_water_mask",
    "conflicts_active_in_year",
    "dedupe_conflict_sites",
    "serialize_conflict_table",
    "serialize_network_nodes",
    "serialize_network_edges",
]

ATTACKED = 2
DESTROYED = 3
FOUNDED = 9

_VALID_CODES = (ATTACKED, DESTROYED, FOUNDED)


class IngestError(ValueError):
    """Raised when an input file violates its schema or an invariant."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConflictRecord:
    city_name: str
    lon: float
    lat: float
    start_year: int
    end_year: int
    intensity_code: int
    affiliation: Optional[str] = None
    source: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "lon", float(self.lon))
        object.__setattr__(self, "lat", float(self.lat))
        if not (np.isfinite(self.lon) and np.isfinite(self.lat)):
            raise IngestError(f"non-finite coordinates for {self.city_name!r}")
        if self.start_year > self.end_year:
            raise IngestError(f"year range inverted for {self.city_name!r}")
        if self.intensity_code not in _VALID_CODES:
            raise IngestError(
                f"intensity code {self.intensity_code} not in {_VALID_CODES}"
            )

    @property
    def location(self) -> tuple[float, float]:
        return (self.lon, self.lat)


@dataclass(frozen=True)
class ConflictTable:
    records: tuple[ConflictRecord, ...]

    def __len__(self):
        return len(self.records)

    def years_active(self) -> list[int]:
        """Sorted years with at least one active conflict (codes 2/3)."""
        years = set()
        for r in self.records:
            if r.intensity_code in (ATTACKED, DESTROYED):
                years.update(range(r.start_year, r.end_year + 1))
        return sorted(years)


@dataclass(frozen=True)
class Node:
    id: str
    name: str
    lon: float
    lat: float
    is_absorbing: bool

    def __post_init__(self):
        object.__setattr__(self, "lon", float(self.lon))
        object.__setattr__(self, "lat", float(self.lat))
        if not (np.isfinite(self.lon) and np.isfinite(self.lat)):
            raise IngestError(f"non-finite coordinates for node {self.id!r}")


def _id_sort_key(node_id: str):
    # All-digit ids order numerically so the documented "lowest id" tie-break
    # matches intuition for numbered nodes.
    return (0, int(node_id), "") if node_id.isdigit() else (1, 0, node_id)


@dataclass(frozen=True)
class TradeNetwork:
    nodes: tuple[Node, ...]
    adjacency: np.ndarray  # (n, n) of 0/1, absorbing rows self-loop only

    def __post_init__(self):
        object.__setattr__(self, "adjacency", np.asarray(self.adjacency, dtype=np.int8))
        validate_network(self)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def index_of(self, node_id: str) -> int:
        try:
            return self._index[node_id]
        except AttributeError:
            object.__setattr__(self, "_index", {nd.id: i for i, nd in enumerate(self.nodes)})
            return self._index[node_id]

    def node(self, node_id: str) -> Node:
        return self.nodes[self.index_of(node_id)]

    def coords(self) -> np.ndarray:
        return np.array([[nd.lon, nd.lat] for nd in self.nodes], dtype=float)

    def absorbing_mask(self) -> np.ndarray:
        return np.array([nd.is_absorbing for nd in self.nodes], dtype=bool)

    def absorbing_ids(self) -> list[str]:
        return [nd.id for nd in self.nodes if nd.is_absorbing]

    def neighbors(self, index: int) -> np.ndarray:
        """Successor node indices reachable in one move, sorted by node id."""
        nbrs = np.nonzero(self.adjacency[index])[0]
        nbrs = [j for j in nbrs if j != index]
        return np.array(
            sorted(nbrs, key=lambda j: _id_sort_key(self.nodes[j].id)), dtype=int
        )

    def undirected_edges(self) -> list[tuple[int, int]]:
        """Unique movement edges (i < j by index), self-loops excluded."""
        out = set()
        for i in range(self.n):
            for j in np.nonzero(self.adjacency[i])[0]:
                if j != i:
                    out.add((i, int(j)) if i < j else (int(j), i))
        return sorted(out)


def validate_network(net: TradeNetwork) -> None:
    n = len(net.nodes)
    adj = net.adjacency
    if adj.shape != (n, n):
        raise IngestError(f"adjacency shape {adj.shape} does not match {n} nodes")
    ids = [nd.id for nd in net.nodes]
    if len(set(ids)) != n:
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise IngestError(f"duplicate node ids: {dupes}")
    absorbing = net.absorbing_mask()
    for i in np.nonzero(absorbing)[0]:
        row = adj[i]
        if row[i] != 1 or row.sum() != 1:
            raise IngestError(
                f"absorbing node {ids[i]!r} must have exactly one self-loop edge"
            )
    free = ~absorbing
    sub = adj[np.ix_(free, free)]
    if not np.array_equal(sub, sub.T):
        raise IngestError("adjacency is not symmetric among non-absorbing nodes")
    # Every non-absorbing node must reach an absorbing one via "may move" edges.
    reached = set(np.nonzero(absorbing)[0])
    frontier = list(reached)
    incoming = [np.nonzero(adj[:, j])[0] for j in range(n)]
    while frontier:
        j = frontier.pop()
        for i in incoming[j]:
            i = int(i)
            if i not in reached and not absorbing[i]:
                reached.add(i)
                frontier.append(i)
    stranded = [ids[i] for i in range(n) if i not in reached]
    if stranded:
        raise IngestError(f"unreachable absorbing state: {stranded[0]}")
    if not absorbing.any():
        raise IngestError("network has no absorbing nodes")


@dataclass(frozen=True)
class PortTotals:
    entries: tuple[tuple[str, Optional[int], int], ...]  # (port_id, year, count)

    def aggregate(self) -> dict[str, int]:
        totals: dict[str, int] = {}
        for port_id, _year, count in self.entries:
            totals[port_id] = totals.get(port_id, 0) + count
        return totals

    def grand_total(self) -> int:
        return sum(c for _, _, c in self.entries)


@dataclass(frozen=True)
class WaterMask:
    rings: tuple[tuple[tuple[float, float], ...], ...]

    def __post_init__(self):
        for ring in self.rings:
            if len(ring) < 4 or ring[0] != ring[-1]:
                raise IngestError("each mask ring needs >= 3 vertices and closure")

    def contains(self, lon, lat) -> np.ndarray:
        """Even-odd water test, vectorized over points. Holes flip parity."""
        lon = np.atleast_1d(np.asarray(lon, dtype=float))
        lat = np.atleast_1d(np.asarray(lat, dtype=float))
        inside = np.zeros(lon.shape, dtype=bool)
        for ring in self.rings:
            pts = np.asarray(ring)
            x1, y1 = pts[:-1, 0], pts[:-1, 1]
            x2, y2 = pts[1:, 0], pts[1:, 1]
            for ex1, ey1, ex2, ey2 in zip(x1, y1, x2, y2):
                if ey1 == ey2:
                    continue
                crosses = (ey1 > lat) != (ey2 > lat)
                with np.errstate(invalid="ignore"):
                    xint = ex1 + (lat - ey1) * (ex2 - ex1) / (ey2 - ey1)
                inside ^= crosses & (lon < xint)
        return inside

    def water_cells(self, grid) -> np.ndarray:
        """Boolean (ny, nx) array: True where the cell center lies in water."""
        centers = grid.cell_centers()
        return self.contains(centers[:, 0], centers[:, 1]).reshape(grid.ny, grid.nx)


# ---------------------------------------------------------------------------
# Parsers
# ---------------------------------------------------------------------------


def _reader(text: str):
    return csv.reader(io.StringIO(text), skipinitialspace=True)


def _header_map(header: Sequence[str], required, optional=(), columns=None):
    """Resolve canonical column names to indices, case-insensitively."""
    columns = {k.lower(): v.lower() for k, v in (columns or {}).items()}
    lookup = {h.strip().lower(): i for i, h in enumerate(header)}
    out = {}
    for canon in list(required) + list(optional):
        actual = columns.get(canon, canon)
        if actual in lookup:
            out[canon] = lookup[actual]
        elif canon in required:
            raise IngestError(f"missing column {canon!r}")
    return out


def _parse_float(value: str, what: str, row: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise IngestError(f"row {row}: unparsable {what} {value!r}") from None


def _parse_int(value: str, what: str, row: int) -> int:
    try:
        return int(float(value)) if float(value).is_integer() else int(value)
    except ValueError:
        raise IngestError(f"row {row}: unparsable {what} {value!r}") from None


def parse_conflict_table(text: str, columns: Mapping[str, str] | None = None) -> ConflictTable:
    """Parse the conflict CSV (name, lon, lat, start_year, end_year, intensity)."""
    rows = list(_reader(text))
    if not rows:
        raise IngestError("empty conflict file")
    cols = _header_map(
        rows[0],
        required=("name", "lon", "lat", "start_year", "end_year", "intensity"),
        optional=("affiliation", "source"),
        columns=columns,
    )
    records = []
    for idx, row in enumerate(rows[1:], start=1):
        if not any(cell.strip() for cell in row):
            continue

        def cell(canon, default=None):
            i = cols.get(canon)
            if i is None or i >= len(row):
                return default
            v = row[i].strip()
            return v if v else default

        start = _parse_int(cell("start_year", ""), "start_year", idx)
        end = _parse_int(cell("end_year", ""), "end_year", idx)
        if start > end:
            raise IngestError(f"row {idx}: year range inverted ({start} > {end})")
        code = _parse_int(cell("intensity", ""), "intensity", idx)
        if code not in _VALID_CODES:
            raise IngestError(f"row {idx}: intensity code {code} not in {_VALID_CODES}")
        records.append(
            ConflictRecord(
                city_name=cell("name", ""),
                lon=_parse_float(cell("lon", ""), "lon", idx),
                lat=_parse_float(cell("lat", ""), "lat", idx),
                start_year=start,
                end_year=end,
                intensity_code=code,
                affiliation=cell("affiliation"),
                source=cell("source"),
            )
        )
    return ConflictTable(tuple(records))


def parse_trade_network(nodes_text: str, edges_text: str) -> TradeNetwork:
    """Parse node and edge files into a validated TradeNetwork.

    Edges may be an ``from_id,to_id`` list (symmetrized) or a full n x n
    0/1 matrix in node order (must already be symmetric among non-absorbing
    nodes). Absorbing rows are always rewritten to the single self-loop.
    """
    rows = list(_reader(nodes_text))
    if not rows:
        raise IngestError("empty nodes file")
    cols = _header_map(rows[0], required=("id", "name", "lon", "lat", "absorbing"))
    nodes = []
    for idx, row in enumerate(rows[1:], start=1):
        if not any(cell.strip() for cell in row):
            continue
        flag = row[cols["absorbing"]].strip()
        if flag not in ("0", "1"):
            raise IngestError(f"row {idx}: absorbing flag must be 0 or 1, got {flag!r}")
        nodes.append(
            Node(
                id=row[cols["id"]].strip(),
                name=row[cols["name"]].strip(),
                lon=_parse_float(row[cols["lon"]], "lon", idx),
                lat=_parse_float(row[cols["lat"]], "lat", idx),
                is_absorbing=flag == "1",
            )
        )
    n = len(nodes)
    index = {nd.id: i for i, nd in enumerate(nodes)}
    if len(index) != n:
        raise IngestError("duplicate node ids in nodes file")

    edge_rows = [r for r in _reader(edges_text) if any(c.strip() for c in r)]
    adj = np.zeros((n, n), dtype=np.int8)
    if edge_rows and _looks_like_edge_list(edge_rows[0]):
        cols_e = _header_map(edge_rows[0], required=("from_id", "to_id"))
        for idx, row in enumerate(edge_rows[1:], start=1):
            a, b = row[cols_e["from_id"]].strip(), row[cols_e["to_id"]].strip()
            for nid in (a, b):
                if nid not in index:
                    raise IngestError(f"row {idx}: edge references unknown id {nid!r}")
            i, j = index[a], index[b]
            adj[i, j] = adj[j, i] = 1
    else:
        if len(edge_rows) != n:
            raise IngestError(f"adjacency matrix must have {n} rows, found {len(edge_rows)}")
        for i, row in enumerate(edge_rows):
            vals = [v.strip() for v in row if v.strip() != ""]
            if len(vals) != n:
                raise IngestError(f"matrix row {i} has {len(vals)} entries, expected {n}")
            for j, v in enumerate(vals):
                if v not in ("0", "1"):
                    raise IngestError(f"matrix entry ({i},{j}) must be 0 or 1, got {v!r}")
                adj[i, j] = int(v)
        free = [i for i, nd in enumerate(nodes) if not nd.is_absorbing]
        sub = adj[np.ix_(free, free)]
        if not np.array_equal(sub, sub.T):
            raise IngestError("asymmetric full-matrix input among non-absorbing nodes")

    for i, nd in enumerate(nodes):
        if nd.is_absorbing:
            adj[i, :] = 0
            adj[i, i] = 1
        else:
            adj[i, i] = 0
    return TradeNetwork(tuple(nodes), adj)


def _looks_like_edge_list(header_row) -> bool:
    cells = {c.strip().lower() for c in header_row}
    return "from_id" in cells and "to_id" in cells


def parse_port_totals(text: str, network: TradeNetwork) -> PortTotals:
    """Parse observed departures per port (port, year?, count)."""
    rows = list(_reader(text))
    if not rows:
        raise IngestError("empty port totals file")
    cols = _header_map(rows[0], required=("port", "count"), optional=("year",))
    by_id = {nd.id: nd for nd in network.nodes}
    by_name = {nd.name.lower(): nd for nd in network.nodes}
    entries = []
    for idx, row in enumerate(rows[1:], start=1):
        if not any(cell.strip() for cell in row):
            continue
        key = row[cols["port"]].strip()
        node = by_id.get(key) or by_name.get(key.lower())
        if node is None:
            raise IngestError(f"row {idx}: unknown port {key!r}")
        if not node.is_absorbing:
            raise IngestError(f"row {idx}: {key!r} is not a point of sale")
        year = None
        if "year" in cols and cols["year"] < len(row) and row[cols["year"]].strip():
            year = _parse_int(row[cols["year"]], "year", idx)
        count = _parse_int(row[cols["count"]], "count", idx)
        if count < 0:
            raise IngestError(f"row {idx}: negative count {count}")
        entries.append((node.id, year, count))
    return PortTotals(tuple(entries))


def parse_water_mask(geojson_text: str) -> WaterMask:
    """Parse polygon/multipolygon GeoJSON into a flat list of closed rings."""
    try:
        doc = json.loads(geojson_text)
    except json.JSONDecodeError as exc:
        raise IngestError(f"malformed mask JSON: {exc}") from None
    rings: list[tuple[tuple[float, float], ...]] = []

    def add_polygon(coords):
        for ring in coords:
            pts = [(float(x), float(y)) for x, y in ring]
            if len(pts) < 3:
                raise IngestError("mask ring with fewer than 3 vertices")
            if pts[0] != pts[-1]:
                pts.append(pts[0])
            rings.append(tuple(pts))

    def add_geometry(geom):
        gtype = geom.get("type")
        if gtype == "Polygon":
            add_polygon(geom["coordinates"])
        elif gtype == "MultiPolygon":
            for poly in geom["coordinates"]:
                add_polygon(poly)
        else:
            raise IngestError(f"non-polygon feature type {gtype!r}")

    dtype = doc.get("type")
    if dtype == "FeatureCollection":
        for feat in doc.get("features", []):
            add_geometry(feat.get("geometry") or {})
    elif dtype == "Feature":
        add_geometry(doc.get("geometry") or {})
    elif dtype in ("Polygon", "MultiPolygon"):
        add_geometry(doc)
    else:
        raise IngestError(f"unsupported mask document type {dtype!r}")
    return WaterMask(tuple(rings))


# ---------------------------------------------------------------------------
# Queries and serialization
# ---------------------------------------------------------------------------


def conflicts_active_in_year(
    table: ConflictTable, year: int, include_founded: bool = False
) -> list[ConflictRecord]:
    """Records whose year interval covers `year`. Code 9 (founded) is not
    conflict and is excluded unless explicitly requested."""
    codes = (ATTACKED, DESTROYED, FOUNDED) if include_founded else (ATTACKED, DESTROYED)
    return [
        r
        for r in table.records
        if r.start_year <= year <= r.end_year and r.intensity_code in codes
    ]


def dedupe_conflict_sites(
    records: Sequence[ConflictRecord], founded_intensity: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """Kriging inputs: unique site coordinates with max intensity per site.

    Exact coordinate duplicates would make the covariance matrix singular
    beyond what the nugget absorbs, so the strongest record wins.
    """
    best: dict[tuple[float, float], float] = {}
    for r in records:
        y = founded_intensity if r.intensity_code == FOUNDED else float(r.intensity_code)
        key = (r.lon, r.lat)
        best[key] = max(best.get(key, -np.inf), y)
    if not best:
        return np.zeros((0, 2)), np.zeros(0)
    items = list(best.items())
    sites = np.array([k for k, _ in items], dtype=float)
    values = np.array([v for _, v in items], dtype=float)
    return sites, values


def serialize_conflict_table(table: ConflictTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "lon", "lat", "start_year", "end_year", "intensity", "affiliation", "source"])
    for r in table.records:
        w.writerow(
            [r.city_name, repr(r.lon), repr(r.lat), r.start_year, r.end_year,
             r.intensity_code, r.affiliation or "", r.source or ""]
        )
    return buf.getvalue()


def serialize_network_nodes(net: TradeNetwork) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "name", "lon", "lat", "absorbing"])
    for nd in net.nodes:
        w.writerow([nd.id, nd.name, repr(nd.lon), repr(nd.lat), int(nd.is_absorbing)])
    return buf.getvalue()


def serialize_network_edges(net: TradeNetwork) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["from_id", "to_id"])
    for i, j in net.undirected_edges():
        w.writerow([net.nodes[i].id, net.nodes[j].id])
    return buf.getvalue()
