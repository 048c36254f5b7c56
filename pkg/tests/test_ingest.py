import numpy as np
import pytest

from originsim.grids import GridSpec
from originsim.ingest import (
    ATTACKED,
    DESTROYED,
    FOUNDED,
    ConflictRecord,
    IngestError,
    Node,
    PortTotals,
    TradeNetwork,
    conflicts_active_in_year,
    dedupe_conflict_sites,
    parse_conflict_table,
    parse_port_totals,
    parse_trade_network,
    parse_water_mask,
    serialize_conflict_table,
    serialize_network_edges,
    serialize_network_nodes,
)

CONFLICTS = """name,lon,lat,start_year,end_year,intensity,affiliation
Alpha,1.0,7.0,1820,1822,2,north
Beta,2.0,8.0,1821,1821,3,
Gamma,3.0,9.0,1823,1825,9,
"""

NODES = """id,name,lon,lat,absorbing
a,Town A,0.0,0.0,0
b,Town B,1.0,0.0,0
p,Port P,2.0,0.0,1
"""

EDGES = """from_id,to_id
a,b
b,p
"""


def test_parse_conflicts_happy_path():
    table = parse_conflict_table(CONFLICTS)
    assert len(table) == 3
    assert table.records[0].affiliation == "north"
    assert table.records[1].affiliation is None
    assert table.years_active() == [1820, 1821, 1822]


def test_parse_conflicts_case_insensitive_headers():
    text = CONFLICTS.replace("name,lon,lat", "Name,LON,Lat")
    assert len(parse_conflict_table(text)) == 3


def test_parse_conflicts_column_mapping():
    text = CONFLICTS.replace("name,", "place,")
    table = parse_conflict_table(text, columns={"name": "place"})
    assert table.records[0].city_name == "Alpha"


def test_parse_conflicts_errors_carry_row_numbers():
    bad = CONFLICTS + "Delta,4.0,9.0,1830,1825,2,\n"
    with pytest.raises(IngestError, match="row 4: year range inverted"):
        parse_conflict_table(bad)
    bad = CONFLICTS + "Delta,4.0,9.0,1830,1831,7,\n"
    with pytest.raises(IngestError, match="row 4: intensity code 7"):
        parse_conflict_table(bad)
    with pytest.raises(IngestError, match="missing column"):
        parse_conflict_table("name,lon,lat\nAlpha,1,2\n")


def test_active_in_year_excludes_founded_by_default():
    table = parse_conflict_table(CONFLICTS)
    assert [r.city_name for r in conflicts_active_in_year(table, 1821)] == ["Alpha", "Beta"]
    assert conflicts_active_in_year(table, 1824) == []
    with_founded = conflicts_active_in_year(table, 1824, include_founded=True)
    assert [r.city_name for r in with_founded] == ["Gamma"]


def test_dedupe_keeps_max_intensity_per_site():
    records = [
        ConflictRecord("x", 1.0, 1.0, 1820, 1820, ATTACKED),
        ConflictRecord("x2", 1.0, 1.0, 1820, 1820, DESTROYED),
        ConflictRecord("y", 2.0, 2.0, 1820, 1820, FOUNDED),
    ]
    sites, values = dedupe_conflict_sites(records, founded_intensity=0.5)
    lookup = {tuple(s): v for s, v in zip(sites, values)}
    assert lookup == {(1.0, 1.0): 3.0, (2.0, 2.0): 0.5}


def test_parse_network_edge_list():
    net = parse_trade_network(NODES, EDGES)
    assert net.n == 3
    assert net.absorbing_ids() == ["p"]
    assert net.adjacency[0, 1] == net.adjacency[1, 0] == 1
    # absorbing row is the self-loop only
    assert net.adjacency[2].tolist() == [0, 0, 1]
    assert net.undirected_edges() == [(0, 1), (1, 2)]


def test_parse_network_matrix_form():
    matrix = "0,1,0\n1,0,1\n0,1,1\n"
    net = parse_trade_network(NODES, matrix)
    assert net.adjacency[0, 1] == 1
    assert net.adjacency[2].tolist() == [0, 0, 1]


def test_parse_network_matrix_asymmetry_rejected():
    matrix = "0,1,0\n0,0,1\n0,1,1\n"
    with pytest.raises(IngestError, match="asymmetric full-matrix input"):
        parse_trade_network(NODES, matrix)


def test_parse_network_unreachable_absorbing():
    nodes = NODES + "q,Island Q,9.0,9.0,0\n"
    with pytest.raises(IngestError, match="unreachable absorbing state: q"):
        parse_trade_network(nodes, EDGES)


def test_parse_network_unknown_edge_id():
    with pytest.raises(IngestError, match="unknown id 'zz'"):
        parse_trade_network(NODES, "from_id,to_id\na,zz\n")


def test_neighbors_sorted_by_id():
    nodes = "id,name,lon,lat,absorbing\n10,N10,0,0,0\n2,N2,1,0,0\nhub,Hub,0,1,0\np,P,1,1,1\n"
    edges = "from_id,to_id\nhub,10\nhub,2\nhub,p\n10,p\n2,p\n"
    net = parse_trade_network(nodes, edges)
    hub = net.index_of("hub")
    ids = [net.nodes[j].id for j in net.neighbors(hub)]
    # numeric ids order numerically and come before alphanumeric ones
    assert ids == ["2", "10", "p"]


def test_port_totals_resolution_and_errors():
    net = parse_trade_network(NODES, EDGES)
    totals = parse_port_totals("port,year,count\np,1820,5\nPort P,,7\n", net)
    assert totals.aggregate() == {"p": 12}
    assert totals.grand_total() == 12
    with pytest.raises(IngestError, match="unknown port 'zz'"):
        parse_port_totals("port,count\nzz,5\n", net)
    with pytest.raises(IngestError, match="'a' is not a point of sale"):
        parse_port_totals("port,count\na,5\n", net)
    with pytest.raises(IngestError, match="negative count"):
        parse_port_totals("port,count\np,-2\n", net)


def test_water_mask_even_odd_with_hole():
    doc = """{
      "type": "Polygon",
      "coordinates": [
        [[0,0],[4,0],[4,4],[0,4],[0,0]],
        [[1,1],[3,1],[3,3],[1,3],[1,1]]
      ]
    }"""
    mask = parse_water_mask(doc)
    assert bool(mask.contains(0.5, 0.5)[0])  # inside outer ring
    assert not bool(mask.contains(2.0, 2.0)[0])  # inside the hole: land
    assert not bool(mask.contains(5.0, 5.0)[0])  # outside entirely
    grid = GridSpec.from_bbox(0, 0, 4, 4, 1.0)
    cells = mask.water_cells(grid)
    assert cells.shape == (4, 4)
    assert bool(cells[0, 0]) and not bool(cells[1, 1])


def test_water_mask_feature_collection_and_errors():
    with pytest.raises(IngestError, match="malformed mask JSON"):
        parse_water_mask("{not json")
    with pytest.raises(IngestError, match="non-polygon"):
        parse_water_mask('{"type": "Feature", "geometry": {"type": "Point", "coordinates": [0,0]}}')


def test_serialize_round_trips(inputs):
    table2 = parse_conflict_table(serialize_conflict_table(inputs.conflicts))
    assert table2 == inputs.conflicts
    net = inputs.network
    net2 = parse_trade_network(serialize_network_nodes(net), serialize_network_edges(net))
    assert net2.nodes == net.nodes
    assert (net2.adjacency == net.adjacency).all()


def test_network_constructor_validates_directly():
    nodes = (Node("a", "A", 0, 0, False), Node("p", "P", 1, 0, True))
    with pytest.raises(IngestError, match="unreachable absorbing state"):
        TradeNetwork(nodes, np.array([[0, 0], [0, 1]]))
    net = TradeNetwork(nodes, np.array([[0, 1], [0, 1]]))
    assert net.absorbing_ids() == ["p"]


def test_port_totals_aggregate_sums_years():
    totals = PortTotals((("p", 1820, 3), ("p", 1821, 4), ("q", None, 1)))
    assert totals.aggregate() == {"p": 7, "q": 1}
