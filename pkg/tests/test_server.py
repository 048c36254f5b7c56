import json
from importlib import resources

import jsonschema
import pytest
from fastapi.testclient import TestClient

from originsim.pipeline import save_archive
from originsim.server import ArchiveStore, create_app


def load_schema(name: str) -> dict:
    ref = resources.files("originsim") / "schemas" / f"{name}.schema.json"
    return json.loads(ref.read_text(encoding="utf-8"))


def check(name: str, doc) -> None:
    jsonschema.validate(doc, load_schema(name), cls=jsonschema.Draft202012Validator)


@pytest.fixture(scope="module")
def client(tmp_path_factory, small_archive, inputs):
    adir = tmp_path_factory.mktemp("srv") / "arch"
    save_archive(small_archive, adir, inputs)
    app = create_app(store=ArchiveStore.from_dir(adir))
    with TestClient(app) as c:
        yield c


@pytest.fixture(scope="module")
def a_port(client):
    return client.get("/api/meta").json()["ports"][0]["id"]


def test_meta_schema_and_content(client, inputs):
    r = client.get("/api/meta")
    assert r.status_code == 200
    doc = r.json()
    check("meta", doc)
    assert doc["years"] == [1822, 1823, 1824, 1825, 1826]
    assert {p["id"] for p in doc["ports"]} == set(inputs.network.absorbing_ids())
    classes = {p["id"]: p["class"] for p in doc["ports"]}
    assert classes["offmap_ne"] == "off-map"
    assert classes["lagos"] == "coastal"
    grid = doc["grid"]
    assert grid["lon_min"] < grid["lon_max"]
    assert doc["bandwidth"]["min"] < doc["bandwidth"]["default"] < doc["bandwidth"]["max"]


def test_density_schema_and_mass(client, a_port, inputs):
    r = client.get("/api/density", params={"year": 1823, "ports": "all-coastal"})
    assert r.status_code == 200
    doc = r.json()
    check("density", doc)
    assert doc["nx"] * doc["ny"] == len(doc["values"])
    assert sum(doc["values"]) == pytest.approx(1.0, abs=1e-6)
    assert all(v >= 0 for v in doc["values"])
    assert doc["condition"]["year"] == 1823
    assert doc["sample_count"] > 0


def test_density_errors(client):
    assert client.get("/api/density", params={"ports": "all-coastal"}).status_code == 400
    assert client.get("/api/density", params={"year": "abc", "ports": "all-coastal"}).status_code == 400
    assert client.get("/api/density", params={"year": 1823}).status_code == 400
    r = client.get("/api/density", params={"year": 1799, "ports": "all-coastal"})
    assert r.status_code == 404
    r = client.get("/api/density", params={"year": 1823, "ports": "atlantis"})
    assert r.status_code == 404
    assert "unknown port" in r.json()["detail"]
    r = client.get("/api/density", params={"year": 1823, "ports": "all-coastal", "h": "99"})
    assert r.status_code == 400
    r = client.get("/api/density", params={"year": 1823, "ports": "all-coastal", "h": "zzz"})
    assert r.status_code == 400


def test_density_422_when_no_traces(client, small_archive):
    exits = {tr.exit_node for tr in small_archive.traces()}
    ports = set(
        p["id"] for p in client.get("/api/meta").json()["ports"]
    )
    unused = sorted(ports - exits)
    if not unused:
        pytest.skip("every port received flow in this archive")
    r = client.get("/api/density", params={"year": 1823, "ports": unused[0]})
    assert r.status_code == 422
    assert "no simulated individuals" in r.json()["detail"]


def test_density_repeat_is_byte_identical(client):
    q = {"year": 1824, "ports": "off-map", "h": "1.5"}
    first = client.get("/api/density", params=q)
    second = client.get("/api/density", params=q)
    assert first.status_code in (200, 422)
    if first.status_code == 200:
        assert first.content == second.content


def test_conflict_schema_and_recompute(client, small_archive):
    r = client.get("/api/conflict", params={"year": 1823})
    assert r.status_code == 200
    doc = r.json()
    check("conflict", doc)
    assert doc["year"] == 1823
    assert all(p["start_year"] <= 1823 <= p["end_year"] for p in doc["points"])
    # a year with conflict data but no simulated traces still renders
    outside = client.get("/api/conflict", params={"year": 1830})
    assert outside.status_code == 200
    check("conflict", outside.json())
    assert client.get("/api/conflict", params={"year": 1700}).status_code == 404
    assert client.get("/api/conflict", params={"year": "x"}).status_code == 400


def test_network_schema(client, inputs):
    r = client.get("/api/network")
    assert r.status_code == 200
    doc = r.json()
    check("network", doc)
    assert len(doc["nodes"]) == inputs.network.n
    ids = {n["id"] for n in doc["nodes"]}
    for a, b in doc["edges"]:
        assert a in ids and b in ids
    absorbing = {n["id"] for n in doc["nodes"] if n["absorbing"]}
    assert absorbing == set(inputs.network.absorbing_ids())


def test_sankey_schema_and_filters(client, a_port):
    r = client.get("/api/sankey", params={"ports": a_port})
    assert r.status_code == 200
    doc = r.json()
    check("sankey", doc)
    assert doc["ports"] == [a_port]
    ranged = client.get("/api/sankey", params={"ports": a_port, "years": "1822:1824"})
    assert ranged.status_code == 200
    assert ranged.json()["years"] == [1822, 1823, 1824]
    assert client.get("/api/sankey", params={"ports": a_port, "years": "1799"}).status_code == 404
    assert client.get("/api/sankey", params={"ports": a_port, "years": "1824:1822"}).status_code == 400
    assert client.get("/api/sankey", params={"years": "1823"}).status_code == 400


def test_store_not_loaded_is_503():
    app = create_app()
    with TestClient(app) as c:
        for path in ("/api/meta", "/api/network"):
            r = c.get(path)
            assert r.status_code == 503
        r = c.get("/api/density", params={"year": 1823, "ports": "x"})
        assert r.status_code == 503


def test_cors_headers_for_get(client):
    r = client.get("/api/meta", headers={"Origin": "http://localhost:5173"})
    assert r.headers.get("access-control-allow-origin") == "*"
    pre = client.options(
        "/api/meta",
        headers={
            "Origin": "http://localhost:5173",
            "Access-Control-Request-Method": "GET",
        },
    )
    assert pre.status_code == 200
    assert "GET" in pre.headers.get("access-control-allow-methods", "")
