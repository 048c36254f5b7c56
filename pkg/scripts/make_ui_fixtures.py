#!/usr/bin/env python3
"""Regenerate the web UI test fixtures from live server responses.

Simulates the bundled dataset in memory, mounts the HTTP app over it, and
captures the responses the frontend tests replay: metadata, the trade
network, one conflict year, and three density queries. Every fixture is a
byte-for-byte server response body, so the UI tests exercise exactly what
the real server sends.

Run from the repository root:  python3 scripts/make_ui_fixtures.py
"""
import json
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from originsim.cli import load_inputs
from originsim.pipeline import SimulationConfig, run_all_years
from originsim.server import ArchiveStore, create_app

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "frontend" / "tests" / "fixtures"

COASTAL = ["little_popo", "ouidah", "jakin", "porto_novo", "badagry", "lagos"]

DENSITY_QUERIES = {
    "density_1824_badagry_h075.json": {"year": "1824", "ports": "badagry", "h": "0.75"},
    "density_1828_offmapne_h1.json": {"year": "1828", "ports": "offmap_ne", "h": "1"},
    "density_1820_coastal_h05.json": {"year": "1820", "ports": ",".join(COASTAL), "h": "0.5"},
}


def check_unique_quantized_argmax(doc: dict, name: str) -> None:
    """The fidelity tests recover the argmax from 8-bit pixels; make sure
    quantization cannot produce a tie at the top under the linear ramp."""
    v = np.array(doc["values"])
    lo, hi = v.min(), v.max()
    k = np.rint((v - lo) / (hi - lo) * 255).astype(int)
    top = np.flatnonzero(k == 255)
    if len(top) != 1:
        raise SystemExit(f"{name}: {len(top)} cells quantize to the top color; "
                         "pick a different fixed query")
    if int(top[0]) != int(v.argmax()):
        raise SystemExit(f"{name}: quantized argmax disagrees with value argmax")


def main() -> None:
    inputs = load_inputs(ROOT / "data")
    config = SimulationConfig(
        year_start=1817,
        year_end=1836,
        samples_per_year=600,
        lam=1.55,
        cost_form="ratio",
        grid_resolution=0.1,
        master_seed=42,
    )
    archive = run_all_years(config, inputs)
    app = create_app(store=ArchiveStore(archive, inputs))
    OUT.mkdir(parents=True, exist_ok=True)

    written = []
    with TestClient(app) as client:
        def capture(name: str, path: str, params=None):
            r = client.get(path, params=params)
            r.raise_for_status()
            (OUT / name).write_bytes(r.content)
            written.append(name)
            return r.json()

        capture("meta.json", "/api/meta")
        capture("network.json", "/api/network")
        capture("conflict_1824.json", "/api/conflict", {"year": "1824"})
        for name, params in DENSITY_QUERIES.items():
            doc = capture(name, "/api/density", params)
            if doc["sample_count"] < 5:
                raise SystemExit(f"{name}: only {doc['sample_count']} individuals; "
                                 "fixture too thin to be a meaningful rendering test")
            check_unique_quantized_argmax(doc, name)

    manifest = {
        "generator": "scripts/make_ui_fixtures.py",
        "config": config.to_json_dict(),
        "files": written,
    }
    (OUT / "MANIFEST.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    for name in written:
        print(f"wrote {OUT.relative_to(ROOT) / name}")


if __name__ == "__main__":
    main()
