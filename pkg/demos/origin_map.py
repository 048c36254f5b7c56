#!/usr/bin/env python3
"""Library tour: simulate a few years, then ask where the people sold at
one port most plausibly came from, and sketch the answer in the terminal.

Run from the repository root:  python3 demos/origin_map.py
"""
from pathlib import Path

import numpy as np

from originsim.cli import load_inputs
from originsim.density import conditional_origin_map
from originsim.pipeline import SimulationConfig, run_all_years

SHADES = " .:-=+*#%@"

ROOT = Path(__file__).resolve().parent.parent


def ascii_map(values: np.ndarray) -> str:
    # row 0 is the southernmost band, so print rows last-to-first
    top = values.max()
    lines = []
    for row in values[::-1]:
        scaled = (row / top * (len(SHADES) - 1)).astype(int) if top > 0 else row.astype(int)
        lines.append("".join(SHADES[k] for k in scaled))
    return "\n".join(lines)


def main():
    inputs = load_inputs(ROOT / "data")
    config = SimulationConfig(
        year_start=1822,
        year_end=1826,
        samples_per_year=800,
        lam=1.55,
        cost_form="ratio",
        grid_resolution=0.2,
        master_seed=42,
    )
    archive = run_all_years(config, inputs)
    print(f"simulated years {archive.years_available()}, "
          f"{config.samples_per_year} individuals each\n")

    for ports in (["badagry"], ["offmap_ne"]):
        m = conditional_origin_map(
            archive, years=[1824], ports=ports, h=0.75, water=inputs.water
        )
        print(f"origins of individuals exiting at {ports[0]} in 1824 "
              f"({m.sample_count} simulated individuals, land mass sums to "
              f"{m.values.sum():.6f}):")
        print(ascii_map(m.values))
        j, i = np.unravel_index(np.argmax(m.values), m.values.shape)
        lon = m.grid.lon_min + (i + 0.5) * m.grid.resolution
        lat = m.grid.lat_min + (j + 0.5) * m.grid.resolution
        print(f"most likely origin cell: ({lon:.2f}E, {lat:.2f}N)\n")


if __name__ == "__main__":
    main()
