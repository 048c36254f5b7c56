"""Per-year orchestration and the on-disk archive.

One simulated year: krige the year's conflicts, normalize to a density,
sample capture locations, route each individual through its own MDP, and
record the traces. Years are independent; every stochastic draw comes from
a substream keyed by (master seed, year, purpose-or-individual), so the
archive is reproducible regardless of execution order.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .grids import GridSpec, read_grid, write_grid
from .ingest import (
    ConflictTable,
    PortTotals,
    TradeNetwork,
    WaterMask,
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
from .streams import substream
from .surface import (
    CapturePoint,
    ConflictDensity,
    ConflictSurface,
    MaternParams,
    krige_predict,
    normalize_surface,
    sample_captures,
)
from .transit import (
    RewardDistribution,
    TransitTrace,
    build_mdp,
    draw_terminal_rewards,
    nearest_nodes,
    policy_iteration,
    shortest_hop_policy,
    simulate_trajectory,
)

__all__ = [
    "SimulationConfig",
    "InputData",
    "YearSimulation",
    "SimulationArchive",
    "FlowTable",
    "NoActiveConflictsError",
    "resolve_grid",
    "simulate_year",
    "run_all_years",
    "sankey_flows",
    "save_archive",
    "load_archive",
]


class NoActiveConflictsError(ValueError):
    """The requested year has no active conflict records."""

    def __init__(self, year: int):
        super().__init__(f"no active conflicts in year {year}")
        self.year = year


@dataclass(frozen=True)
class SimulationConfig:
    year_start: int
    year_end: int
    samples_per_year: int = 1000
    lam: float = 1.55
    reward_mean: float = 10.0
    reward_variance: float = 0.1
    matern: MaternParams = field(default_factory=MaternParams)
    grid: Optional[GridSpec] = None  # None: network bbox + margin at grid_resolution
    grid_margin: float = 0.5
    grid_resolution: float = 0.05
    master_seed: int = 0
    cost_form: str = "literal"
    move_success: float = 0.98
    include_founded: bool = False
    founded_intensity: float = 1.0

    def __post_init__(self):
        if self.year_start > self.year_end:
            raise ValueError("year range is empty")
        if self.samples_per_year < 1:
            raise ValueError("samples_per_year must be >= 1")

    @property
    def years(self) -> range:
        return range(self.year_start, self.year_end + 1)

    def to_json_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["matern"] = dataclasses.asdict(self.matern)
        out["grid"] = dataclasses.asdict(self.grid) if self.grid else None
        return out

    @classmethod
    def from_json_dict(cls, d: dict) -> "SimulationConfig":
        d = dict(d)
        d["matern"] = MaternParams(**d["matern"])
        d["grid"] = GridSpec(**d["grid"]) if d.get("grid") else None
        return cls(**d)


@dataclass(frozen=True)
class InputData:
    """Parsed inputs plus the raw source texts they came from."""

    conflicts: ConflictTable
    network: TradeNetwork
    port_totals: Optional[PortTotals] = None
    water: Optional[WaterMask] = None
    sources: dict = field(default_factory=dict)  # filename -> raw text


@dataclass(frozen=True)
class YearSimulation:
    year: int
    density: ConflictDensity
    traces: tuple[TransitTrace, ...]
    surface: Optional[ConflictSurface] = None


@dataclass(frozen=True)
class SimulationArchive:
    config: SimulationConfig
    years: tuple[YearSimulation, ...]
    skipped_years: tuple[int, ...] = ()

    def years_available(self) -> list[int]:
        return [ys.year for ys in self.years]

    def year(self, year: int) -> YearSimulation:
        for ys in self.years:
            if ys.year == year:
                return ys
        raise KeyError(f"year {year} not in archive")

    def traces(
        self,
        years: Optional[Iterable[int]] = None,
        ports: Optional[Iterable[str]] = None,
    ) -> list[TransitTrace]:
        year_set = None if years is None else set(years)
        port_set = None if ports is None else set(ports)
        out = []
        for ys in self.years:
            if year_set is not None and ys.year not in year_set:
                continue
            for tr in ys.traces:
                if port_set is None or tr.exit_node in port_set:
                    out.append(tr)
        return out


@dataclass(frozen=True)
class FlowTable:
    rows: tuple[tuple[str, str, int], ...]  # (from_node, to_node, count)


def resolve_grid(config: SimulationConfig, network: TradeNetwork) -> GridSpec:
    if config.grid is not None:
        return config.grid
    coords = network.coords()
    m = config.grid_margin
    return GridSpec.from_bbox(
        coords[:, 0].min() - m,
        coords[:, 1].min() - m,
        coords[:, 0].max() + m,
        coords[:, 1].max() + m,
        config.grid_resolution,
    )


def year_density(
    year: int, config: SimulationConfig, inputs: InputData
) -> tuple[ConflictSurface, ConflictDensity]:
    """Kriged surface and normalized density for one year's conflicts."""
    active = conflicts_active_in_year(
        inputs.conflicts, year, include_founded=config.include_founded
    )
    if not active:
        raise NoActiveConflictsError(year)
    sites, intensities = dedupe_conflict_sites(active, config.founded_intensity)
    grid = resolve_grid(config, inputs.network)
    surface = krige_predict(sites, intensities, config.matern, grid)
    return surface, normalize_surface(surface)


def simulate_year(year: int, config: SimulationConfig, inputs: InputData) -> YearSimulation:
    surface, density = year_density(year, config, inputs)
    seed = config.master_seed
    captures = sample_captures(
        density, config.samples_per_year, substream(seed, year, "capture"), year
    )
    starts = nearest_nodes([c.location for c in captures], inputs.network)
    n_abs = int(inputs.network.absorbing_mask().sum())
    rewards = RewardDistribution.equal(n_abs, config.reward_mean, config.reward_variance)
    base = build_mdp(
        inputs.network,
        density,
        config.lam,
        rewards.mean,
        cost_form=config.cost_form,
        move_success=config.move_success,
    )
    warm = shortest_hop_policy(base)
    fixed_policy = policy_iteration(base, warm) if config.reward_variance == 0 else None
    traces = []
    for i, (cap, start) in enumerate(zip(captures, starts)):
        rng = substream(seed, year, i)
        r_t = draw_terminal_rewards(rewards, rng)
        mdp = base.with_rewards(r_t)
        if fixed_policy is not None:
            policy = fixed_policy  # identical rewards, identical policy
        else:
            policy = policy_iteration(mdp, init_policy=warm)
            warm = policy  # warm start; the fixed point is init-independent
        traces.append(simulate_trajectory(policy, start, mdp, rng, capture=cap, year=year))
    return YearSimulation(year=year, density=density, traces=tuple(traces), surface=surface)


def run_all_years(config: SimulationConfig, inputs: InputData) -> SimulationArchive:
    years = []
    skipped = []
    for year in config.years:
        try:
            years.append(simulate_year(year, config, inputs))
        except NoActiveConflictsError:
            skipped.append(year)
    if not years:
        raise ValueError("every configured year was skipped (no active conflicts)")
    return SimulationArchive(config=config, years=tuple(years), skipped_years=tuple(skipped))


def sankey_flows(
    archive: SimulationArchive,
    ports: Sequence[str],
    years: Optional[Iterable[int]] = None,
) -> FlowTable:
    """Edge traversal counts over all traces exiting through `ports`.

    Dwell repeats are not movements, so no self-edges appear; interior
    nodes conserve flow by construction.
    """
    if not ports:
        raise ValueError("port subset must be non-empty")
    counts: dict[tuple[str, str], int] = {}
    for tr in archive.traces(years=years, ports=ports):
        for a, b in zip(tr.path[:-1], tr.path[1:]):
            counts[(a, b)] = counts.get((a, b), 0) + 1
    rows = tuple((a, b, c) for (a, b), c in sorted(counts.items()))
    return FlowTable(rows)


# ---------------------------------------------------------------------------
# Archive persistence
# ---------------------------------------------------------------------------

_TRACE_HEADER = "year,individual,capture_lon,capture_lat,start_node,exit_node,path"


def format_traces(archive: SimulationArchive) -> str:
    lines = [_TRACE_HEADER]
    for ys in archive.years:
        for i, tr in enumerate(ys.traces):
            cap = tr.capture
            lines.append(
                f"{tr.year},{i},{cap.lon!r},{cap.lat!r},{tr.start_node},"
                f"{tr.exit_node},{'>'.join(tr.path)}"
            )
    return "\n".join(lines) + "\n"


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def save_archive(
    archive: SimulationArchive,
    outdir,
    inputs: InputData,
    command: Optional[list[str]] = None,
) -> Path:
    """Write a self-contained archive directory.

    Contents are a pure function of (config, inputs), so two runs with the
    same seed produce byte-identical directories. Wall-clock timestamps are
    therefore logged by the CLI, never written here.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "traces.csv").write_text(format_traces(archive), encoding="utf-8")
    for ys in archive.years:
        write_grid(out / f"density_{ys.year}.grid", ys.density.grid, ys.density.pmf)
        if ys.surface is not None:
            write_grid(out / f"surface_{ys.year}.grid", ys.surface.grid, ys.surface.values)
    srcdir = out / "inputs"
    srcdir.mkdir(exist_ok=True)
    sources = dict(inputs.sources)
    sources.setdefault("conflicts.csv", serialize_conflict_table(inputs.conflicts))
    sources.setdefault("nodes.csv", serialize_network_nodes(inputs.network))
    sources.setdefault("edges.csv", serialize_network_edges(inputs.network))
    for name, text in sorted(sources.items()):
        (srcdir / name).write_text(text, encoding="utf-8")
    manifest = {
        "tool": "originsim",
        "version": __version__,
        "command": command or [],
        "config": archive.config.to_json_dict(),
        "master_seed": archive.config.master_seed,
        "years": archive.years_available(),
        "skipped_years": list(archive.skipped_years),
        "input_checksums": {name: _sha256(text) for name, text in sorted(sources.items())},
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return out


def load_archive(archive_dir) -> tuple[SimulationArchive, InputData]:
    """Reload an archive directory into in-memory structures.

    Dwell counts are not persisted in the trace export, so reloaded traces
    carry empty dwell tuples.
    """
    adir = Path(archive_dir)
    manifest = json.loads((adir / "manifest.json").read_text(encoding="utf-8"))
    config = SimulationConfig.from_json_dict(manifest["config"])
    srcdir = adir / "inputs"
    sources = {
        p.name: p.read_text(encoding="utf-8") for p in sorted(srcdir.iterdir()) if p.is_file()
    }
    conflicts = parse_conflict_table(sources["conflicts.csv"])
    network = parse_trade_network(sources["nodes.csv"], sources["edges.csv"])
    port_totals = (
        parse_port_totals(sources["port_totals.csv"], network)
        if "port_totals.csv" in sources
        else None
    )
    water = (
        parse_water_mask(sources["water.geojson"]) if "water.geojson" in sources else None
    )
    inputs = InputData(conflicts, network, port_totals, water, sources)

    per_year_traces: dict[int, list[TransitTrace]] = {}
    text = (adir / "traces.csv").read_text(encoding="utf-8")
    lines = text.strip().splitlines()
    if lines[0] != _TRACE_HEADER:
        raise ValueError("unrecognized traces.csv header")
    grid_cache: dict[int, ConflictDensity] = {}
    for year in manifest["years"]:
        grid, pmf = read_grid(adir / f"density_{year}.grid")
        grid_cache[year] = ConflictDensity(grid, pmf)
    for line in lines[1:]:
        year_s, _i, lon_s, lat_s, start, exit_node, path_s = line.split(",")
        year = int(year_s)
        lon, lat = float(lon_s), float(lat_s)
        grid = grid_cache[year].grid
        cap = CapturePoint(lon, lat, int(grid.flat_index(lon, lat)), year)
        per_year_traces.setdefault(year, []).append(
            TransitTrace(
                year=year,
                capture=cap,
                start_node=start,
                path=tuple(path_s.split(">")),
                dwell=(),
                exit_node=exit_node,
            )
        )
    years = []
    for year in manifest["years"]:
        surface = None
        spath = adir / f"surface_{year}.grid"
        if spath.exists():
            sgrid, svals = read_grid(spath)
            surface = ConflictSurface(sgrid, svals)
        years.append(
            YearSimulation(
                year=year,
                density=grid_cache[year],
                traces=tuple(per_year_traces.get(year, [])),
                surface=surface,
            )
        )
    return (
        SimulationArchive(
            config=config,
            years=tuple(years),
            skipped_years=tuple(manifest.get("skipped_years", [])),
        ),
        inputs,
    )
