"""Command-line entry point.

Subcommands: validate, simulate, calibrate, export-map, serve. A data
directory holds the input files (conflicts.csv, nodes.csv, edges.csv or
matrix.csv, optional port_totals.csv and water.geojson); simulation output
is an archive directory the other commands consume. Exit codes: 0 success,
1 domain or invariant failure, 2 I/O failure, 64 usage.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .calibrate import DEFAULT_RANGE, calibrate_lambda, format_report
from .density import KDE_SCALE_BOUNDS, KDE_SCALE_DEFAULT, conditional_origin_map
from .grids import write_grid
from .ingest import (
    IngestError,
    TradeNetwork,
    parse_conflict_table,
    parse_port_totals,
    parse_trade_network,
    parse_water_mask,
)
from .pipeline import (
    InputData,
    SimulationConfig,
    load_archive,
    run_all_years,
    sankey_flows,
    save_archive,
)
from .transit import ImproperPolicyError

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_IO = 2
EXIT_USAGE = 64

DATA_ENV = "ORIGINSIM_DATA"

PORT_ALIASES = ("all-coastal", "off-map")


class _Parser(argparse.ArgumentParser):
    """argparse with the usage exit code the rest of the tool promises."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _year_range(value: str) -> tuple[int, int]:
    parts = value.split(":")
    if len(parts) == 1:
        y = int(parts[0])
        return (y, y)
    if len(parts) == 2:
        a, b = int(parts[0]), int(parts[1])
        if a > b:
            raise argparse.ArgumentTypeError(f"empty year range {value!r}")
        return (a, b)
    raise argparse.ArgumentTypeError(f"expected YEAR or START:END, got {value!r}")


def _float_range(value: str) -> tuple[float, float]:
    parts = value.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {value!r}")
    lo, hi = float(parts[0]), float(parts[1])
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"empty range {value!r}")
    return (lo, hi)


# ---------------------------------------------------------------------------
# Input loading
# ---------------------------------------------------------------------------


def _read(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def load_inputs(data_dir) -> InputData:
    """Parse a data directory; FileNotFoundError for missing required files."""
    d = Path(data_dir)
    if not d.is_dir():
        raise FileNotFoundError(str(d))
    conflicts_p = d / "conflicts.csv"
    nodes_p = d / "nodes.csv"
    edges_p = d / "edges.csv"
    if not edges_p.exists():
        edges_p = d / "matrix.csv"
    for p in (conflicts_p, nodes_p, edges_p):
        if not p.exists():
            raise FileNotFoundError(str(p))
    sources = {
        "conflicts.csv": _read(conflicts_p),
        "nodes.csv": _read(nodes_p),
        "edges.csv": _read(edges_p),
    }
    conflicts = parse_conflict_table(sources["conflicts.csv"])
    network = parse_trade_network(sources["nodes.csv"], sources["edges.csv"])
    totals = None
    totals_p = d / "port_totals.csv"
    if totals_p.exists():
        sources["port_totals.csv"] = _read(totals_p)
        totals = parse_port_totals(sources["port_totals.csv"], network)
    water = None
    water_p = d / "water.geojson"
    if water_p.exists():
        sources["water.geojson"] = _read(water_p)
        water = parse_water_mask(sources["water.geojson"])
    return InputData(conflicts, network, totals, water, sources)


def port_class(port_id: str) -> str:
    """Dataset convention: ids prefixed ``offmap`` are inland exits."""
    return "off-map" if port_id.startswith("offmap") else "coastal"


def resolve_ports(spec_str: str, network: TradeNetwork) -> list[str]:
    """Expand a comma-separated port list; aliases name whole classes."""
    absorbing = network.absorbing_ids()
    out: list[str] = []
    for token in (t.strip() for t in spec_str.split(",")):
        if not token:
            continue
        if token == "all-coastal":
            out.extend(p for p in absorbing if port_class(p) == "coastal")
        elif token == "off-map":
            out.extend(p for p in absorbing if port_class(p) == "off-map")
        elif token in absorbing:
            out.append(token)
        else:
            raise ValueError(f"unknown port {token!r}")
    if not out:
        raise ValueError("port list resolved to nothing")
    seen = set()
    return [p for p in out if not (p in seen or seen.add(p))]


# ---------------------------------------------------------------------------
# Config assembly and manifests
# ---------------------------------------------------------------------------

_FLAG_TO_FIELD = {
    "samples": "samples_per_year",
    "lam": "lam",
    "seed": "master_seed",
    "grid_res": "grid_resolution",
    "cost_form": "cost_form",
    "sigma_r2": "reward_variance",
    "include_founded": "include_founded",
}


def build_config(args, inputs: InputData) -> SimulationConfig:
    """Effective config: flags > config file > defaults."""
    values: dict = {}
    if getattr(args, "config", None):
        p = Path(args.config)
        if not p.exists():
            raise FileNotFoundError(str(p))
        loaded = json.loads(_read(p))
        if not isinstance(loaded, dict):
            raise ValueError("config file must hold a JSON object")
        known = {f.name for f in dataclasses.fields(SimulationConfig)}
        unknown = set(loaded) - known - {"years"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "years" in loaded:
            a, b = loaded.pop("years")
            values["year_start"], values["year_end"] = int(a), int(b)
        values.update(loaded)
    if getattr(args, "years", None) is not None:
        values["year_start"], values["year_end"] = args.years
    if "year_start" not in values:
        active = inputs.conflicts.years_active()
        if not active:
            raise ValueError("no active conflict years in the data; pass --years")
        values["year_start"], values["year_end"] = active[0], active[-1]
    for flag, fieldname in _FLAG_TO_FIELD.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[fieldname] = v
    if "matern" in values and isinstance(values["matern"], dict):
        from .surface import MaternParams

        values["matern"] = MaternParams(**values["matern"])
    return SimulationConfig(**values)


def _checksums(sources: dict) -> dict:
    return {
        name: hashlib.sha256(text.encode("utf-8")).hexdigest()
        for name, text in sorted(sources.items())
    }


def write_run_manifest(base: Path, command: list[str], config: Optional[SimulationConfig],
                       sources: dict, extra: Optional[dict] = None) -> Path:
    """Reproduction record written NEXT TO the output (timestamps would
    break byte-identical output directories)."""
    doc = {
        "tool": "originsim",
        "version": __version__,
        "command": command,
        "written": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": config.to_json_dict() if config else None,
        "master_seed": config.master_seed if config else None,
        "input_checksums": _checksums(sources),
    }
    if extra:
        doc.update(extra)
    path = Path(str(base) + ".run.json")
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    d = Path(args.data)
    if not d.is_dir():
        raise FileNotFoundError(str(d))
    checks: list[tuple[str, str, str]] = []  # (file, status, detail)
    failures = 0

    def record(name: str, fn, required: bool):
        nonlocal failures
        path = d / name
        if not path.exists():
            if required:
                raise FileNotFoundError(str(path))
            checks.append((name, "SKIP", "not present"))
            return None
        try:
            obj, detail = fn(path)
        except IngestError as exc:
            checks.append((name, "FAIL", str(exc)))
            failures += 1
            return None
        checks.append((name, "OK", detail))
        return obj

    conflicts = record(
        "conflicts.csv",
        lambda p: (lambda t: (t, f"{len(t)} records, {len(t.years_active())} active years"))(
            parse_conflict_table(_read(p))
        ),
        required=True,
    )
    edges_name = "edges.csv" if (d / "edges.csv").exists() else "matrix.csv"
    network = None
    nodes_p, edges_p = d / "nodes.csv", d / edges_name
    if not nodes_p.exists():
        raise FileNotFoundError(str(nodes_p))
    if not edges_p.exists():
        raise FileNotFoundError(str(d / "edges.csv"))
    try:
        network = parse_trade_network(_read(nodes_p), _read(edges_p))
        n_ports = len(network.absorbing_ids())
        checks.append(
            ("nodes.csv", "OK", f"{network.n} nodes, {n_ports} points of sale")
        )
        checks.append((edges_name, "OK", f"{len(network.undirected_edges())} undirected edges"))
    except IngestError as exc:
        checks.append(("nodes.csv/" + edges_name, "FAIL", str(exc)))
        failures += 1
    if network is not None:
        record(
            "port_totals.csv",
            lambda p: (lambda t: (t, f"{len(t.entries)} rows, grand total {t.grand_total()}"))(
                parse_port_totals(_read(p), network)
            ),
            required=False,
        )
    record(
        "water.geojson",
        lambda p: (lambda w: (w, f"{len(w.rings)} rings"))(parse_water_mask(_read(p))),
        required=False,
    )
    width = max(len(name) for name, *_ in checks)
    for name, status, detail in checks:
        print(f"{name:<{width}}  {status:<4}  {detail}")
    if failures:
        print(f"{failures} file(s) failed validation")
        return EXIT_DOMAIN
    print("all inputs valid")
    return EXIT_OK


def cmd_simulate(args, argv: list[str]) -> int:
    inputs = load_inputs(args.data)
    config = build_config(args, inputs)
    archive = run_all_years(config, inputs)
    out = Path(args.out)
    save_archive(archive, out, inputs, command=argv)
    write_run_manifest(out, argv, config, inputs.sources,
                       extra={"years": archive.years_available(),
                              "skipped_years": list(archive.skipped_years)})
    print(f"simulated {len(archive.years)} year(s), "
          f"{config.samples_per_year} individuals each -> {out}")
    if archive.skipped_years:
        print(f"skipped years with no active conflicts: "
              f"{', '.join(str(y) for y in archive.skipped_years)}")
    return EXIT_OK


def cmd_calibrate(args, argv: list[str]) -> int:
    inputs = load_inputs(args.data)
    if inputs.port_totals is None:
        raise FileNotFoundError(str(Path(args.data) / "port_totals.csv"))
    config = build_config(args, inputs)
    result = calibrate_lambda(
        config,
        inputs,
        inputs.port_totals,
        bounds=args.range if args.range else DEFAULT_RANGE,
        n=args.n,
        seed=args.seed if args.seed is not None else 0,
    )
    report = format_report(result)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "calibration.txt").write_text(report, encoding="utf-8")
    (out / "calibration.json").write_text(
        json.dumps(
            {
                "lambda": result.lam,
                "statistic": result.statistic,
                "n": result.n,
                "seed": result.seed,
                "bounds": list(result.bounds),
                "flat": result.flat,
                "trail": [[l, s] for l, s in result.trail],
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    write_run_manifest(out, argv, config, inputs.sources,
                       extra={"lambda": result.lam, "statistic": result.statistic})
    sys.stdout.write(report)
    return EXIT_OK


def cmd_export_map(args, argv: list[str]) -> int:
    archive, inputs = load_archive(args.archive)
    ports = resolve_ports(args.ports, inputs.network)
    years = args.year or []
    if not years:
        raise ValueError("at least one --year is required")
    for year in years:
        if year not in archive.years_available():
            raise KeyError(f"year {year} not in archive")
    water = inputs.water
    if args.mask:
        water = parse_water_mask(_read(Path(args.mask)))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    slug = "-".join(ports)
    for year in years:
        m = conditional_origin_map(
            archive, years=[year], ports=ports, h=args.bandwidth, water=water
        )
        meta = {
            "year": year,
            "ports": ports,
            "bandwidth": args.bandwidth,
            "sample_count": m.sample_count,
        }
        stem = f"map_{year}_{slug}_h{args.bandwidth:g}"
        if m.is_empty:
            meta["empty"] = True
            print(f"{year}: no simulated individuals match ports {ports}; no grid written")
        else:
            write_grid(out / f"{stem}.grid", m.grid, m.values)
            written.append(f"{stem}.grid")
        (out / f"{stem}.json").write_text(
            json.dumps(meta, indent=2) + "\n", encoding="utf-8"
        )
    if args.sankey:
        flows = sankey_flows(archive, ports=ports, years=years)
        lines = ["from,to,count"] + [f"{a},{b},{c}" for a, b, c in flows.rows]
        (out / "sankey.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append("sankey.csv")
    write_run_manifest(out, argv, archive.config, inputs.sources,
                       extra={"written": written})
    print(f"wrote {len(written)} file(s) -> {out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    app = create_app(args.archive)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser wiring
# ---------------------------------------------------------------------------


def _data_default() -> Optional[str]:
    return os.environ.get(DATA_ENV)


def make_parser() -> _Parser:
    parser = _Parser(prog="originsim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"originsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data(p):
        p.add_argument(
            "--data",
            default=_data_default(),
            help=f"input data directory (default: ${DATA_ENV})",
        )

    def add_sim_flags(p):
        p.add_argument("--years", type=_year_range, help="YEAR or START:END (inclusive)")
        p.add_argument("--samples", type=_positive_int, help="individuals per year")
        p.add_argument("--lambda", dest="lam", type=float, help="conflict scaling factor")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--grid-res", dest="grid_res", type=float, help="grid resolution, degrees")
        p.add_argument("--cost-form", dest="cost_form", choices=("literal", "ratio"))
        p.add_argument("--sigma-r2", dest="sigma_r2", type=float, help="terminal reward variance")
        p.add_argument("--include-founded", dest="include_founded",
                       action="store_const", const=True, default=None,
                       help="treat city foundings as conflict sites")
        p.add_argument("--config", help="JSON config file (flags override it)")
        p.add_argument("--threads", type=_positive_int, default=1,
                       help="internal parallelism bound (results are identical for any value)")

    p = sub.add_parser("validate", help="parse and check a data directory")
    add_data(p)

    p = sub.add_parser("simulate", help="run the yearly simulation into an archive")
    add_data(p)
    add_sim_flags(p)
    p.add_argument("--out", required=True, help="archive directory to write")

    p = sub.add_parser("calibrate", help="fit the conflict scaling factor to observed totals")
    add_data(p)
    add_sim_flags(p)
    p.add_argument("--out", required=True, help="report directory to write")
    p.add_argument("--range", type=_float_range, help="search range LO:HI")
    p.add_argument("--n", type=_positive_int, default=10_000, help="simulated individuals")

    p = sub.add_parser("export-map", help="export conditional origin maps from an archive")
    p.add_argument("--archive", required=True, help="archive directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--year", type=int, action="append", help="year (repeatable)")
    p.add_argument("--ports", required=True,
                   help="comma-separated port ids or aliases (all-coastal, off-map)")
    p.add_argument("--bandwidth", type=float, default=KDE_SCALE_DEFAULT,
                   help=f"kernel scale in degrees, within {list(KDE_SCALE_BOUNDS)}")
    p.add_argument("--mask", help="override water mask GeoJSON (default: archive's)")
    p.add_argument("--sankey", action="store_true", help="also write flow counts")

    p = sub.add_parser("serve", help="serve an archive over HTTP")
    p.add_argument("--archive", required=True, help="archive directory")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = make_parser()
    args = parser.parse_args(argv)
    if getattr(args, "data", None) is None and args.command in ("validate", "simulate", "calibrate"):
        parser.error(f"--data is required (or set ${DATA_ENV})")
    try:
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "simulate":
            return cmd_simulate(args, argv)
        if args.command == "calibrate":
            return cmd_calibrate(args, argv)
        if args.command == "export-map":
            return cmd_export_map(args, argv)
        if args.command == "serve":
            return cmd_serve(args)
        parser.error(f"unknown command {args.command!r}")
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (IngestError, ImproperPolicyError, ValueError, KeyError) as exc:
        msg = exc.args[0] if exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
