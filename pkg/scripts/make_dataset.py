"""Regenerate the bundled dataset under data/.

The conflict table, network, and water mask come from fixed-seed
generators. The observed port totals are produced by the model itself so
the bundled calibration demo has a recoverable optimum: pooled exit counts
at lambda = 1.55 under the ratio cost form, spread across years in
proportion to a full per-year simulation's exits. Rerunning this script
reproduces data/ verbatim.
"""
import csv
import io
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from originsim.calibrate import expected_port_totals
from originsim.pipeline import SimulationConfig, run_all_years
from originsim.synthetic import DATASET_SEED, YEAR_END, YEAR_START, synthetic_inputs, write_dataset

TOTALS_LAMBDA = 1.55
TOTALS_N = 20_000
TOTALS_SEED = 313
YEAR_SHAPE_SAMPLES = 1000


def _spread_over_years(total: int, weights: dict[int, int]) -> dict[int, int]:
    """Largest-remainder apportionment of `total` across years."""
    years = sorted(weights)
    wsum = sum(weights.values())
    if wsum == 0:
        weights = {y: 1 for y in years}
        wsum = len(years)
    quotas = [(y, total * weights[y] / wsum) for y in years]
    out = {y: int(q) for y, q in quotas}
    short = total - sum(out.values())
    for y, q in sorted(quotas, key=lambda t: (t[1] - int(t[1]), t[0]), reverse=True)[:short]:
        out[y] += 1
    return out


def port_totals_csv(inputs) -> str:
    cfg = SimulationConfig(
        year_start=YEAR_START,
        year_end=YEAR_END,
        samples_per_year=YEAR_SHAPE_SAMPLES,
        lam=TOTALS_LAMBDA,
        cost_form="ratio",
        master_seed=DATASET_SEED,
    )
    pooled = expected_port_totals(cfg, inputs, TOTALS_LAMBDA, n=TOTALS_N, seed=TOTALS_SEED)
    per_port = dict(zip(inputs.network.absorbing_ids(), pooled.astype(int)))

    archive = run_all_years(cfg, inputs)
    year_weight: dict[str, dict[int, int]] = {}
    for ys in archive.years:
        for tr in ys.traces:
            year_weight.setdefault(tr.exit_node, {}).setdefault(ys.year, 0)
            year_weight[tr.exit_node][ys.year] += 1

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["port", "year", "count"])
    for port in sorted(per_port):
        total = per_port[port]
        if total == 0:
            continue
        weights = year_weight.get(port, {y: 1 for y in cfg.years})
        for y in cfg.years:
            weights.setdefault(y, 0)
        for year, count in sorted(_spread_over_years(total, weights).items()):
            if count:
                w.writerow([port, year, count])
    return buf.getvalue()


def main() -> None:
    outdir = ROOT / "data"
    inputs = synthetic_inputs()
    write_dataset(outdir, inputs)
    (outdir / "port_totals.csv").write_text(port_totals_csv(inputs), encoding="utf-8")
    print(f"wrote dataset -> {outdir}")


if __name__ == "__main__":
    main()
