"""Conflict-cost factor estimation against observed exit totals.

The scaling factor is fitted by minimizing the chi-square-form discrepancy
between simulated and observed per-port exit counts, pooled over all
configured years. Common random numbers make the objective a deterministic
function of the factor, so a plain golden-section search over the range is
reproducible seed-for-seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ingest import PortTotals, conflicts_active_in_year, dedupe_conflict_sites
from .pipeline import InputData, NoActiveConflictsError, SimulationConfig, resolve_grid
from .streams import substream
from .surface import ConflictDensity, krige_predict, normalize_surface, sample_captures
from .transit import RewardDistribution, build_mdp, nearest_nodes, port_path_costs

__all__ = [
    "CalibrationResult",
    "pooled_density",
    "expected_port_totals",
    "chi_square",
    "calibrate_lambda",
    "format_report",
]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_RANGE = (0.0, 10.0)
DEFAULT_ITERATIONS = 40


@dataclass(frozen=True)
class CalibrationResult:
    lam: float
    statistic: float
    trail: tuple[tuple[float, float], ...]  # (lambda, statistic) in evaluation order
    n: int
    seed: int
    bounds: tuple[float, float]
    flat: bool  # objective identical at every finite evaluation

    def __post_init__(self):
        lo, hi = self.bounds
        if not (lo <= self.lam <= hi):
            raise ValueError("fitted factor escaped the search range")
        if self.statistic < 0:
            raise ValueError("discrepancy statistic must be >= 0")


def pooled_density(config: SimulationConfig, inputs: InputData) -> ConflictDensity:
    """One conflict density from every record active in any configured year.

    Exit-total records are too sparse to fit per year, so calibration pools
    the conflict data across the whole year range.
    """
    records = []
    seen = set()
    for year in config.years:
        for rec in conflicts_active_in_year(
            inputs.conflicts, year, include_founded=config.include_founded
        ):
            if rec not in seen:
                seen.add(rec)
                records.append(rec)
    if not records:
        raise NoActiveConflictsError(config.year_start)
    sites, intensities = dedupe_conflict_sites(records, config.founded_intensity)
    grid = resolve_grid(config, inputs.network)
    return normalize_surface(krige_predict(sites, intensities, config.matern, grid))


def expected_port_totals(
    config: SimulationConfig,
    inputs: InputData,
    lam: float,
    n: int,
    seed: int,
    observed: Optional[PortTotals] = None,
    _density: Optional[ConflictDensity] = None,
    _prepared: Optional[tuple] = None,
) -> np.ndarray:
    """Simulated exit counts per absorbing node (node-list order) at `lam`.

    Simulates n individuals end-to-end: captures sampled from the pooled
    density, routed to the exit maximizing terminal reward minus path cost
    (exactly the policy-iteration exit, since dwell steps never change the
    chosen path). When `observed` is given, counts are scaled so their sum
    equals the observed grand total.
    """
    if n < 1:
        raise ValueError("simulation size must be >= 1")
    net = inputs.network
    if _prepared is not None:
        density, start_idx, rewards = _prepared
    else:
        density = _density if _density is not None else pooled_density(config, inputs)
        start_idx, rewards = _draw_individuals(config, inputs, density, n, seed)
    mdp = build_mdp(
        net,
        density,
        lam,
        np.full(rewards.shape[1], config.reward_mean),
        cost_form=config.cost_form,
        move_success=config.move_success,
    )
    dist, ports = port_path_costs(mdp)
    exit_cols = np.argmax(rewards - dist[start_idx], axis=1)
    counts = np.bincount(exit_cols, minlength=len(ports)).astype(float)
    if observed is not None:
        counts *= observed.grand_total() / counts.sum()
    return counts


def _draw_individuals(config, inputs, density, n, seed):
    """Capture starts and per-individual terminal rewards, fixed per seed
    so every factor evaluation reuses identical draws."""
    captures = sample_captures(density, n, substream(seed, "calibration", "capture"))
    starts = nearest_nodes([c.location for c in captures], inputs.network)
    start_idx = np.array([inputs.network.index_of(s) for s in starts], dtype=int)
    n_ports = int(inputs.network.absorbing_mask().sum())
    dist = RewardDistribution.equal(n_ports, config.reward_mean, config.reward_variance)
    z = substream(seed, "calibration", "rewards").standard_normal((n, n_ports))
    rewards = dist.mean[None, :] + math.sqrt(dist.variance) * z
    return start_idx, rewards


def chi_square(expected, observed) -> float:
    """Sum of (E_i - O_i)^2 / E_i over ports.

    Ports with E_i = O_i = 0 drop out of the sum; an observed count with
    zero expectation is an infinite-discrepancy error.
    """
    e = np.asarray(expected, dtype=float).ravel()
    o = np.asarray(observed, dtype=float).ravel()
    if e.shape != o.shape:
        raise ValueError("expected and observed vectors differ in length")
    if np.any(e < 0) or np.any(o < 0):
        raise ValueError("counts must be non-negative")
    bad = (e == 0) & (o > 0)
    if np.any(bad):
        port = int(np.nonzero(bad)[0][0]) + 1
        raise ValueError(f"unexplained observations at port {port}")
    keep = e > 0
    diff = e[keep] - o[keep]
    return float((diff * diff / e[keep]).sum())


def _observed_vector(observed: PortTotals, network) -> np.ndarray:
    totals = observed.aggregate()
    out = np.zeros(int(network.absorbing_mask().sum()))
    for k, pid in enumerate(network.absorbing_ids()):
        out[k] = totals.get(pid, 0)
    return out


def calibrate_lambda(
    config: SimulationConfig,
    inputs: InputData,
    observed: PortTotals,
    bounds: tuple[float, float] = DEFAULT_RANGE,
    n: int = 10_000,
    seed: int = 0,
    iterations: int = DEFAULT_ITERATIONS,
) -> CalibrationResult:
    """Golden-section search for the conflict-cost factor.

    Both endpoints are evaluated too, so a flat objective resolves to the
    lower bound exactly. Ties anywhere resolve to the smallest evaluated
    factor attaining the minimum.
    """
    lo, hi = float(bounds[0]), float(bounds[1])
    if not lo < hi:
        raise ValueError("search range is empty")
    if lo < 0:
        raise ValueError("conflict scaling factor must be >= 0")
    o_vec = _observed_vector(observed, inputs.network)
    if (o_vec > 0).sum() < 2:
        raise ValueError("observed totals must cover at least two ports")

    density = pooled_density(config, inputs)
    prepared = (density, *_draw_individuals(config, inputs, density, n, seed))
    cache: dict[float, float] = {}
    trail: list[tuple[float, float]] = []

    def objective(lam: float) -> float:
        if lam not in cache:
            e = expected_port_totals(
                config, inputs, lam, n, seed, observed=observed, _prepared=prepared
            )
            try:
                stat = chi_square(e, o_vec)
            except ValueError:
                stat = math.inf
            cache[lam] = stat
            trail.append((lam, stat))
        return cache[lam]

    objective(lo)
    objective(hi)
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = objective(c), objective(d)
    for _ in range(iterations):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = objective(d)

    finite = [s for _, s in trail if math.isfinite(s)]
    if not finite:
        raise ValueError("objective infinite across the whole range")
    best_stat = min(finite)
    best_lam = min(l for l, s in trail if s == best_stat)
    flat = len(set(finite)) == 1 and len(finite) == len(trail)
    return CalibrationResult(
        lam=best_lam,
        statistic=best_stat,
        trail=tuple(trail),
        n=n,
        seed=seed,
        bounds=(lo, hi),
        flat=flat,
    )


def format_report(result: CalibrationResult) -> str:
    lines = [f"{'lambda':>12}  {'statistic':>14}"]
    for lam, stat in sorted(result.trail):
        lines.append(f"{lam:12.6f}  {stat:14.6f}")
    lines.append("")
    lines.append(f"lambda* = {result.lam:.6f}  (statistic {result.statistic:.6f}, n = {result.n})")
    if result.flat:
        lines.append("warning: objective is flat across the search range; "
                      "lambda* defaults to the lower bound")
    return "\n".join(lines) + "\n"
