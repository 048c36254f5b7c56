"""Origin inference for forced-migration records.

Kriges yearly conflict intensity onto a map grid, samples capture
locations from the normalized surface, routes each individual through a
trade-network MDP to a point of sale, and aggregates the simulated traces
into conditional origin maps and port-flow summaries.
"""

__version__ = "0.1.0"

from .grids import GridSpec, parse_grid, format_grid, read_grid, write_grid
from .ingest import (
    ConflictRecord,
    ConflictTable,
    IngestError,
    Node,
    PortTotals,
    TradeNetwork,
    WaterMask,
    parse_conflict_table,
    parse_port_totals,
    parse_trade_network,
    parse_water_mask,
)
from .surface import (
    AllZeroSurfaceError,
    CapturePoint,
    ConflictDensity,
    ConflictSurface,
    MaternParams,
    krige_predict,
    matern_cov,
    normalize_surface,
    sample_captures,
)
from .transit import (
    ImproperPolicyError,
    MdpInstance,
    Policy,
    RewardDistribution,
    TransitTrace,
    build_mdp,
    edge_cost,
    nearest_node,
    policy_iteration,
    port_path_costs,
    simulate_trajectory,
)
from .pipeline import (
    FlowTable,
    InputData,
    NoActiveConflictsError,
    SimulationArchive,
    SimulationConfig,
    YearSimulation,
    load_archive,
    run_all_years,
    sankey_flows,
    save_archive,
    simulate_year,
)
from .density import OriginDensityMap, conditional_origin_map, kde_grid, total_variation
from .calibrate import CalibrationResult, calibrate_lambda, chi_square, expected_port_totals
from .streams import substream
