"""Energy-minimal deadline scheduling on a speed-scalable processor with a
sleep state: exact YDS speed scaling, instance transformation, time-grid
discretization, an interval dynamic program with a proven approximation
knob, and independent oracles for certifying solver output."""

from .model import (
    ACTIVE,
    SLEEP,
    DegeneratePowerError,
    FeasibilityIssue,
    FeasibilityReport,
    Instance,
    Job,
    NoCriticalSpeedError,
    NormalizationRecord,
    PiecewiseLinearConvex,
    PowerLaw,
    Schedule,
    Segment,
    active_segment,
    check_feasible,
    count_wakeups,
    critical_speed,
    critical_speed_exact,
    evaluate_power,
    normalize,
    schedule_energy,
    sleep_segment,
    to_fraction,
)
from .yds import DensityInterval, YdsResult, max_density_interval, partition_fast_slow, run_yds
from .transform import FastIntervals, TransformedInstance, back_transform, build_transformed
from .discretize import (
    DiscretizationParams,
    Piece,
    TimeGrid,
    build_grid,
    build_pieces,
    check_discretized,
    check_well_ordered,
    compute_delta,
    exact_grid_size,
    exact_pieces_per_job,
    exact_subdivisions,
)
from .dp import DpContext, DpEntry, GridTooCoarseError, SolveReport, dp_base, dp_solve, reconstruct, solve
from .oracle import (
    OracleResult,
    OracleScopeError,
    analytic_disjoint_chain,
    analytic_single_job,
    exhaustive_discretized,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
