"""Harvest-then-transmit wireless powered networks with circuit power.

Closed-form per-epoch allocation of base-station power and time fractions,
online proportional-fair and sum-rate protocols, brute-force oracles and
parameter sweeps.
"""

from .allocator import (
    AllocationError,
    AllocatorWorkspace,
    EpochAllocation,
    KKTReport,
    allocate_epoch,
    allocate_epoch_maxsum,
    beta_function,
    epoch_lagrangian,
    solve_beta,
    solve_z,
    verify_kkt,
)
from .channel import (
    DEFAULT_DISTANCES,
    ChannelState,
    NetworkConfig,
    load_trace_csv,
    mean_gain,
    sample_epoch,
    sample_trace,
    save_trace_csv,
)
from .oracle import ConcavityReport, GridResult, GridSpec, grid_search_epoch, verify_concavity_samples
from .protocol import (
    Mode,
    ProtocolState,
    SimulationResult,
    calibrate_lambda_offline,
    compute_metrics,
    jain_index,
    mean_spend,
    run,
    run_fixed_lambda,
    run_stream,
    step,
    write_summary_csv,
)
from .special_functions import RootBracket, RootFindingError, find_root_decreasing, lambert_w0

__version__ = "0.1.0"
