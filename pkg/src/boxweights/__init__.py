"""Toolkit for strong Muckenhoupt / Reverse Holder weight experiments on grid measures.

The package computes sharp self-improvement exponent ranges from the scalar
implicit equations that govern them, evaluates box characteristics of
discretized weights exactly over every axis-parallel box, runs the
measure-balanced recursive box splitting scheme with convergence diagnostics,
and verifies externally supplied Bellman-type candidate functions against
segment concavity, boundary and growth conditions.
"""

__version__ = "0.1.0"

from .errors import (
    BoxweightsError,
    InfeasibleSplitError,
    NumericFailureError,
    PreconditionError,
    ZeroMeasureBoxError,
)
from .exponents import (
    Branch,
    ClassKind,
    PParam,
    SharpRange,
    analytic_power_characteristic,
    extremal_alpha,
    implicit_value,
    sharp_range,
    solve_branch,
)
from .grids import (
    BoxIdx,
    GridMeasure,
    PrefixTables,
    WeightGrid,
    box_average,
    power_weight_grid,
    read_grid,
    refine,
    validate,
    write_grid,
)
from .characteristics import (
    CharacteristicReport,
    ap_characteristic,
    characteristic,
    naive_characteristic,
    pair_gauge,
    q_scan,
    rh_characteristic,
)
from .splitting import (
    AvgPoint,
    SplitConfig,
    SplitTree,
    build_tree,
    chain_report,
    choose_direction,
    choose_position,
    segment_max,
)
from .bellman import (
    AveragePairRegion,
    BellmanCandidate,
    TrendReport,
    VerificationReport,
    membership,
    theorem_conclusion_check,
    verify_candidate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
