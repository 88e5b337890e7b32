"""Push-sum average consensus on random time-varying directed graphs.

Simulation engine, ergodicity diagnostics (renewal times and contraction
products), closed-form convergence bounds, and a seeded Monte Carlo
harness that verifies every bound pathwise and in expectation.
"""

from .bounds import (
    RateConstants,
    expected_lambda_bound,
    expected_log_inv_y_bound,
    hoeffding_bound,
    pathwise_bound,
    product_max_check,
    rate_constants,
    y_floor,
)
from .config import Config, parse_config, validate_config
from .digraph import (
    DirectedGraph,
    from_positive_pattern,
    is_strongly_connected,
    out_degrees,
    union,
)
from .engine import PushSumState, consensus_error, estimates, f_metric, init, step
from .ergodicity import (
    MixingTimeline,
    compute_k_sequence,
    infinite_flow_report,
    lambda_product,
    phi_vector,
)
from .errors import PushSumError
from .montecarlo import (
    CensusRecord,
    ExperimentSummary,
    TrialTrace,
    convergence_census,
    hoeffding_experiment,
    run_experiment,
    run_trial,
)
from .randgen import (
    ProbabilitySequence,
    RandomStream,
    edge_probability_check,
    sample_weight_matrix,
    validate,
)
from .stochmat import (
    StochasticMatrix,
    check_entry_bounds,
    cut_flow,
    is_positive,
    max_min_column_gap,
    product_range,
    weight_from_graph,
)

__version__ = "0.1.0"
