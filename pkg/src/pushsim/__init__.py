"""Deterministic push-sum averaging and push-sum subgradient descent on
time-varying directed networks, with finite-time certificate checking."""

from .graphs import (
    Digraph,
    GraphSequence,
    digraph,
    format_graph_sequence,
    generate_sequence,
    is_strongly_connected,
    parse_graph_sequence,
    uniform_connectivity_window,
    union_graph,
)
from .weights import (
    WeightMatrix,
    WeightValidation,
    build_weights,
    format_matrix,
    parse_matrix,
    validate_column_stochastic,
)
from .pushsum import (
    AbsProbSeq,
    NetworkState,
    SMatrix,
    TheoryConstants,
    absolute_probability,
    build_s_matrix,
    consensus_error,
    initial_state,
    pushsum_step,
    ratio_state,
    theory_constants,
    transition_product_s,
    transition_product_w,
    verify_product_identity,
)
from .subgradient import (
    AbsoluteTerm,
    HingeTerm,
    ObjectiveSpec,
    QuadraticTerm,
    RunTrace,
    ScheduleReport,
    StepsizeSchedule,
    ZeroTerm,
    grid_minimize,
    hinge_objective,
    l1_objective,
    optimality_gap,
    pushsub_step,
    pushsub_step_ratio,
    quadratic_objective,
    run_push_subgradient,
    stepsize,
    stepsize_array,
    subgradient,
    validate_schedule,
    weighted_running_average,
    zero_objective,
)
from .bounds import (
    BoundInputs,
    BoundReport,
    BoundValue,
    ContractionSeries,
    GeometricFit,
    RateFit,
    bound_fixed,
    bound_timevarying,
    consensus_contraction_bound,
    contraction_series,
    fit_geometric_rate,
    fit_rate,
    timevarying_series,
)
from .harness import (
    CheckResult,
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    SummaryReport,
    ValidationFailure,
    apply_overrides,
    export_trace,
    import_trace,
    load_config,
    parse_config,
    render_config,
    render_plots,
    report_from_dir,
    run_experiment,
    sweep_experiment,
    verify_experiment,
)

__version__ = "0.1.0"
