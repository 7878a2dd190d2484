"""Multi-zone load forecast combination: stacked-regression GLS blending of
expert forecasts with hierarchy-coherent output and a rolling evaluation
harness."""

__version__ = "0.1.0"

from .combine import (  # noqa: F401
    METHODS,
    CombinationWeights,
    CombinedForecast,
    CombinerConfig,
    ew_combine,
    gw_combine,
    gw_weights,
    local_combine,
    lw_cov_weights,
    lw_var_weights,
    reconcile_projection,
    run_all_methods,
)
from .covariance import (  # noqa: F401
    CovEstimate,
    ZeroPattern,
    apply_zero_pattern,
    ensure_pd,
    estimate_covariance,
    estimate_lambda,
    sample_cov,
    shrink_to_diagonal,
)
from .errors import LoadBlendError  # noqa: F401
from .evaluate import ScoreTable, boxplot_data, dm_summary, dm_test, ga_rmae, mae, rmae, table_report  # noqa: F401
from .naive import add_drw_expert, drw_forecast  # noqa: F401
from .panel import (  # noqa: F401
    SLOTS_PER_DAY,
    ErrorPanel,
    ForecastSet,
    Hierarchy,
    Panel,
    TimeIndex,
    build_stacking_matrix,
    coherency_gap,
    flatten_errors,
    validation_window,
)
from .synth import ExpertSpec, SynthSpec, synth_generate  # noqa: F401
from .experiment import ExperimentConfig, export_results, rolling_run  # noqa: F401
