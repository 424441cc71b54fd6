"""Smoothing-spline ANOVA regression at large n via basis selection.

Instead of one kernel function per observation, the fit uses q << n
basis points chosen by stratified sampling along a Hilbert
space-filling curve (with uniform, response-stratified, and
space-filling baselines), then solves the penalized least-squares
problem on that reduced basis with GCV-tuned smoothing.  Fitting costs
O(n q^2) instead of O(n^3).
"""

from .errors import (
    HbsplineError,
    IngestionError,
    InvalidConfigError,
    InvalidInputError,
    SingularSystemError,
)
from .hilbert import (
    CurveOrder,
    LocalityReport,
    decode,
    encode,
    index_to_center,
    locality_bound_check,
    point_to_index,
)
from .selection import (
    BasisSelection,
    Dataset,
    SelectionConfig,
    abs_select,
    apply_scaler,
    condition5_diagnostic,
    dataset_from_unit_cube,
    hbs_select,
    hilbert_bins,
    sbs_select,
    scale_to_unit_cube,
    select,
    selection_from_json,
    selection_to_json,
    ubs_select,
)
from .kernels import (
    AnovaSpec,
    assemble_matrices,
    bernoulli_k,
    default_spec,
    gram_matrix,
    kernel_full,
    kernel_main,
    kernel_term,
    null_space_eval,
    rescale_term_weights,
)
from .solver import (
    FittedModel,
    LambdaGrid,
    fit_fixed_lambda,
    gcv_select,
    load_model,
    mse,
    penalized_objective,
    predict,
    predict_with_diagnostics,
    save_model,
    smoother_diag,
    solve_coefficients,
)
from .bench import (
    ExperimentConfig,
    ExperimentResult,
    calibrate_noise,
    eval_function,
    gen_design,
    run_experiment,
)
from .theory import (
    EigenSurrogate,
    ScalingReport,
    reference_integral,
    stratified_integral_estimate,
    variance_scaling_study,
)

__version__ = "0.1.0"
