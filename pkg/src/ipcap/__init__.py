"""Information processing capacity of input-driven readout systems.

Core objects: a polynomial basis over i.i.d. uniform inputs (basis), input
sample generators (sampling), Gram/capacity linear algebra (capacity),
bias-corrected capacity estimators (estimators), synthetic ground-truth
systems (synthetic), an effective-rank indicator (factor_analysis), a fiber
nonlinearity simulator (photonic), benchmark tasks (tasks), and SVG report
rendering (plots). The `ipcap` console script in cli ties them together.
"""

from .basis import (
    BasisSet,
    MultiIndex,
    enumerate_basis,
    eval_basis_matrix,
    eval_index_matrix,
    fourth_moment,
    fourth_moment_product,
    legendre_table,
)
from .capacity import (
    CapacityStatus,
    CapacityValue,
    Dataset,
    GramStats,
    augment_constant,
    gram,
    inject_additive_noise,
    load_dataset_csv,
    raw_capacities_bulk,
    save_dataset_csv,
)
from .errors import IpcapError, NumericalError, PreconditionError
from .estimators import (
    Algorithm,
    CapacityReport,
    EstimatorConfig,
    estimate,
    estimate_richardson_first,
    estimate_threshold_first,
    richardson,
    s_n_statistic,
    sweep_extrapolated,
    threshold_for,
)
from .factor_analysis import (
    IndicatorCurve,
    estimate_noise_std,
    indicator_function,
    noise_normalize,
)
from .photonic import (
    DetectorConfig,
    EncoderConfig,
    FiberConfig,
    PulseField,
    average_to_peak_power,
    dbm_to_watts,
    detect,
    encode_inputs,
    make_sech_pulse,
    nonlinear_phase,
    propagate,
    simulate_dataset,
)
from .plots import capacity_barplot_svg, capacity_matrix_svg, render_report
from .sampling import (
    SampleMatrix,
    load_samples_csv,
    ordered_halves,
    pseudo_random_points,
    save_samples_csv,
    sobol_points,
)
from .synthetic import (
    SyntheticSystem,
    ValidationStats,
    evaluate_readouts,
    make_synthetic,
    true_capacities,
    true_capacity_vector,
    validation_run,
)
from .tasks import (
    CVResult,
    PhotonicSystem,
    TaskDataset,
    kfold_accuracy,
    load_digits_task,
    pca_reduce,
    run_benchmark,
    train_linear_readout,
    two_spirals,
)

__version__ = "0.1.0"

__all__ = [
    "Algorithm",
    "BasisSet",
    "CVResult",
    "CapacityReport",
    "CapacityStatus",
    "CapacityValue",
    "Dataset",
    "DetectorConfig",
    "EncoderConfig",
    "EstimatorConfig",
    "FiberConfig",
    "GramStats",
    "IndicatorCurve",
    "IpcapError",
    "MultiIndex",
    "NumericalError",
    "PhotonicSystem",
    "PreconditionError",
    "PulseField",
    "SampleMatrix",
    "SyntheticSystem",
    "TaskDataset",
    "ValidationStats",
    "augment_constant",
    "average_to_peak_power",
    "capacity_barplot_svg",
    "capacity_matrix_svg",
    "dbm_to_watts",
    "detect",
    "encode_inputs",
    "enumerate_basis",
    "estimate",
    "estimate_noise_std",
    "estimate_richardson_first",
    "estimate_threshold_first",
    "eval_basis_matrix",
    "eval_index_matrix",
    "evaluate_readouts",
    "fourth_moment",
    "fourth_moment_product",
    "gram",
    "indicator_function",
    "inject_additive_noise",
    "kfold_accuracy",
    "legendre_table",
    "load_dataset_csv",
    "load_digits_task",
    "load_samples_csv",
    "make_sech_pulse",
    "make_synthetic",
    "noise_normalize",
    "nonlinear_phase",
    "ordered_halves",
    "pca_reduce",
    "propagate",
    "pseudo_random_points",
    "raw_capacities_bulk",
    "render_report",
    "richardson",
    "run_benchmark",
    "s_n_statistic",
    "save_dataset_csv",
    "save_samples_csv",
    "simulate_dataset",
    "sobol_points",
    "sweep_extrapolated",
    "threshold_for",
    "train_linear_readout",
    "true_capacities",
    "true_capacity_vector",
    "two_spirals",
    "validation_run",
]
