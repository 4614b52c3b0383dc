"""Accelerated NMF with optional randomized sketch compression.

The factorization alternates nonnegative least-squares subproblems solved by
Nesterov-accelerated projected gradient. Sketch operators built by scaled
Gaussian projection, randomized power iteration, or randomized subspace
iteration shrink the data once up front so both alternating subproblems run
at the sketch size. ``nenmf-bench`` drives the convergence benchmark.
"""

from .compression import (
    GAUSSIAN,
    POWER_ITERATION,
    SCHEMES,
    SUBSPACE_ITERATION,
    CompressedProblem,
    SketchPair,
    compress_problem,
    gaussian_sketch_pair,
    load_sketch,
    power_iteration_pair,
    save_sketch,
    subspace_iteration_pair,
)
from .errors import (
    ComparisonValidityError,
    ConfigError,
    DimensionError,
    NenmfError,
    NumericalCollapseError,
    NumericalFailureError,
    RankDeficiencyError,
    ZeroMatrixError,
)
from .factorize import (
    FactorPair,
    OuterConfig,
    factorize_compressed,
    factorize_vanilla,
    init_factors,
)
from .matrix import (
    DenseMatrix,
    frobenius_norm,
    gaussian_matrix,
    orthonormal_basis,
    read_csv_matrix,
    read_nmfb,
    spectral_norm_sq,
    uniform_matrix,
    write_csv_matrix,
    write_nmfb,
)
from .nnls import (
    InnerSolverConfig,
    InnerSolverState,
    alpha_next,
    gradient,
    projected_gradient_norm,
    solve_nnls,
)
from .synthetic import ProblemInstance, generate_problem, load_instance, save_instance
from .tracing import (
    ConvergenceTrace,
    IterationClock,
    MonotonicClock,
    TraceRecord,
    TraceRecorder,
    iterations_to_target,
    read_trace_csv,
    rre,
    time_to_target,
    write_trace_csv,
)

__all__ = [
    "GAUSSIAN",
    "POWER_ITERATION",
    "SUBSPACE_ITERATION",
    "SCHEMES",
    "CompressedProblem",
    "SketchPair",
    "compress_problem",
    "gaussian_sketch_pair",
    "power_iteration_pair",
    "subspace_iteration_pair",
    "save_sketch",
    "load_sketch",
    "NenmfError",
    "DimensionError",
    "ZeroMatrixError",
    "RankDeficiencyError",
    "NumericalFailureError",
    "NumericalCollapseError",
    "ComparisonValidityError",
    "ConfigError",
    "FactorPair",
    "OuterConfig",
    "factorize_vanilla",
    "factorize_compressed",
    "init_factors",
    "DenseMatrix",
    "gaussian_matrix",
    "uniform_matrix",
    "orthonormal_basis",
    "spectral_norm_sq",
    "frobenius_norm",
    "read_nmfb",
    "write_nmfb",
    "read_csv_matrix",
    "write_csv_matrix",
    "InnerSolverConfig",
    "InnerSolverState",
    "alpha_next",
    "gradient",
    "projected_gradient_norm",
    "solve_nnls",
    "ProblemInstance",
    "generate_problem",
    "save_instance",
    "load_instance",
    "ConvergenceTrace",
    "TraceRecord",
    "TraceRecorder",
    "MonotonicClock",
    "IterationClock",
    "rre",
    "time_to_target",
    "iterations_to_target",
    "read_trace_csv",
    "write_trace_csv",
    "__version__",
]

__version__ = "0.1.0"
