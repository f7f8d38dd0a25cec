"""Coordinate descent with determinantal (volume) subset sampling.

The package bundles the solver family (determinantal, diagonal, and uniform
subset selection), the subset samplers themselves including a sparse
O(nnz + n)-preprocessing pair sampler, the smooth objective zoo with
curvature matrices, spectral quantities that predict and bound convergence,
and a benchmark CLI that reproduces the synthetic and dataset experiments.
"""

__version__ = "0.1.0"

from .errors import (
    CombinatorialBlowup,
    ConfigError,
    DegenerateApprox,
    EmptySupport,
    NumericError,
    ParseError,
    SingularSubmatrix,
    UnboundedLevelSet,
    VolcdError,
    ZeroDiagonalNonzeroRow,
)
from .linalg import (
    CsrSymmetricUpper,
    Spectrum,
    adjugate,
    determinant,
    eigendecompose,
    load_csr_triples,
    load_dense_triples,
    principal_submatrix,
    pseudo_solve,
    save_triples,
    spd_solve,
)
from .objectives import (
    HuberLoss,
    LogSumExpLoss,
    LogisticLoss,
    QuadraticObjective,
    RegularizedObjective,
    SeparableObjective,
    SqrtNormLoss,
    SquareLoss,
)
from .benchmark import (
    ExperimentConfig,
    ResultRow,
    ResultTable,
    emit_table,
    run_experiment,
)
from .problems import (
    ProblemSpec,
    banded_psd,
    gen_huber,
    gen_quadratic,
    load_libsvm,
    read_libsvm,
    reference_min,
)
from .rng import RngStream
from .sampling import (
    CumulativeTable,
    SparseTwoSampler,
    VolumeSampler,
    build_cumulative,
    build_volume_sampler,
    cumulative_sample,
    exact_probabilities,
    sparse2_preprocess,
    sparse2_sample,
    tau_nice_sample,
    volume_sample,
)
from .solvers import (
    SolverConfig,
    SolverReport,
    check_stop,
    rcd_run,
    rcdvs_run,
    run,
    sdna_run,
)
from .spectral import (
    TauApprox,
    acceleration_ratio,
    b_tau,
    d_tau_quadratic,
    elementary_symmetric,
    expected_step_matrix,
    modulus_quadratic,
    sum_adjugates,
    sum_principal_minors,
)

__all__ = [name for name in dir() if not name.startswith("_")]
