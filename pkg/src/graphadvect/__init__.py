"""Advection on directed graphs and Matérn Gaussian processes built from the
singular values of the graph advection operator."""

from .dynamics import (
    ConvergenceReport,
    InitialCondition,
    IntegrationConfig,
    StateVector,
    advection_rhs,
    convergence_study,
    exact_step_solution,
    integrate,
    total_mass,
)
from .experiments import (
    ExperimentResult,
    SyntheticTrafficConfig,
    generate_traffic_data,
    holdout_split,
    ingest_sensor_csv,
    run_regression_experiment,
)
from .gp import (
    GPPosterior,
    TrainingData,
    fit_hyperparameters,
    l2_test_error,
    log_marginal_likelihood,
    posterior_predict,
    posterior_sample,
    prior_sample,
)
from .graphs import (
    DirectedGraph,
    FamilyKind,
    GraphFamily,
    LinearOperator,
    OperatorKind,
    advection_operator,
    consensus_operator,
    from_edge_list,
    generate,
    is_balanced,
)
from .kernel import (
    KernelMatrix,
    MaternHyperparams,
    SpectralFactorization,
    matern_kernel,
    psd_check,
    symmetrized_average,
    thin_svd,
)

__version__ = "0.1.0"
