"""Mean-field Langevin training of relaxed-control / neural-ODE models.

A cloud of parameter particles per time layer is evolved by
Euler-Maruyama updates whose drift is the data-averaged Hamiltonian
gradient assembled from forward and adjoint sweeps of the controlled
ODE.  The package also ships the verification harness: gradient-exactness
checks, synchronous-coupling contraction runs, particle/data scaling
studies, training-time discretisation rates, stationary-law comparisons,
and generalisation scaling.
"""

from .clouds import ParticleCloud, cloud_from_csv, cloud_init, cloud_to_csv
from .datasets import Dataset, DataSample, generate_dataset
from .exceptions import (ConfigError, NonFiniteCostateError,
                         NonFiniteParticleError, NonFiniteStateError)
from .grids import TimeGrid
from .langevin import (CoupledRunResult, PicardResult, TrainerConfig,
                       TrainHistory, coupled_pair_run, langevin_step,
                       lipschitz_probe, picard_solve, train)
from .metrics import CloudDistance, entropy_estimate, paired_distance, w2_distance
from .models import (HamiltonianEval, ModelSpec, PriorSpec, gaussian_prior,
                     hamiltonian, make_builtin_model, make_linear_drift_model,
                     make_zero_cost_model, model_grad_selfcheck)
from .objective import (ObjectiveValue, discrete_gradient,
                        finite_diff_gradient, objective_J, objective_Jsigma)
from .odes import (TrajectoryPair, adjoint_solve, forward_solve,
                   mean_field_drift, rk4_forward_solve, solve_trajectory_pair)
from .studies import (StudyReport, StudySetup, run_chaos_study,
                      run_contraction_study, run_euler_study,
                      run_generalization_study, run_gibbs_check)

__version__ = "0.1.0"

__all__ = [
    "ParticleCloud", "cloud_init", "cloud_to_csv", "cloud_from_csv",
    "Dataset", "DataSample", "generate_dataset",
    "TimeGrid",
    "ModelSpec", "PriorSpec", "HamiltonianEval", "gaussian_prior",
    "make_builtin_model", "make_linear_drift_model", "make_zero_cost_model",
    "hamiltonian", "model_grad_selfcheck",
    "forward_solve", "adjoint_solve", "solve_trajectory_pair",
    "TrajectoryPair", "mean_field_drift", "rk4_forward_solve",
    "objective_J", "objective_Jsigma", "ObjectiveValue",
    "discrete_gradient", "finite_diff_gradient",
    "TrainerConfig", "TrainHistory", "train", "langevin_step",
    "coupled_pair_run", "CoupledRunResult", "picard_solve", "PicardResult",
    "lipschitz_probe",
    "w2_distance", "CloudDistance", "entropy_estimate", "paired_distance",
    "StudySetup", "StudyReport",
    "run_chaos_study", "run_euler_study", "run_contraction_study",
    "run_gibbs_check", "run_generalization_study",
    "NonFiniteStateError", "NonFiniteCostateError", "NonFiniteParticleError",
    "ConfigError",
]
