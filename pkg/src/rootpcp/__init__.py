"""Square-root principal component pursuit: low-rank plus sparse recovery
from noisy observations with noise-independent default parameters."""

from .estimator import RootPCP, StablePCP
from .solver import (
    ConvergenceReport,
    DecompositionResult,
    Formulation,
    KktDiagnostic,
    SolverConfig,
    SolverState,
    admm_step,
    default_lambda,
    default_mu_root,
    default_mu_stable,
    helper,
    kkt_diagnostic,
    solve,
)
from .simulation import NoiseModel, SimInstance, SimSpec, generate_instance

__all__ = [
    "RootPCP",
    "StablePCP",
    "ConvergenceReport",
    "DecompositionResult",
    "Formulation",
    "KktDiagnostic",
    "SolverConfig",
    "SolverState",
    "admm_step",
    "default_lambda",
    "default_mu_root",
    "default_mu_stable",
    "helper",
    "kkt_diagnostic",
    "solve",
    "NoiseModel",
    "SimInstance",
    "SimSpec",
    "generate_instance",
]

__version__ = "0.1.0"
