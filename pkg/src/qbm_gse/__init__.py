"""Ground-state energy learning with parameterized thermal states, on an exact simulator."""

from .circuit import EstimatorConfig, GradientEstimate, hadamard_test_p0, hoeffding_shots, qbge
from .pauli import PauliString, WeightedPauliSum, parse_hamiltonian, parse_pauli
from .sampling import HighPeakTentSampler, build_sampler, kappa
from .sgd import TrainConfig, TrainRecord, qbm_gse, sample_complexity
from .thermal import (
    Ansatz,
    NumericalFault,
    ThermalState,
    analytic_gradient,
    analytic_hessian,
    apply_phi,
    objective,
    smoothness_constant,
    thermal_state,
)

__version__ = "0.1.0"

__all__ = [
    "Ansatz", "EstimatorConfig", "GradientEstimate", "HighPeakTentSampler", "NumericalFault",
    "PauliString", "ThermalState", "TrainConfig", "TrainRecord", "WeightedPauliSum",
    "analytic_gradient", "analytic_hessian", "apply_phi", "build_sampler", "hadamard_test_p0",
    "hoeffding_shots", "kappa", "objective", "parse_hamiltonian", "parse_pauli", "qbge",
    "qbm_gse", "sample_complexity", "smoothness_constant", "thermal_state",
]
