"""Heterogeneous Gibbs mean-field systems on block graphs.

Finite N-particle Metropolis chains, their McKean-Vlasov limit, the
relative-entropy Lyapunov function and fixed-point analysis.
"""
from .energy import b_correction, energy_difference, flip_delta, total_energy
from .exceptions import (BlockGibbsError, BoundaryPoint, InconsistentFlip, ModelValidationError,
                         NonConvergence, NotAFixedPoint, SizeMismatch, StepTooLarge, TooLarge)
from .finite_system import (SimulationRun, detailed_balance_check, exact_stationary,
                            metropolis_generator, simulate)
from .fixed_points import (FixedPointReport, classify_stability, find_all_fixed_points,
                           self_consistency_iterate)
from .limit_system import generator, integrate, stationary_map, stationary_maps, vector_field
from .lyapunov import (descent_monitor, directional_derivative, free_energy_constant, gradient,
                       lyapunov_value, relative_entropy)
from .model import (Configuration, FlipProposal, ModelSpec, empirical_vector, example_model,
                    load_model, make_model, model_from_dict, model_to_dict, save_model,
                    validate_model)
from .trajectory import Trajectory

__all__ = [
    "BlockGibbsError", "BoundaryPoint", "Configuration", "FixedPointReport", "FlipProposal",
    "InconsistentFlip", "ModelSpec", "ModelValidationError", "NonConvergence", "NotAFixedPoint",
    "SimulationRun", "SizeMismatch", "StepTooLarge", "TooLarge", "Trajectory",
    "b_correction", "classify_stability", "descent_monitor", "detailed_balance_check",
    "directional_derivative", "empirical_vector", "energy_difference", "exact_stationary",
    "example_model", "find_all_fixed_points", "flip_delta", "free_energy_constant", "generator",
    "gradient", "integrate", "load_model", "lyapunov_value", "make_model",
    "metropolis_generator", "model_from_dict", "model_to_dict", "relative_entropy",
    "save_model", "self_consistency_iterate", "simulate", "stationary_map", "stationary_maps",
    "total_energy", "validate_model", "vector_field",
]
