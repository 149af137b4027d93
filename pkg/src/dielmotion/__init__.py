"""Electromagnetic momentum, forces and vacuum stresses in dispersive media."""

from .errors import InfeasibleError, InstabilityError, NonConvergenceError, ValidationError
from .susceptibility import (
    VACUUM,
    LorentzPole,
    SusceptibilityModel,
    coupling_alpha,
    discretize_reservoir,
    eval_chi,
    kk_real_from_imag,
    lorentz_model,
)

__version__ = "0.1.0"

__all__ = [
    "InfeasibleError",
    "InstabilityError",
    "NonConvergenceError",
    "ValidationError",
    "VACUUM",
    "LorentzPole",
    "SusceptibilityModel",
    "coupling_alpha",
    "discretize_reservoir",
    "eval_chi",
    "kk_real_from_imag",
    "lorentz_model",
]
