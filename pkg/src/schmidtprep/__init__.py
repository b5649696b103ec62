"""Staircase-circuit preparation of matrix product states by Schmidt spectrum optimisation."""

from ._accel import USE_NUMBA
from .circuit import Circuit, StaircaseLayer, Su4Gate, apply_circuit, apply_layer, prep_layer_from_chi2, prepare
from .errors import NumericalError, ResourceError, ShapeError, ValidationError
from .methods import METHODS, run_methods
from .mpd import mpd_disentangle
from .mps import (
    MPS,
    chi_k_fidelity,
    fidelity,
    from_statevector,
    ghz_state,
    overlap,
    product_state,
    random_mps,
    schmidt_spectra,
    to_statevector,
    truncate,
)
from .sso import SsoConfig, SynthesisReport, synthesize
from .tno import TnoConfig, fidelity_loss, optimize_joint, optimize_layerwise

__version__ = "0.1.0"

__all__ = [
    "METHODS",
    "MPS",
    "USE_NUMBA",
    "Circuit",
    "NumericalError",
    "ResourceError",
    "ShapeError",
    "SsoConfig",
    "StaircaseLayer",
    "Su4Gate",
    "SynthesisReport",
    "TnoConfig",
    "ValidationError",
    "apply_circuit",
    "apply_layer",
    "chi_k_fidelity",
    "fidelity",
    "fidelity_loss",
    "from_statevector",
    "ghz_state",
    "mpd_disentangle",
    "optimize_joint",
    "optimize_layerwise",
    "overlap",
    "prep_layer_from_chi2",
    "prepare",
    "product_state",
    "random_mps",
    "run_methods",
    "schmidt_spectra",
    "synthesize",
    "to_statevector",
    "truncate",
]
