"""Diffusion of an impurity in a coherently coupled two-component condensate.

The package builds the bath spectral densities of the density and spin
Bogoliubov branches, the damping and noise kernels of the resulting
generalized Langevin equation, the Green functions through numerical
Laplace inversion, and the mean-square displacement with its anomalous
exponent and regime structure.
"""

from ._accel import BACKEND
from .params import (
    OMEGA_BAR,
    CouplingScenario,
    PhysicalConfig,
    derive_scales,
    load_config,
    nondimensionalize,
    prepare,
    redimensionalize,
    reference_config,
    validate,
)
from .spectrum import BranchLabel

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "OMEGA_BAR",
    "BranchLabel",
    "CouplingScenario",
    "PhysicalConfig",
    "derive_scales",
    "load_config",
    "nondimensionalize",
    "prepare",
    "redimensionalize",
    "reference_config",
    "validate",
    "__version__",
]
