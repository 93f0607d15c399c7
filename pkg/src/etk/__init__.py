"""Nonperturbative electron-transfer rates and thermodynamics in Debye solvents."""
from .core import CONSTANTS, HBAR, KB, EtSystem, eta, make_system, semiclassical_validity
from .cfkernel import (GreenElements, KernelElements, descend, green_from_kernel,
                       kernel_at, kernel_converged)
from .rates import RatePair, assemble_K, marcus_rate, rate_constants, rate_resolutions
from .thermo import ThermoResult, entropy_enthalpy, gibbs, kappa, tau_for_kappa
from .errors import *  # noqa: F401,F403

__version__ = "0.1.0"
