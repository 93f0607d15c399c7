"""Reaction thermodynamics from detailed balance of the rate constants."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .core import HBAR, KB, EtSystem, semiclassical_validity
from .errors import ArgumentError, NonpositiveRateError
from .rates import rate_constants


@dataclass(frozen=True)
class ThermoResult:
    dg: float
    ds: float
    dh: float
    temperature_step: float
    validity_flag: bool


def gibbs_from_rates(forward, backward, temperature):
    if not (forward > 0 and backward > 0):
        raise NonpositiveRateError(forward, backward)
    return -KB * temperature * math.log(forward / backward)


def gibbs(sys: EtSystem, rel_tol: float = 1e-10) -> float:
    """Reaction Gibbs free energy -kT ln(k/k') in kJ/mol."""
    pair = rate_constants(sys, rel_tol)
    return gibbs_from_rates(pair.forward, pair.backward, sys.temperature)


def entropy_enthalpy(sys: EtSystem, delta_t: float = 1.0,
                     rel_tol: float = 1e-10) -> ThermoResult:
    """Central-difference entropy -d(dG)/dT and enthalpy dG + T dS."""
    if delta_t <= 0:
        raise ArgumentError("delta_t must be positive")
    if sys.temperature - delta_t <= 0:
        raise ArgumentError("temperature - delta_t must stay positive")
    dg = gibbs(sys, rel_tol)
    up = gibbs(sys.replace(temperature=sys.temperature + delta_t), rel_tol)
    down = gibbs(sys.replace(temperature=sys.temperature - delta_t), rel_tol)
    ds = -(up - down) / (2.0 * delta_t)
    dh = dg + sys.temperature * ds
    valid, _ = semiclassical_validity(sys)
    return ThermoResult(dg, ds, dh, float(delta_t), valid)


def kappa(sys: EtSystem) -> float:
    """Solvent modulation parameter hbar / (tau_l sqrt(2 kT lambda))."""
    return HBAR / (sys.tau_l * math.sqrt(2.0 * sys.kt * sys.lam))


def tau_for_kappa(lam, temperature, kappa_value=1.0):
    """Longitudinal time (ps) giving the requested kappa."""
    return HBAR / (kappa_value * math.sqrt(2.0 * KB * temperature * lam))
