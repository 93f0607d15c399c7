"""Physical constants, unit conventions and the two-state ET system.

Units throughout the package: energies in kJ/mol, times in ps, temperature
in K, rates in 1/ps.  With these units hbar and k_B take the values below.
Literature Debye times convert to the longitudinal time via
``tau_l = tau_d * eps_inf / eps_0``; etk takes ``tau_l`` directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError

HBAR = 0.0635077993  # kJ ps / mol
KB = 0.0083144626  # kJ / (mol K)


@dataclass(frozen=True)
class Constants:
    hbar: float = HBAR
    kb: float = KB


CONSTANTS = Constants()


@dataclass(frozen=True)
class EtSystem:
    """Donor/acceptor pair in a Debye solvent.

    Attributes
    ----------
    e0 : float
        Reaction endothermicity, kJ/mol.
    lam : float
        Solvent reorganization energy, kJ/mol.
    v : float
        Transfer coupling, kJ/mol.
    temperature : float
        Kelvin.
    tau_l : float
        Longitudinal solvent relaxation time, ps.
    """

    e0: float
    lam: float
    v: float
    temperature: float
    tau_l: float

    def __post_init__(self):
        for name in ("e0", "lam", "v", "temperature", "tau_l"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ParameterError("lambda" if name == "lam" else name, f"must be a finite real number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.lam <= 0:
            raise ParameterError("lambda", f"must be > 0, got {self.lam}")
        if self.temperature <= 0:
            raise ParameterError("temperature", f"must be > 0, got {self.temperature}")
        if self.tau_l <= 0:
            raise ParameterError("tau_l", f"must be > 0, got {self.tau_l}")

    @property
    def gamma(self) -> float:
        """Solvent relaxation rate 1/tau_l in 1/ps."""
        return 1.0 / self.tau_l

    @property
    def kt(self) -> float:
        return KB * self.temperature

    def replace(self, **changes) -> "EtSystem":
        fields = dict(e0=self.e0, lam=self.lam, v=self.v,
                      temperature=self.temperature, tau_l=self.tau_l)
        if "lambda" in changes:
            changes["lam"] = changes.pop("lambda")
        fields.update(changes)
        return EtSystem(**fields)

    def as_tuple(self):
        return (self.e0, self.lam, self.v, self.temperature, self.tau_l)


def make_system(e0, lam, v, temperature, tau_l) -> EtSystem:
    """Validated constructor; raises ParameterError naming the bad field."""
    return EtSystem(e0=e0, lam=lam, v=v, temperature=temperature, tau_l=tau_l)


def eta(sys: EtSystem) -> complex:
    """Bath coupling constant lambda (2 kT - i hbar gamma) / hbar**2, in 1/ps**2."""
    return sys.lam * complex(2.0 * sys.kt, -HBAR * sys.gamma) / HBAR**2


def semiclassical_validity(sys: EtSystem):
    """Return ``(valid, ratio)`` with ratio = kT / sqrt(V**2 + E0**2/4).

    The high-temperature bath can yield negative populations and rates when
    the ratio drops below one; callers warn rather than fail.
    """
    scale = math.sqrt(sys.v**2 + 0.25 * sys.e0**2)
    if scale == 0.0:
        return True, math.inf
    ratio = sys.kt / scale
    return ratio >= 1.0, ratio
