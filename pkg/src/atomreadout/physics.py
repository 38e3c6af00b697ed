"""Atomic physics of resonant fluorescence collection from a trapped atom.

The quantities here are the analytic backbone of the simulator: the photon
scattering rate of a saturated two-level cycling transition, the photon recoil
energy, and the number of scattering events an atom can sustain before the
accumulated recoil heating ejects it from a conservative trap of finite depth.

All interfaces use SI units.  Unit conversion (mK, ms, MHz, ...) happens at
the configuration boundary, never inside the physics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ParameterError",
    "ATOMIC_MASS_UNIT",
    "RB87_MASS",
    "PhysicalConstants",
    "TrapConfig",
    "ProbeConfig",
    "DetectorConfig",
    "scattering_rate",
    "recoil_energy",
    "recoil_budget",
    "expected_counts",
    "saturation_from_intensity",
]


class ParameterError(ValueError):
    """A physical parameter is outside its valid domain."""


# CODATA 2018 exact values.
_HBAR = 1.054571817e-34          # J s
_K_BOLTZMANN = 1.380649e-23      # J / K
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg

# 87Rb atomic mass, CODATA/AME in unified atomic mass units.
RB87_MASS = 86.909180527 * ATOMIC_MASS_UNIT


def _require_positive(name: str, value: float) -> None:
    if not value > 0 or not math.isfinite(value):
        raise ParameterError(f"{name} must be positive and finite, got {value!r}")


def _require_fraction(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ParameterError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class PhysicalConstants:
    """Constants of the probed optical transition and of the atom carrying it.

    Defaults describe the D2 cycling transition of 87Rb.  Other species are
    legal inputs; nothing downstream assumes these particular numbers.

    Attributes
    ----------
    gamma:
        Natural linewidth of the transition (angular frequency, rad/s).
    saturation_intensity:
        Saturation intensity of the transition (W/m^2).  Carried for
        converting a measured beam intensity into a saturation parameter;
        the rate formulas themselves take the saturation parameter directly.
    wavelength:
        Transition wavelength (m).
    mass:
        Atomic mass (kg).
    hbar, k_boltzmann:
        Universal constants (SI), overridable only for unit experiments.
    """

    gamma: float = 2.0 * math.pi * 6.0e6
    saturation_intensity: float = 16.7
    wavelength: float = 780e-9
    mass: float = RB87_MASS
    hbar: float = _HBAR
    k_boltzmann: float = _K_BOLTZMANN

    def __post_init__(self) -> None:
        for name in ("gamma", "saturation_intensity", "wavelength", "mass",
                     "hbar", "k_boltzmann"):
            _require_positive(f"constants.{name}", getattr(self, name))


@dataclass(frozen=True)
class TrapConfig:
    """Conservative trap holding the atom during the probe.

    Attributes
    ----------
    depth:
        Trap depth expressed as a temperature (K).  An atom whose total
        energy exceeds ``k_B * depth`` is no longer bound.
    atom_temperature:
        Temperature of the atom's initial thermal energy distribution (K).
    heating_per_scatter:
        Energy gained per scattering event, in units of the photon recoil
        energy.  The default of 2 accounts for one absorption plus one
        spontaneous emission recoil.
    """

    depth: float
    atom_temperature: float = 35e-6
    heating_per_scatter: float = 2.0

    def __post_init__(self) -> None:
        _require_positive("trap.depth", self.depth)
        if self.atom_temperature < 0 or not math.isfinite(self.atom_temperature):
            raise ParameterError(
                f"trap.atom_temperature must be >= 0, got {self.atom_temperature!r}")
        if self.heating_per_scatter < 0 or not math.isfinite(self.heating_per_scatter):
            raise ParameterError(
                f"trap.heating_per_scatter must be >= 0, got {self.heating_per_scatter!r}")


@dataclass(frozen=True)
class ProbeConfig:
    """Resonant probe pulse: saturation parameter and duration (s)."""

    saturation: float
    duration: float

    def __post_init__(self) -> None:
        if self.saturation < 0 or not math.isfinite(self.saturation):
            raise ParameterError(
                f"probe.saturation must be >= 0, got {self.saturation!r}")
        if self.duration < 0 or not math.isfinite(self.duration):
            raise ParameterError(
                f"probe.duration must be >= 0, got {self.duration!r}")


@dataclass(frozen=True)
class DetectorConfig:
    """Photon collection and counting chain.

    ``collection_efficiency`` is the end-to-end probability that a scattered
    photon produces a count (solid angle, optical losses, quantum efficiency
    folded together).  ``dark_count_rate`` is the count rate with no atom
    present (1/s), treated as Poissonian.
    """

    collection_efficiency: float = 0.006
    dark_count_rate: float = 130.0

    def __post_init__(self) -> None:
        _require_fraction("detector.collection_efficiency", self.collection_efficiency)
        if self.dark_count_rate < 0 or not math.isfinite(self.dark_count_rate):
            raise ParameterError(
                f"detector.dark_count_rate must be >= 0, got {self.dark_count_rate!r}")


def scattering_rate(constants: PhysicalConstants, probe: ProbeConfig) -> float:
    """Photon scattering rate of the resonantly probed atom (1/s).

    For a two-level atom driven on resonance with saturation parameter s the
    rate is (gamma / 2) * s / (1 + s).  It approaches gamma / 2 from below as
    s grows but never reaches it for finite s.
    """
    s = probe.saturation
    return 0.5 * constants.gamma * s / (1.0 + s)


def recoil_energy(constants: PhysicalConstants) -> float:
    """Single-photon recoil energy (hbar k)^2 / 2m in joules."""
    k = 2.0 * math.pi / constants.wavelength
    return (constants.hbar * k) ** 2 / (2.0 * constants.mass)


def recoil_budget(constants: PhysicalConstants, trap: TrapConfig) -> float:
    """Number of scattering events that fills the trap depth with recoil heat.

    Each scattering event deposits ``heating_per_scatter`` recoil energies,
    so an atom starting at rest supports about
    ``k_B * depth / (heating_per_scatter * E_recoil)`` events before it is
    ejected.  The budget is linear in the trap depth.  A heating factor of
    zero means scattering never heats the atom; the budget is then infinite.
    """
    if trap.heating_per_scatter == 0.0:
        return math.inf
    heat = trap.heating_per_scatter * recoil_energy(constants)
    return constants.k_boltzmann * trap.depth / heat


def expected_counts(
    constants: PhysicalConstants,
    probe: ProbeConfig,
    detector: DetectorConfig,
) -> tuple[float, float]:
    """Expected detector counts per probe window for a dark and a bright atom.

    Returns ``(mean_dark, mean_bright)``.  A dark atom contributes nothing,
    so its expectation is the dark-count background alone; a bright atom adds
    the collected fluorescence on top of that same background.  Consequently
    ``mean_bright >= mean_dark`` with equality exactly when no fluorescence
    is collected (zero efficiency, zero saturation, or zero duration).
    """
    background = detector.dark_count_rate * probe.duration
    signal = (detector.collection_efficiency
              * scattering_rate(constants, probe) * probe.duration)
    return background, signal + background


def saturation_from_intensity(constants: PhysicalConstants, intensity: float) -> float:
    """Convert a probe beam intensity (W/m^2) to a saturation parameter."""
    if intensity < 0 or not math.isfinite(intensity):
        raise ParameterError(f"intensity must be >= 0, got {intensity!r}")
    return intensity / constants.saturation_intensity
