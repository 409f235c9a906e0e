"""Conversion between dimensionless chain units and laboratory units.

The simulation measures length in the largest ion spacing d0, energy in
k_C e^2 / d0 and frequency in nu = sqrt(k_C e^2 / (m d0^3)). Whether a
dimensionless rate maps to nu (angular, rad/s) or nu / 2pi (cyclic, Hz)
is a convention choice that shifts reported times by 2pi, so the report
lists both readings side by side instead of picking one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

ATOMIC_MASS_KG = 1.66053906660e-27
ELEMENTARY_CHARGE_C = 1.602176634e-19
COULOMB_CONSTANT = 8.9875517873681764e9  # 1/(4 pi eps0), N m^2 / C^2

DEFAULT_MASS_AMU = 171.0   # ytterbium-171
DEFAULT_SPACING_M = 10e-6


@dataclass(frozen=True)
class UnitSystem:
    """Derived laboratory values of the dimensionless base units."""

    mass_amu: float
    d0_meters: float
    frequency_unit_rad_per_s: float
    frequency_unit_hz: float
    time_unit_s: float
    energy_unit_joule: float


def to_physical_units(mass_amu: float, d0_meters: float) -> UnitSystem:
    if not (mass_amu > 0 and math.isfinite(mass_amu)):
        raise ConfigError(f"ion mass must be positive, got {mass_amu!r}")
    if not (d0_meters > 0 and math.isfinite(d0_meters)):
        raise ConfigError(f"ion spacing must be positive, got {d0_meters!r}")
    mass_kg = mass_amu * ATOMIC_MASS_KG
    energy = COULOMB_CONSTANT * ELEMENTARY_CHARGE_C**2 / d0_meters
    nu = math.sqrt(energy / (mass_kg * d0_meters**2))
    return UnitSystem(
        mass_amu=mass_amu,
        d0_meters=d0_meters,
        frequency_unit_rad_per_s=nu,
        frequency_unit_hz=nu / (2.0 * math.pi),
        time_unit_s=1.0 / nu,
        energy_unit_joule=energy,
    )


def units_report(
    units: UnitSystem,
    omega_x: float = 10.0,
    gamma: float = 0.1,
    sample_time: float = 400.0,
) -> list[tuple[str, float, str]]:
    """(label, value, unit) rows for the conversion table.

    Times carry both the 1/nu and the 2pi/nu reading; published numbers
    for comparable chains are consistent with the cyclic one.
    """
    nu = units.frequency_unit_rad_per_s
    hz = units.frequency_unit_hz
    return [
        ("ion mass", units.mass_amu, "amu"),
        ("largest ion spacing d0", units.d0_meters, "m"),
        ("frequency unit (angular)", nu, "rad/s"),
        ("frequency unit (cyclic)", hz, "Hz"),
        ("energy unit", units.energy_unit_joule, "J"),
        ("time unit (angular convention)", 1.0 / nu, "s"),
        ("time unit (cyclic convention)", 2.0 * math.pi / nu, "s"),
        (f"omega_x = {omega_x:g}", omega_x * hz, "Hz"),
        (f"gamma = {gamma:g}", gamma * hz, "Hz"),
        (f"t = {sample_time:g} (angular convention)", sample_time / nu, "s"),
        (f"t = {sample_time:g} (cyclic convention)", sample_time * 2.0 * math.pi / nu, "s"),
    ]
