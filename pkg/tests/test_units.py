"""Laboratory unit conversion checks."""

import math

import pytest

from ionheat.errors import ConfigError
from ionheat.units import to_physical_units, units_report


def test_ytterbium_reference_point():
    # 171 amu at 10 um spacing: the frequency unit lands near 0.9 MHz
    # angular, 0.14 MHz cyclic
    units = to_physical_units(171.0, 10e-6)
    assert units.frequency_unit_rad_per_s == pytest.approx(9.01e5, rel=2e-3)
    assert units.frequency_unit_hz == pytest.approx(units.frequency_unit_rad_per_s / (2 * math.pi), rel=1e-12)
    assert units.time_unit_s == pytest.approx(1.0 / units.frequency_unit_rad_per_s, rel=1e-12)


def test_default_trap_maps_to_laboratory_scales():
    units = to_physical_units(171.0, 10e-6)
    # omega_x = 10 is a radial trap in the MHz range; gamma = 0.1 is a
    # drive in the tens of kHz
    assert units.frequency_unit_hz * 10.0 == pytest.approx(1.43e6, rel=0.05)
    assert units.frequency_unit_hz * 0.1 == pytest.approx(14.3e3, rel=0.05)


def test_report_carries_both_time_conventions():
    units = to_physical_units(171.0, 10e-6)
    rows = units_report(units, omega_x=10.0, gamma=0.1, sample_time=400.0)
    labels = [label for label, _, _ in rows]
    assert any("angular convention" in label for label in labels)
    assert any("cyclic convention" in label for label in labels)
    values = {label: (value, unit) for label, value, unit in rows}
    angular, _ = values["t = 400 (angular convention)"]
    cyclic, _ = values["t = 400 (cyclic convention)"]
    assert cyclic == pytest.approx(angular * 2 * math.pi, rel=1e-12)


def test_heavier_ions_and_wider_spacings_slow_the_clock():
    base = to_physical_units(171.0, 10e-6)
    heavy = to_physical_units(342.0, 10e-6)
    wide = to_physical_units(171.0, 20e-6)
    assert heavy.time_unit_s > base.time_unit_s
    assert wide.time_unit_s > base.time_unit_s
    # nu scales as d0^(-3/2)
    assert wide.frequency_unit_rad_per_s == pytest.approx(
        base.frequency_unit_rad_per_s / 2**1.5, rel=1e-12
    )


@pytest.mark.parametrize("mass,d0", [(0.0, 1e-5), (-1.0, 1e-5), (171.0, 0.0), (math.nan, 1e-5)])
def test_unit_validation(mass, d0):
    with pytest.raises(ConfigError):
        to_physical_units(mass, d0)
