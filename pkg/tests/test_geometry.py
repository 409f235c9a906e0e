"""Chain geometry and coupling matrix checks."""

import numpy as np
import pytest

from ionheat.errors import ConfigError, TrapTooWeakError, UnstableChainError
from ionheat.geometry import (
    DEFAULT_OMEGA_X,
    build_coupling_matrix,
    calibrate_axial_frequency,
    solve_equilibrium,
    uniform_positions,
)


def test_uniform_positions_sit_on_the_integer_grid():
    chain = uniform_positions(5)
    np.testing.assert_array_equal(chain.positions, np.arange(5.0))
    assert chain.max_gap == 1.0
    assert chain.trap.kind == "uniform"
    assert chain.trap.omega_x == DEFAULT_OMEGA_X


def test_uniform_single_ion():
    chain = uniform_positions(1)
    np.testing.assert_array_equal(chain.positions, [0.0])


@pytest.mark.parametrize("bad", [0, -3, 2.5, "4"])
def test_ion_count_must_be_a_positive_integer(bad):
    with pytest.raises(ConfigError):
        uniform_positions(bad)


def test_two_ion_equilibrium_closed_form():
    # trap pull omega_z^2 d/2 balances repulsion 1/d^2, so d^3 = 2/omega_z^2
    chain = solve_equilibrium(2, 1.0)
    gap = chain.positions[1] - chain.positions[0]
    assert gap == pytest.approx(2.0 ** (1.0 / 3.0), rel=1e-12)
    np.testing.assert_allclose(chain.positions, [-gap / 2, gap / 2], atol=1e-13)
    assert chain.max_gap == pytest.approx(gap, rel=1e-12)


def test_equilibrium_forces_balance_and_chain_is_symmetric():
    omega_z = 0.8
    chain = solve_equilibrium(7, omega_z)
    z = chain.positions
    assert np.all(np.diff(z) > 0)
    np.testing.assert_allclose(z, -z[::-1], atol=1e-12)
    for i in range(7):
        coulomb = sum(
            np.sign(z[i] - z[j]) / (z[i] - z[j]) ** 2 for j in range(7) if j != i
        )
        force = -omega_z**2 * z[i] + coulomb
        assert abs(force) < 1e-11


def test_calibrated_axial_frequency_gives_unit_largest_gap():
    for n in (2, 5, 12):
        chain = solve_equilibrium(n, calibrate_axial_frequency(n))
        assert chain.max_gap == pytest.approx(1.0, abs=1e-9)


def test_calibration_weakens_for_longer_chains():
    values = [calibrate_axial_frequency(n) for n in (3, 8, 20, 50)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_three_ion_coupling_matrix_by_hand():
    # unit spacing: neighbor springs 1, next-nearest 1/8
    coupling = build_coupling_matrix(uniform_positions(3))
    a = coupling.matrix
    assert a[0, 0] == pytest.approx(100.0 - 1.0 - 0.125, rel=1e-15)
    assert a[1, 1] == pytest.approx(100.0 - 2.0, rel=1e-15)
    assert a[0, 1] == pytest.approx(1.0, rel=1e-15)
    assert a[0, 2] == pytest.approx(0.125, rel=1e-15)
    np.testing.assert_array_equal(a, a.T)
    np.testing.assert_allclose(coupling.local_freqs, np.sqrt(np.diag(a)), rtol=1e-15)


def test_coupling_matrix_is_mirror_symmetric():
    for chain in (uniform_positions(9), solve_equilibrium(8, 0.6)):
        m = build_coupling_matrix(chain).matrix
        np.testing.assert_allclose(m, m[::-1, ::-1], atol=1e-12)


def test_weak_radial_trap_rejected():
    with pytest.raises(TrapTooWeakError):
        build_coupling_matrix(uniform_positions(3), omega_x=1.2)


def test_buckling_instability_detected_before_any_mode_goes_soft():
    # at omega_x = 1.9 every local frequency is still real but the
    # staggered mode of a 20 ion chain has negative stiffness
    with pytest.raises(UnstableChainError):
        build_coupling_matrix(uniform_positions(20), omega_x=1.9)


def test_omega_x_override_changes_only_the_diagonal():
    chain = uniform_positions(4)
    base = build_coupling_matrix(chain).matrix
    shifted = build_coupling_matrix(chain, omega_x=12.0).matrix
    delta = shifted - base
    np.testing.assert_allclose(np.diag(delta), 12.0**2 - 10.0**2, rtol=1e-14)
    np.testing.assert_allclose(delta - np.diag(np.diag(delta)), 0.0, atol=0)


def test_chain_arrays_are_frozen():
    chain = uniform_positions(4)
    with pytest.raises(ValueError):
        chain.positions[0] = 5.0
    coupling = build_coupling_matrix(chain)
    with pytest.raises(ValueError):
        coupling.matrix[0, 0] = 0.0
