"""Reference-route checks: Lyapunov solve, moment ODE, trajectory ensemble.

The ODE integrator is compared against a matrix exponential built by
scipy, and the trajectory ensemble against a from-scratch transcript of
the scheme, so each route is pinned by something it does not share code
with.
"""

import math

import numpy as np
import pytest
import scipy.linalg

import ionheat.oracles as oracles
from ionheat.baths import BathAttachment, assemble_profile, noise_strengths
from ionheat.errors import ConfigError, NoSteadyStateError, NumericalError
from ionheat.geometry import build_coupling_matrix, uniform_positions
from ionheat.oracles import (
    CovarianceMatrix,
    covariance_from_moments,
    covariance_ode_at,
    lyapunov_steady_covariance,
    monte_carlo_temperatures,
    temperatures_from_covariance,
)
from ionheat.spectral import (
    build_drift_matrix,
    decompose,
    evolve_temperatures,
    steady_state_temperatures,
    thermal_initial,
)


def setup_chain(n, attachments, t0=5.0):
    coupling = build_coupling_matrix(uniform_positions(n))
    profile = assemble_profile(n, attachments)
    drift = build_drift_matrix(coupling, profile)
    strengths = noise_strengths(profile, coupling)
    initial = thermal_initial(t0, coupling)
    return coupling, profile, drift, strengths, initial


def single_ion(gamma, temperature, t0=5.0):
    return setup_chain(
        1, [BathAttachment(ion_index=1, gamma=gamma, temperature=temperature)], t0
    )


def mixed_three():
    return setup_chain(
        3,
        [
            BathAttachment(ion_index=1, gamma=0.8, temperature=1.0),
            BathAttachment(ion_index=3, gamma=0.05, temperature=8.0),
        ],
        t0=4.0,
    )


def expm_covariance(drift, strengths, c0, t):
    dim = 2 * drift.n
    a = -drift.matrix
    sigma = np.zeros((dim, dim))
    sigma[drift.n :, drift.n :] = np.diag(strengths)
    blk = np.zeros((2 * dim, 2 * dim))
    blk[:dim, :dim] = a
    blk[:dim, dim:] = sigma
    blk[dim:, dim:] = -a.T
    e = scipy.linalg.expm(blk * t)
    e11, e12 = e[:dim, :dim], e[:dim, dim:]
    return e11 @ c0.matrix @ e11.T + e12 @ e11.T


def test_covariance_matrix_validation():
    with pytest.raises(ConfigError):
        CovarianceMatrix(matrix=np.eye(3))
    with pytest.raises(NumericalError):
        CovarianceMatrix(matrix=np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(NumericalError):
        CovarianceMatrix(matrix=np.diag([1.0, -1.0]))


def test_covariance_from_moments_layout():
    _, _, _, _, initial = mixed_three()
    cov = covariance_from_moments(initial)
    np.testing.assert_array_equal(
        np.diag(cov.matrix), np.concatenate([initial.x2, initial.p2])
    )
    assert cov.n == 3


def test_lyapunov_single_ion_closed_form():
    # one damped ion settles exactly onto its bath: x2=(T+1/2)/w, p2=(T+1/2)w
    coupling, _, drift, strengths, _ = single_ion(0.3, 2.0)
    cov = lyapunov_steady_covariance(drift, strengths)
    assert cov.matrix[0, 0] == pytest.approx(2.5 / 10.0, rel=1e-13)
    assert cov.matrix[1, 1] == pytest.approx(2.5 * 10.0, rel=1e-13)
    temps = temperatures_from_covariance(cov, coupling)
    assert temps[0] == pytest.approx(2.0, abs=1e-13)


def test_lyapunov_agrees_with_spectral_steady_state():
    coupling, _, drift, strengths, _ = setup_chain(
        5,
        [
            BathAttachment(ion_index=1, gamma=0.5, temperature=2.0),
            BathAttachment(ion_index=3, gamma=0.02, temperature=6.0),
            BathAttachment(ion_index=5, gamma=1.5, temperature=9.0),
        ],
    )
    direct = temperatures_from_covariance(
        lyapunov_steady_covariance(drift, strengths), coupling
    )
    spectral = steady_state_temperatures(decompose(drift), strengths, coupling)
    np.testing.assert_allclose(direct, spectral.temperatures, atol=1e-10)


def test_lyapunov_refuses_an_undamped_chain():
    from ionheat.spectral import DriftMatrix

    coupling = build_coupling_matrix(uniform_positions(2))
    profile = assemble_profile(
        2, [BathAttachment(ion_index=1, gamma=0.1, temperature=1.0)]
    )
    undamped = build_drift_matrix(coupling, profile).matrix.copy()
    undamped[2:, 2:] = 0.0
    with pytest.raises(NoSteadyStateError):
        lyapunov_steady_covariance(
            DriftMatrix(matrix=undamped, n=2), np.array([1.0, 1.0])
        )


def test_lyapunov_size_cap():
    n = 21
    coupling = build_coupling_matrix(uniform_positions(n))
    profile = assemble_profile(
        n, [BathAttachment(ion_index=1, gamma=0.1, temperature=1.0)]
    )
    drift = build_drift_matrix(coupling, profile)
    with pytest.raises(ConfigError, match="capped"):
        lyapunov_steady_covariance(drift, noise_strengths(profile, coupling))


def test_ode_time_zero_returns_the_initial_covariance():
    _, _, drift, strengths, initial = single_ion(0.3, 2.0)
    c0 = covariance_from_moments(initial)
    assert covariance_ode_at(drift, strengths, c0, 0.0, dt_max=0.1) is c0


@pytest.mark.parametrize("t", [0.8, 6.0])
def test_ode_matches_matrix_exponential(t):
    _, _, drift, strengths, initial = mixed_three()
    c0 = covariance_from_moments(initial)
    out = covariance_ode_at(drift, strengths, c0, t, dt_max=1e-3)
    ref = expm_covariance(drift, strengths, c0, t)
    np.testing.assert_allclose(out.matrix, ref, atol=1e-9)


def test_ode_is_fourth_order_in_the_step():
    _, _, drift, strengths, initial = single_ion(1.0, 3.0, t0=2.0)
    c0 = covariance_from_moments(initial)
    t = 0.8
    ref = expm_covariance(drift, strengths, c0, t)

    def err(h):
        out = covariance_ode_at(drift, strengths, c0, t, dt_max=h)
        return float(np.abs(out.matrix - ref).max())

    ratio = err(4e-3) / err(2e-3)
    assert 12.0 < ratio < 20.0


def test_ode_long_horizon_lands_on_the_lyapunov_fixed_point():
    _, _, drift, strengths, initial = mixed_three()
    c0 = covariance_from_moments(initial)
    out = covariance_ode_at(drift, strengths, c0, 1e6, dt_max=1.0)
    steady = lyapunov_steady_covariance(drift, strengths)
    np.testing.assert_allclose(out.matrix, steady.matrix, atol=1e-11)


def test_ode_vectorized_and_direct_routes_agree(monkeypatch):
    _, _, drift, strengths, initial = mixed_three()
    c0 = covariance_from_moments(initial)
    fast = covariance_ode_at(drift, strengths, c0, 3.0, dt_max=1e-2)
    monkeypatch.setattr(oracles, "_VEC_ROUTE_MAX_IONS", 0)
    plain = covariance_ode_at(drift, strengths, c0, 3.0, dt_max=1e-2)
    np.testing.assert_allclose(fast.matrix, plain.matrix, atol=1e-10)


def test_ode_step_budget_is_enforced(monkeypatch):
    _, _, drift, strengths, initial = mixed_three()
    c0 = covariance_from_moments(initial)
    monkeypatch.setattr(oracles, "_VEC_ROUTE_MAX_IONS", 0)
    with pytest.raises(ConfigError, match="steps"):
        covariance_ode_at(drift, strengths, c0, 1e9, dt_max=1e-3)


def reference_ensemble(coupling, profile, t0, times, n_traj, seed, dt):
    """Line-for-line independent transcript of the trajectory scheme."""
    n = coupling.n
    w = coupling.local_freqs
    a = coupling.matrix
    gammas = profile.gammas
    driven = profile.gammas > 0
    d = 2.0 * gammas * w * (profile.temperatures + 0.5)
    kick = np.sqrt(d * dt)[driven]
    sample_steps = np.rint(np.asarray(times) / dt).astype(int)
    out = np.empty((n_traj, len(sample_steps), n))
    for k in range(n_traj):
        rng = np.random.default_rng((seed, k))
        x = rng.standard_normal(n) * np.sqrt((t0 + 0.5) / w)
        p = rng.standard_normal(n) * np.sqrt((t0 + 0.5) * w)
        pointer = 0
        while pointer < len(sample_steps) and sample_steps[pointer] == 0:
            out[k, pointer] = 0.5 * (w * x**2 + p**2 / w - 1.0)
            pointer += 1
        step = 0
        total = int(sample_steps[-1])
        while step < total:
            width = min(512, total - step)
            noise = rng.standard_normal((width, int(driven.sum())))
            for s in range(width):
                x = x + dt * p
                p = p - dt * (a @ x + gammas * p)
                p[driven] += kick * noise[s]
                step += 1
                while pointer < len(sample_steps) and sample_steps[pointer] == step:
                    out[k, pointer] = 0.5 * (w * x**2 + p**2 / w - 1.0)
                    pointer += 1
    return out.mean(axis=0)


def test_ensemble_matches_an_independent_transcript():
    # same seeds, same stream layout, scalar loops instead of batched
    # matrix products: anything beyond BLAS-kernel rounding (update
    # order, kick scale, window or seeding layout) shows up loudly
    coupling, profile, _, _, _ = setup_chain(
        2,
        [
            BathAttachment(ion_index=1, gamma=0.5, temperature=3.0),
            BathAttachment(ion_index=2, gamma=0.2, temperature=7.0),
        ],
    )
    times = (0.0, 0.7, 1.4)
    est = monte_carlo_temperatures(
        coupling, profile, t0=1.0, times=times, n_traj=100, seed=11, dt=1e-3
    )
    ref = reference_ensemble(coupling, profile, 1.0, times, 100, 11, 1e-3)
    np.testing.assert_allclose(est.mean_temps, ref, rtol=0, atol=5e-14)


def test_ensemble_is_reproducible_and_thread_invariant():
    coupling, profile, _, _, _ = setup_chain(
        2,
        [
            BathAttachment(ion_index=1, gamma=0.5, temperature=3.0),
            BathAttachment(ion_index=2, gamma=0.2, temperature=7.0),
        ],
    )
    kwargs = dict(t0=1.0, times=(0.5, 1.5), n_traj=120, seed=3, dt=1e-3)
    first = monte_carlo_temperatures(coupling, profile, **kwargs)
    again = monte_carlo_temperatures(coupling, profile, **kwargs)
    threaded = monte_carlo_temperatures(coupling, profile, threads=3, **kwargs)
    np.testing.assert_array_equal(first.mean_temps, again.mean_temps)
    np.testing.assert_array_equal(first.mean_temps, threaded.mean_temps)
    np.testing.assert_array_equal(first.std_errs, threaded.std_errs)


def test_ensemble_snaps_sample_times_to_the_step_grid():
    coupling, profile, _, _, _ = single_ion(0.5, 3.0)
    est = monte_carlo_temperatures(
        coupling, profile, t0=1.0, times=(0.00049, 0.0017), n_traj=100, seed=0, dt=1e-3
    )
    np.testing.assert_array_equal(est.times, [0.0, 0.002])


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_traj=99, seed=0, dt=1e-3),
        dict(n_traj=100, seed=-1, dt=1e-3),
        dict(n_traj=100, seed=0, dt=0.01),
        dict(n_traj=100, seed=0, dt=0.0),
        dict(n_traj=100.0, seed=0, dt=1e-3),
    ],
)
def test_ensemble_input_validation(kwargs):
    coupling, profile, _, _, _ = single_ion(0.5, 3.0)
    with pytest.raises(ConfigError):
        monte_carlo_temperatures(coupling, profile, t0=1.0, times=(0.5,), **kwargs)


def test_ensemble_tracks_the_exact_transient_within_error_bars():
    coupling, profile, drift, strengths, initial = single_ion(0.8, 5.0, t0=0.0)
    times = np.array([1.0, 5.0, 12.0])
    est = monte_carlo_temperatures(
        coupling, profile, t0=0.0, times=times, n_traj=2000, seed=4, dt=1.5e-3
    )
    exact = evolve_temperatures(
        decompose(drift), initial, strengths, coupling, est.times
    )
    pulls = (est.mean_temps[:, 0] - exact.temperatures[:, 0]) / est.std_errs[:, 0]
    assert np.abs(pulls).max() < 3.0
