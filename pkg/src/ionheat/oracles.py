"""Independent cross-checks for the spectral solver.

Three routes to the same second moments, none of which touches the
eigendecomposition code path:

* ``lyapunov_steady_covariance`` solves the stationarity condition
  M C + C M^T = Sigma directly as a Kronecker-sum linear system.
* ``covariance_ode_at`` integrates the covariance flow
  dC/dt = -M C - C M^T + Sigma with a classical fourth-order
  one-step method.
* ``monte_carlo_temperatures`` samples the Langevin equation itself
  with seeded Euler-Maruyama trajectories.

An oracle is only useful if it fails differently than the system under
test, so these stay deliberately plain: dense linear algebra, fixed
step sizes, counter-derived per-trajectory seeds.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .baths import BathProfile, noise_strengths
from .errors import ConfigError, NoSteadyStateError, NumericalError
from .geometry import CouplingMatrix, _readonly
from .spectral import DriftMatrix, InitialMoments, thermal_initial

LYAPUNOV_MAX_IONS = 20        # 1600-unknown dense solve; oracle scale, not production
SYMMETRY_TOL = 1e-10
PSD_TOL = 1e-10
_ODE_RATE_MARGIN = 0.05       # step <= 0.05 / max(omega_max, gamma_max)
_VEC_ROUTE_MAX_IONS = 10      # above this the (2n)^2-dim step operator gets heavy
_DIRECT_STEP_CAP = 2_000_000
_MC_RATE_MARGIN = 0.02
_NOISE_WINDOW = 512           # steps per pre-drawn noise block, fixed for determinism


@dataclass(frozen=True)
class CovarianceMatrix:
    """Full symmetric covariance over the state (x_1..x_n, p_1..p_n)."""

    matrix: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.matrix, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] % 2:
            raise ConfigError(f"covariance must be square and even-sized, got {c.shape}")
        scale = max(float(np.abs(c).max()), 1e-30)
        skew = float(np.abs(c - c.T).max()) / scale
        if skew > SYMMETRY_TOL:
            raise NumericalError(f"covariance asymmetry {skew:.3e} relative exceeds {SYMMETRY_TOL:.0e}")
        c = (c + c.T) / 2.0
        smallest = float(np.linalg.eigvalsh(c).min())
        trace = float(np.trace(c))
        if smallest < -PSD_TOL * max(trace, 1e-30):
            raise NumericalError(
                f"covariance eigenvalue {smallest:.3e} is negative beyond "
                f"{PSD_TOL:.0e} of the trace {trace:.3e}"
            )
        object.__setattr__(self, "matrix", _readonly(c))

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // 2


@dataclass(frozen=True)
class EnsembleEstimate:
    """Trajectory-averaged temperatures with standard errors."""

    times: np.ndarray
    mean_temps: np.ndarray
    std_errs: np.ndarray
    n_traj: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "times", _readonly(self.times))
        object.__setattr__(self, "mean_temps", _readonly(self.mean_temps))
        object.__setattr__(self, "std_errs", _readonly(self.std_errs))


def _checked_strengths(strengths, n: int) -> np.ndarray:
    values = np.asarray(strengths, dtype=float)
    if values.shape != (n,):
        raise ConfigError(f"need {n} noise strengths, got shape {values.shape}")
    if not np.all(np.isfinite(values)) or values.min() < 0:
        raise ConfigError("noise strengths must be finite and non-negative")
    return values


def _noise_matrix(n: int, strengths: np.ndarray) -> np.ndarray:
    sigma = np.zeros((2 * n, 2 * n))
    sigma[n:, n:] = np.diag(strengths)
    return sigma


def covariance_from_moments(initial: InitialMoments) -> CovarianceMatrix:
    """Diagonal covariance of independent thermal ions."""
    return CovarianceMatrix(matrix=np.diag(np.concatenate([initial.x2, initial.p2])))


def temperatures_from_covariance(cov: CovarianceMatrix, coupling: CouplingMatrix) -> np.ndarray:
    """Mean phonon numbers from the diagonal of a full covariance."""
    n = cov.n
    if coupling.n != n:
        raise ConfigError(f"covariance is for {n} ions, coupling for {coupling.n}")
    w = coupling.local_freqs
    diag = np.diag(cov.matrix)
    return 0.5 * (w * diag[:n] + diag[n:] / w - 1.0)


def lyapunov_steady_covariance(drift: DriftMatrix, strengths) -> CovarianceMatrix:
    """Steady covariance from M C + C M^T = Sigma by dense vectorization.

    The Kronecker-sum system has dimension (2n)^2, so this is capped at
    n = 20. A singular system means some eigenvalue pair of the drift
    has zero real-part sum and no steady state exists.
    """
    n = drift.n
    if n > LYAPUNOV_MAX_IONS:
        raise ConfigError(
            f"direct steady-state solve is capped at {LYAPUNOV_MAX_IONS} ions, got {n}"
        )
    strengths = _checked_strengths(strengths, n)
    m = drift.matrix
    dim = 2 * n
    sigma = _noise_matrix(n, strengths)
    # Row-major vec: vec(M C + C M^T) = (kron(M, I) + kron(I, M)) vec(C).
    system = np.kron(m, np.eye(dim)) + np.kron(np.eye(dim), m)
    try:
        flat = np.linalg.solve(system, sigma.reshape(-1))
    except np.linalg.LinAlgError as exc:
        raise NoSteadyStateError(
            f"stationarity system is singular ({exc}); some drift eigenvalue "
            "pair has zero real-part sum and the chain never settles"
        ) from exc
    c = flat.reshape(dim, dim)
    residual = np.linalg.norm(m @ c + c @ m.T - sigma)
    scale = max(np.linalg.norm(sigma), np.linalg.norm(m) * np.linalg.norm(c), 1e-30)
    if residual > 1e-8 * scale:
        raise NoSteadyStateError(
            f"stationarity residual {residual:.3e} against scale {scale:.3e}; "
            "the system is numerically singular and no trustworthy steady "
            "state exists"
        )
    return CovarianceMatrix(matrix=c)


def _step_rates(drift: DriftMatrix) -> float:
    n = drift.n
    local_sq = np.diag(drift.matrix[n:, :n])
    omega_max = math.sqrt(float(np.abs(local_sq).max()))
    gamma_max = float(np.diag(drift.matrix[n:, n:]).max())
    return max(omega_max, gamma_max)


def _rk4_affine_step(step_linear: np.ndarray, source: np.ndarray, h: float):
    """One classical RK4 step of v' = L v + s as the affine map v -> R v + r.

    For an autonomous linear system the RK4 update collapses to the
    degree-4 Taylor polynomial of exp(hL) plus the matching polynomial
    applied to the source, which lets long horizons be covered by
    squaring the map instead of looping.
    """
    dim = step_linear.shape[0]
    hl = h * step_linear
    term = np.eye(dim)
    r = np.eye(dim)
    s = np.eye(dim)
    for k in (1, 2, 3, 4):
        term = hl @ term / k
        r = r + term
        if k < 4:
            s = s + term / (k + 1)
    return r, h * (s @ source)


def _affine_power(linear: np.ndarray, shift: np.ndarray, count: int):
    """Compose the affine map v -> linear v + shift with itself count times."""
    acc_linear = np.eye(linear.shape[0])
    acc_shift = np.zeros_like(shift)
    base_linear, base_shift = linear, shift
    while count:
        if count & 1:
            acc_shift = base_linear @ acc_shift + base_shift
            acc_linear = base_linear @ acc_linear
        count >>= 1
        if count:
            base_shift = base_linear @ base_shift + base_shift
            base_linear = base_linear @ base_linear
    return acc_linear, acc_shift


def covariance_ode_at(
    drift: DriftMatrix,
    strengths,
    c0: CovarianceMatrix,
    t: float,
    dt_max: float,
) -> CovarianceMatrix:
    """Covariance at time t by RK4 integration of the moment flow.

    The step is capped at 0.05 over the fastest rate in the drift. For
    small chains the per-step map is built once over vectorized
    covariances and composed by binary powering, so distant horizons
    cost log(steps) matrix products; larger chains fall back to plain
    stepping with a hard step-count cap.
    """
    if not (np.isfinite(t) and t >= 0):
        raise ConfigError(f"time must be finite and non-negative, got {t!r}")
    if not (np.isfinite(dt_max) and dt_max > 0):
        raise ConfigError(f"dt_max must be positive, got {dt_max!r}")
    n = drift.n
    if c0.n != n:
        raise ConfigError(f"initial covariance is for {c0.n} ions, drift has {n}")
    strengths = _checked_strengths(strengths, n)
    if t == 0.0:
        return c0

    h_cap = min(dt_max, _ODE_RATE_MARGIN / _step_rates(drift))
    steps = max(1, math.ceil(t / h_cap))
    h = t / steps
    if h <= 0.0:
        raise ConfigError(f"step underflow: t={t:g} over {steps} steps")

    m = drift.matrix
    sigma = _noise_matrix(n, strengths)
    if n <= _VEC_ROUTE_MAX_IONS:
        dim = 2 * n
        eye = np.eye(dim)
        step_linear = -(np.kron(m, eye) + np.kron(eye, m))
        r, shift = _rk4_affine_step(step_linear, sigma.reshape(-1), h)
        total_linear, total_shift = _affine_power(r, shift, steps)
        flat = total_linear @ c0.matrix.reshape(-1) + total_shift
        return CovarianceMatrix(matrix=flat.reshape(dim, dim))

    if steps > _DIRECT_STEP_CAP:
        raise ConfigError(
            f"integration to t={t:g} needs {steps} steps at the stability cap; "
            f"beyond {_DIRECT_STEP_CAP} this oracle refuses (use a smaller t)"
        )
    c = c0.matrix.copy()

    def flow(state):
        return sigma - m @ state - state @ m.T

    for _ in range(steps):
        k1 = flow(c)
        k2 = flow(c + (h / 2) * k1)
        k3 = flow(c + (h / 2) * k2)
        k4 = flow(c + h * k3)
        c += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return CovarianceMatrix(matrix=c)


def _simulate_block(
    first: int,
    last: int,
    seed: int,
    coupling_matrix: np.ndarray,
    gammas: np.ndarray,
    kick_scales: np.ndarray,
    driven: np.ndarray,
    sigma_x: np.ndarray,
    sigma_p: np.ndarray,
    local_freqs: np.ndarray,
    sample_steps: np.ndarray,
    total_steps: int,
    dt: float,
    out: np.ndarray,
):
    """Run trajectories [first, last) and write phonon estimates into out.

    Each trajectory k owns the generator seeded (seed, k) and draws, in
    order: n initial positions, n initial momenta, then per window one
    block of (steps, n_driven) momentum kicks. The stream layout never
    depends on block boundaries, so any partition over workers yields
    identical results.
    """
    size = last - first
    n = local_freqs.size
    rngs = [np.random.default_rng((seed, k)) for k in range(first, last)]
    x = np.empty((size, n))
    p = np.empty((size, n))
    for j, rng in enumerate(rngs):
        x[j] = rng.standard_normal(n) * sigma_x
        p[j] = rng.standard_normal(n) * sigma_p

    def record(slot):
        out[first:last, slot] = 0.5 * (local_freqs * x**2 + p**2 / local_freqs - 1.0)

    pointer = 0
    while pointer < sample_steps.size and sample_steps[pointer] == 0:
        record(pointer)
        pointer += 1

    n_driven = int(driven.sum())
    kicks_driven = kick_scales[driven]
    step = 0
    while step < total_steps:
        width = min(_NOISE_WINDOW, total_steps - step)
        noise = np.empty((size, width, n_driven))
        for j, rng in enumerate(rngs):
            noise[j] = rng.standard_normal((width, n_driven))
        for s in range(width):
            x += dt * p
            p -= dt * (x @ coupling_matrix + gammas * p)
            p[:, driven] += kicks_driven * noise[:, s, :]
            step += 1
            while pointer < sample_steps.size and sample_steps[pointer] == step:
                record(pointer)
                pointer += 1


def monte_carlo_temperatures(
    coupling: CouplingMatrix,
    profile: BathProfile,
    t0,
    times,
    n_traj: int,
    seed: int,
    dt: float,
    threads: int = 1,
) -> EnsembleEstimate:
    """Seeded Euler-Maruyama ensemble estimate of the temperature curves.

    Positions update before momenta within a step (the semi-implicit
    variant); the plain explicit update is unconditionally unstable for
    an undamped oscillator at any step this problem affords, while the
    semi-implicit one is stable and keeps the same weak first order.
    Momentum kicks have variance D_i dt. Sample times are snapped to
    the step grid and reported as snapped. Results are bit-identical
    for fixed (seed, dt, n_traj) at any thread count.
    """
    n = coupling.n
    if profile.n != n:
        raise ConfigError(f"profile has {profile.n} ions, coupling has {n}")
    if not isinstance(n_traj, int) or n_traj < 100:
        raise ConfigError(f"need at least 100 trajectories for a usable error bar, got {n_traj}")
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
    if not isinstance(threads, int) or threads < 1:
        raise ConfigError(f"threads must be a positive integer, got {threads!r}")
    rate = max(float(coupling.local_freqs.max()), float(profile.gammas.max()))
    cap = _MC_RATE_MARGIN / rate
    if not (np.isfinite(dt) and 0 < dt <= cap):
        raise ConfigError(
            f"dt must lie in (0, {cap:.3e}] for stability at the fastest rate "
            f"{rate:.3f}, got {dt!r}"
        )
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ConfigError("need a one-dimensional, non-empty time grid")
    if not (np.all(np.isfinite(times)) and times[0] >= 0):
        raise ConfigError("sample times must be finite and non-negative")
    if times.size > 1 and not np.all(np.diff(times) > 0):
        raise ConfigError("sample times must be strictly increasing")

    sample_steps = np.rint(times / dt).astype(np.int64)
    snapped = sample_steps * dt
    initial = thermal_initial(t0, coupling)
    strengths = noise_strengths(profile, coupling)
    driven = profile.driven
    kick_scales = np.sqrt(strengths * dt)

    estimates = np.empty((n_traj, times.size, n))
    bounds = np.linspace(0, n_traj, min(threads, n_traj) + 1).astype(int)
    args = dict(
        seed=seed,
        coupling_matrix=coupling.matrix,
        gammas=profile.gammas,
        kick_scales=kick_scales,
        driven=driven,
        sigma_x=np.sqrt(initial.x2),
        sigma_p=np.sqrt(initial.p2),
        local_freqs=coupling.local_freqs,
        sample_steps=sample_steps,
        total_steps=int(sample_steps[-1]),
        dt=dt,
        out=estimates,
    )
    if threads == 1:
        _simulate_block(0, n_traj, **args)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            jobs = [
                pool.submit(_simulate_block, int(a), int(b), **args)
                for a, b in zip(bounds[:-1], bounds[1:])
                if b > a
            ]
            for job in jobs:
                job.result()

    return EnsembleEstimate(
        times=snapped,
        mean_temps=estimates.mean(axis=0),
        std_errs=estimates.std(axis=0, ddof=1) / math.sqrt(n_traj),
        n_traj=n_traj,
        seed=seed,
    )
