"""Exact second-moment dynamics of the damped, noise-driven chain.

The transverse phase-space vector q = (x_1..x_n, p_1..p_n) obeys the
linear Langevin equation dq/dt = -M q + eta with drift

    M = [[0, -1], [A, diag(gamma_i)]]

and independent white momentum noise of strength D_i on each driven
ion. Diagonalising M = U diag(lambda_a) U^{-1} turns the formal
solution into a closed form for every second moment at every time:
with pair sums s_ab = lambda_a + lambda_b, E_ab(t) = exp(-s_ab t), and
the pair kernels

    K_ab = sum_i x2_i(0) Uinv[a,i]   Uinv[b,i]
         + sum_i p2_i(0) Uinv[a,i+n] Uinv[b,i+n]
    S_ab = sum_i D_i     Uinv[a,i+n] Uinv[b,i+n] / s_ab

the moments are <q_mu(t)^2> = sum_ab U[mu,a] U[mu,b] (E_ab K_ab +
(1 - E_ab) S_ab). No time stepping is involved: late times cost the
same as early ones, and t -> infinity collapses onto the S kernel
alone, which is the steady state. Accuracy is set by the conditioning
of the eigenvector basis, not by the span of the time grid.

Local temperatures are mean phonon numbers of the local modes,

    T_i = (omega_i <x_i^2> + <p_i^2> / omega_i - 1) / 2,

which makes a single driven ion relax exactly to its bath temperature.
The initial state is restricted to diagonal covariances (independent
thermal ions), which covers every scenario in this study.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .baths import BathProfile
from .errors import (
    ConfigError,
    DefectiveSpectrumError,
    IllConditionedSteadyStateError,
    NoSteadyStateError,
    NumericalError,
)
from .geometry import CouplingMatrix, _readonly

EIG_REAL_FLOOR = -1e-12       # damped drift must not produce growing modes
PAIR_SUM_FLOOR = 1e-13        # below this, 1/(lambda_a + lambda_b) is refused
U_CONDITION_CAP = 1e12
RECONSTRUCTION_TOL = 1e-10
IMAG_RESIDUE_TOL = 1e-8

# Negative temperatures below this are a hard error, above it numerical
# noise around the zero-point cancellation that we clamp away.
TEMPERATURE_FLOOR = -1e-6
_CLAMP_WARN_BELOW = -1e-9


@dataclass(frozen=True)
class DriftMatrix:
    """Real 2n x 2n drift of dq/dt = -M q + eta."""

    matrix: np.ndarray
    n: int

    def __post_init__(self):
        object.__setattr__(self, "matrix", _readonly(self.matrix))
        if self.matrix.shape != (2 * self.n, 2 * self.n):
            raise ConfigError(
                f"drift for n={self.n} must be {2*self.n}x{2*self.n}, got {self.matrix.shape}"
            )


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigensystem of the drift matrix plus its conditioning diagnostics."""

    eigenvalues: np.ndarray
    vectors: np.ndarray
    vectors_inv: np.ndarray
    min_sum_real: float
    condition_number: float
    n: int


@dataclass(frozen=True)
class InitialMoments:
    """Diagonal initial covariance: <x_i^2> and <p_i^2> per ion."""

    x2: np.ndarray
    p2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x2", _readonly(self.x2))
        object.__setattr__(self, "p2", _readonly(self.p2))
        if self.x2.ndim != 1 or self.p2.shape != self.x2.shape:
            raise ConfigError("x2 and p2 must be equal-length vectors")
        if not (np.all(self.x2 > 0) and np.all(self.p2 > 0)):
            raise ConfigError("initial second moments must be positive")

    @property
    def n(self) -> int:
        return self.x2.size


@dataclass(frozen=True)
class SecondMoments:
    """Position and momentum variances per ion at one instant."""

    x2: np.ndarray
    p2: np.ndarray
    time: float

    def __post_init__(self):
        object.__setattr__(self, "x2", _readonly(self.x2))
        object.__setattr__(self, "p2", _readonly(self.p2))


@dataclass(frozen=True)
class TemperatureProfile:
    """Per-ion mean phonon numbers; time is math.inf for a steady state."""

    temperatures: np.ndarray
    time: float

    def __post_init__(self):
        object.__setattr__(self, "temperatures", _readonly(self.temperatures))

    @property
    def n(self) -> int:
        return self.temperatures.size


@dataclass(frozen=True)
class TemperatureSeries:
    """Temperatures on a time grid, shaped (len(times), n)."""

    times: np.ndarray
    temperatures: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", _readonly(self.times))
        object.__setattr__(self, "temperatures", _readonly(self.temperatures))
        if self.temperatures.shape != (self.times.size, self.temperatures.shape[1]):
            raise ConfigError("temperature array must be (len(times), n)")

    @property
    def n(self) -> int:
        return self.temperatures.shape[1]

    def profile(self, k: int) -> TemperatureProfile:
        return TemperatureProfile(
            temperatures=self.temperatures[k], time=float(self.times[k])
        )


@dataclass(frozen=True)
class RelaxationReport:
    """First-crossing times; None marks a threshold never reached."""

    t1: dict[int, float | None]
    t2: float | None
    epsilon: float


def build_drift_matrix(coupling: CouplingMatrix, profile: BathProfile) -> DriftMatrix:
    """Assemble M = [[0, -1], [A, diag(gamma)]] from its two blocks."""
    n = coupling.n
    if profile.n != n:
        raise ConfigError(f"bath profile has {profile.n} ions but coupling matrix has {n}")
    m = np.zeros((2 * n, 2 * n))
    m[:n, n:] = -np.eye(n)
    m[n:, :n] = coupling.matrix
    m[n:, n:] = np.diag(profile.gammas)
    return DriftMatrix(matrix=m, n=n)


def decompose(drift: DriftMatrix) -> SpectralDecomposition:
    """Eigendecomposition of the drift with conditioning checks.

    Refuses nearly defective bases (for example a bath tuned exactly to
    critical damping) rather than silently returning garbage: perturb
    gamma or omega_x to lift the degeneracy. A basis that passes the
    condition cap must also reconstruct the drift to 1e-10 relative.
    """
    lam, u = np.linalg.eig(drift.matrix)
    condition = float(np.linalg.cond(u))
    if not np.isfinite(condition) or condition > U_CONDITION_CAP:
        raise DefectiveSpectrumError(
            f"eigenvector basis condition number {condition:.3e} exceeds "
            f"{U_CONDITION_CAP:.0e}; the spectrum is defective, perturb gamma "
            "or omega_x to lift the degeneracy"
        )
    try:
        u_inv = np.linalg.inv(u)
    except np.linalg.LinAlgError as exc:
        raise DefectiveSpectrumError(f"eigenvector basis is singular: {exc}") from exc

    scale = np.linalg.norm(drift.matrix)
    residual = np.linalg.norm((u * lam) @ u_inv - drift.matrix) / scale
    if residual > RECONSTRUCTION_TOL:
        message = (
            f"eigendecomposition reconstructs the drift to {residual:.3e} "
            f"relative (need {RECONSTRUCTION_TOL:.0e}); basis condition "
            f"number {condition:.3e}"
        )
        # A bad reconstruction from an ill-conditioned basis is the same
        # near-degeneracy in a different guise.
        if condition > 1e5:
            raise DefectiveSpectrumError(message)
        raise NumericalError(message)

    min_real = float(lam.real.min())
    if min_real < EIG_REAL_FLOOR:
        raise NumericalError(
            f"drift eigenvalue with real part {min_real:.3e} signals a growing "
            "mode; the damped chain must relax"
        )
    return SpectralDecomposition(
        eigenvalues=lam,
        vectors=u,
        vectors_inv=u_inv,
        min_sum_real=2.0 * min_real,
        condition_number=condition,
        n=drift.n,
    )


def thermal_initial(t0, coupling: CouplingMatrix) -> InitialMoments:
    """Moments of independent local thermal states at phonon number t0.

    t0 may be a scalar or a per-ion vector; entries must be >= 0, and
    the zero-point floor x2 = 1/(2 omega_i) is reached exactly at 0.
    """
    w = coupling.local_freqs
    t0 = np.broadcast_to(np.asarray(t0, dtype=float), w.shape)
    if not (np.all(np.isfinite(t0)) and t0.min() >= 0):
        raise ConfigError(f"initial temperatures must be non-negative, got {t0!r}")
    occ = t0 + 0.5
    return InitialMoments(x2=occ / w, p2=occ * w)


def _pair_kernels(
    decomp: SpectralDecomposition,
    initial: InitialMoments | None,
    strengths: np.ndarray | None,
):
    """Initial kernel K, undivided noise kernel S and pair sums.

    S deliberately carries no 1/(lambda_a + lambda_b) factor. Transient
    evaluation folds that into the weight (1 - exp(-s t))/s, which stays
    finite for arbitrarily small pair sums; only the t -> inf limit needs
    the bare division and its conditioning check.
    """
    n = decomp.n
    u_inv = decomp.vectors_inv
    rows_x = u_inv[:, :n]
    rows_p = u_inv[:, n:]
    pair_sums = decomp.eigenvalues[:, None] + decomp.eigenvalues[None, :]

    kernel_init = None
    if initial is not None:
        if initial.n != n:
            raise ConfigError(f"initial moments are for {initial.n} ions, drift has {n}")
        kernel_init = (rows_x * initial.x2) @ rows_x.T + (rows_p * initial.p2) @ rows_p.T

    kernel_noise = None
    if strengths is not None:
        strengths = np.asarray(strengths, dtype=float)
        if strengths.shape != (n,):
            raise ConfigError(f"need {n} noise strengths, got shape {strengths.shape}")
        if strengths.min() < 0:
            raise ConfigError("noise strengths must be non-negative")
        kernel_noise = (rows_p * strengths) @ rows_p.T
    return kernel_init, kernel_noise, pair_sums


def _steady_kernel(kernel_noise: np.ndarray, pair_sums: np.ndarray) -> np.ndarray:
    """Limit kernel S / (lambda_a + lambda_b), guarded against blow-up."""
    closest = float(np.abs(pair_sums).min())
    if closest < PAIR_SUM_FLOOR:
        raise IllConditionedSteadyStateError(
            f"smallest |lambda_a + lambda_b| = {closest:.3e} is below "
            f"{PAIR_SUM_FLOOR:.0e}; steady weights would overflow"
        )
    return kernel_noise / pair_sums


def _transient_weight(pair_sums: np.ndarray, t: float) -> np.ndarray:
    """(1 - exp(-s t))/s per pair, stable as s -> 0.

    Small |s t| switches to the Taylor form t(1 - st/2 + (st)^2/6 - ...)
    so undamped mode pairs get the correct linear-in-t noise growth
    instead of a 0/0. The direct form loses at most ~1e-12 relative
    accuracy at the 1e-4 crossover.
    """
    st = pair_sums * t
    small = np.abs(st) < 1e-4
    safe = np.where(small, 1.0, pair_sums)
    with np.errstate(under="ignore", invalid="ignore"):
        direct = (1.0 - np.exp(-st)) / safe
    series = t * (1.0 - st / 2.0 + (st * st) / 6.0 - (st * st * st) / 24.0)
    return np.where(small, series, direct)


def _contract(u: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """diag(U @ kernel @ U^T) without forming the off-diagonal part."""
    return ((u @ kernel) * u).sum(axis=1)


def _imag_residue(u_abs: np.ndarray, kernel: np.ndarray, q2: np.ndarray) -> float:
    """Worst imaginary part relative to the magnitude actually summed.

    Conjugate eigenpairs cancel the imaginary parts analytically, so any
    residue is roundoff of the contraction. Near-degenerate spectra sum
    huge kernel entries down to small moments; measuring against the
    summed magnitudes keeps the check tight for healthy spectra without
    flagging that benign cancellation.
    """
    summed = ((u_abs @ np.abs(kernel)) * u_abs).sum(axis=1)
    return float((np.abs(q2.imag) / np.maximum(summed, 1e-30)).max())


def _split_real(q2: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    moments = q2.real
    return moments[:n].copy(), moments[n:].copy()


def variance_at(
    decomp: SpectralDecomposition,
    initial: InitialMoments,
    strengths: np.ndarray,
    t: float,
) -> SecondMoments:
    """Second moments at time t from the closed-form pair kernels.

    t = 0 short-circuits to the initial moments: the exponential factor
    is exactly one there and no steady-weight division is needed.
    """
    if not (np.isfinite(t) and t >= 0):
        raise ConfigError(f"time must be finite and non-negative, got {t!r}")
    if t == 0.0:
        return SecondMoments(x2=initial.x2.copy(), p2=initial.p2.copy(), time=0.0)
    kernel_init, kernel_noise, pair_sums = _pair_kernels(decomp, initial, strengths)
    with np.errstate(under="ignore"):
        decay = np.exp(-pair_sums * t)
    kernel = decay * kernel_init + _transient_weight(pair_sums, t) * kernel_noise
    q2 = _contract(decomp.vectors, kernel)
    residue = _imag_residue(np.abs(decomp.vectors), kernel, q2)
    if residue > IMAG_RESIDUE_TOL:
        raise NumericalError(
            f"imaginary residue {residue:.3e} relative at t={t:g}; the "
            "eigenbasis is too ill-conditioned for this evaluation"
        )
    x2, p2 = _split_real(q2, decomp.n)
    return SecondMoments(x2=x2, p2=p2, time=float(t))


def _clamped_temperatures(values: np.ndarray, context: str) -> np.ndarray:
    coldest = float(values.min())
    if coldest < TEMPERATURE_FLOOR:
        raise NumericalError(
            f"temperature {coldest:.3e} in {context} is below the zero-point "
            "floor; the moments are not physical"
        )
    if coldest < 0:
        if coldest < _CLAMP_WARN_BELOW:
            warnings.warn(
                f"clamping slightly negative temperature {coldest:.3e} in {context}",
                RuntimeWarning,
                stacklevel=3,
            )
        values = np.where(values < 0, 0.0, values)
    return values


def temperature_of(moments: SecondMoments, coupling: CouplingMatrix) -> TemperatureProfile:
    """Mean phonon number of each local mode from its two variances."""
    w = coupling.local_freqs
    if moments.x2.size != w.size:
        raise ConfigError(f"moments are for {moments.x2.size} ions, coupling has {w.size}")
    temps = 0.5 * (w * moments.x2 + moments.p2 / w - 1.0)
    temps = _clamped_temperatures(temps, f"profile at t={moments.time:g}")
    return TemperatureProfile(temperatures=temps, time=moments.time)


def steady_state_temperatures(
    decomp: SpectralDecomposition,
    strengths: np.ndarray,
    coupling: CouplingMatrix,
) -> TemperatureProfile:
    """Long-time temperature profile straight from the steady kernel."""
    strengths = np.asarray(strengths, dtype=float)
    if not np.any(strengths > 0):
        raise NoSteadyStateError(
            "no noise drive anywhere: the damped chain would collapse below "
            "zero-point motion, so the bath profile is unphysical"
        )
    _, kernel_noise, pair_sums = _pair_kernels(decomp, None, strengths)
    kernel_steady = _steady_kernel(kernel_noise, pair_sums)
    q2 = _contract(decomp.vectors, kernel_steady)
    residue = _imag_residue(np.abs(decomp.vectors), kernel_steady, q2)
    if residue > IMAG_RESIDUE_TOL:
        raise NumericalError(
            f"imaginary residue {residue:.3e} relative in the steady state; "
            "the eigenbasis is too ill-conditioned for this evaluation"
        )
    x2, p2 = _split_real(q2, decomp.n)
    moments = SecondMoments(x2=x2, p2=p2, time=math.inf)
    return temperature_of(moments, coupling)


def evolve_temperatures(
    decomp: SpectralDecomposition,
    initial: InitialMoments,
    strengths: np.ndarray,
    coupling: CouplingMatrix,
    times,
) -> TemperatureSeries:
    """Temperature profiles on a strictly increasing grid of times.

    The pair kernels are built once; each grid point then costs two
    elementwise exponentials and one contraction, so log grids spanning
    many decades are cheap.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ConfigError("need a one-dimensional, non-empty time grid")
    if not (np.all(np.isfinite(times)) and times[0] >= 0):
        raise ConfigError("grid times must be finite and non-negative")
    if times.size > 1 and not np.all(np.diff(times) > 0):
        raise ConfigError("grid times must be strictly increasing")

    kernel_init, kernel_noise, pair_sums = _pair_kernels(decomp, initial, strengths)
    n = decomp.n
    w = coupling.local_freqs
    if w.size != n:
        raise ConfigError(f"coupling is for {w.size} ions, drift has {n}")

    u_abs = np.abs(decomp.vectors)
    temps = np.empty((times.size, n))
    worst_residue = 0.0
    for k, t in enumerate(times):
        if t == 0.0:
            x2, p2 = initial.x2, initial.p2
        else:
            with np.errstate(under="ignore"):
                decay = np.exp(-pair_sums * t)
            kernel = decay * kernel_init + _transient_weight(pair_sums, t) * kernel_noise
            q2 = _contract(decomp.vectors, kernel)
            worst_residue = max(worst_residue, _imag_residue(u_abs, kernel, q2))
            x2, p2 = q2.real[:n], q2.real[n:]
        temps[k] = 0.5 * (w * x2 + p2 / w - 1.0)
    if worst_residue > IMAG_RESIDUE_TOL:
        raise NumericalError(
            f"imaginary residue {worst_residue:.3e} relative across the series; "
            "the eigenbasis is too ill-conditioned for this evaluation"
        )
    temps = _clamped_temperatures(temps, "temperature series")
    return TemperatureSeries(times=times, temperatures=temps)


def relaxation_times(
    series: TemperatureSeries,
    steady: TemperatureProfile,
    bath_targets: Mapping[int, float],
    epsilon: float,
) -> RelaxationReport:
    """Two-timescale summary of a relaxation series.

    t1 per driven ion is the first grid time its temperature comes
    within epsilon of the bath (first touch: edge ions overshoot and
    are dragged back, so persistence is not required). t2 is the first
    grid time after which every ion stays within epsilon of its steady
    value for the rest of the grid. None marks a threshold never
    reached on this grid.
    """
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise ConfigError(f"epsilon must be positive, got {epsilon!r}")
    if steady.n != series.n:
        raise ConfigError(f"steady profile has {steady.n} ions, series has {series.n}")

    t1: dict[int, float | None] = {}
    for ion, target in sorted(bath_targets.items()):
        if not 1 <= ion <= series.n:
            raise ConfigError(f"bath target on ion {ion} is outside the chain")
        close = np.abs(series.temperatures[:, ion - 1] - target) <= epsilon
        t1[ion] = float(series.times[np.argmax(close)]) if close.any() else None

    deviation = np.abs(series.temperatures - steady.temperatures).max(axis=1)
    settled = deviation < epsilon
    settled_from_here = np.logical_and.accumulate(settled[::-1])[::-1]
    t2 = float(series.times[np.argmax(settled_from_here)]) if settled_from_here.any() else None
    return RelaxationReport(t1=t1, t2=t2, epsilon=float(epsilon))
