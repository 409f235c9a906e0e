"""Chain geometry and transverse coupling for trapped-ion strings.

Positions are axial equilibrium coordinates in units of the largest
nearest-neighbour gap d0, so the strongest Coulomb coupling coefficient
is exactly one. Frequencies are in units of sqrt(ke * e^2 / (m d0^3))
with ke the Coulomb constant. In these units the transverse coupling
matrix of a chain held at transverse frequency omega_x reads

    A[i][i] = omega_x**2 - sum_{j != i} 1 / |z_j - z_i|**3
    A[i][j] = 1 / |z_j - z_i|**3            (j != i)

and each ion's local frequency is omega_i = sqrt(A[i][i]).

Two geometries are supported: a uniform chain with unit spacing (ions
pinned by microtraps or a strongly anharmonic axial potential) and the
equilibrium configuration of a global harmonic axial trap, found by a
damped Newton iteration on the force balance. Harmonic positions scale
as omega_z**(-2/3), which is what `calibrate_axial_frequency` exploits
to normalise the largest gap to one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SolverFailure, TrapTooWeakError, UnstableChainError

FORCE_TOLERANCE = 1e-12
_MAX_NEWTON_STEPS = 100
_MIN_DAMPING = 1e-6

# Canonical transverse frequency used by every scenario in this study.
DEFAULT_OMEGA_X = 10.0


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TrapSpec:
    """Axial confinement descriptor, either 'uniform' or 'harmonic'."""

    kind: str
    n: int
    omega_x: float
    omega_z: float | None = None

    def __post_init__(self):
        problems = []
        if self.kind not in ("uniform", "harmonic"):
            problems.append(f"unknown trap kind {self.kind!r}")
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool) or self.n < 1:
            problems.append(f"ion count must be a positive integer, got {self.n!r}")
        if not (np.isfinite(self.omega_x) and self.omega_x > 0):
            problems.append(f"omega_x must be positive and finite, got {self.omega_x!r}")
        if self.kind == "harmonic":
            if self.omega_z is None or not (np.isfinite(self.omega_z) and self.omega_z > 0):
                problems.append("harmonic trap needs omega_z > 0")
        elif self.omega_z is not None:
            problems.append("uniform trap takes no omega_z")
        if problems:
            raise ConfigError(problems)


@dataclass(frozen=True)
class IonChain:
    """Equilibrium axial positions (strictly ascending) plus their trap."""

    positions: np.ndarray
    trap: TrapSpec

    def __post_init__(self):
        object.__setattr__(self, "positions", _readonly(self.positions))
        z = self.positions
        if z.ndim != 1 or z.size != self.trap.n:
            raise ConfigError(
                f"expected {self.trap.n} positions, got array of shape {z.shape}"
            )
        if z.size > 1 and not np.all(np.diff(z) > 0):
            raise ConfigError("positions must be strictly ascending")

    @property
    def n(self) -> int:
        return self.positions.size

    @property
    def max_gap(self) -> float:
        if self.n < 2:
            return 0.0
        return float(np.diff(self.positions).max())


@dataclass(frozen=True)
class CouplingMatrix:
    """Transverse coupling matrix A and the local frequencies sqrt(A_ii)."""

    matrix: np.ndarray
    local_freqs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _readonly(self.matrix))
        object.__setattr__(self, "local_freqs", _readonly(self.local_freqs))

    @property
    def n(self) -> int:
        return self.local_freqs.size


def uniform_positions(n: int, omega_x: float = DEFAULT_OMEGA_X) -> IonChain:
    """Chain with unit spacing at integer coordinates 0 .. n-1."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ConfigError(f"need a positive ion count, got {n!r}")
    trap = TrapSpec(kind="uniform", n=int(n), omega_x=float(omega_x))
    return IonChain(positions=np.arange(n, dtype=float), trap=trap)


def _axial_gradient(z: np.ndarray, omega_z: float) -> np.ndarray:
    """Gradient of V = omega_z^2 z^2 / 2 + sum_{i<j} 1/|z_i - z_j|."""
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, np.inf)
    repulsion = np.sign(diff) / diff**2
    return omega_z**2 * z - repulsion.sum(axis=1)


def _axial_hessian(z: np.ndarray, omega_z: float) -> np.ndarray:
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, np.inf)
    curvature = 2.0 / np.abs(diff) ** 3
    hess = -curvature
    np.fill_diagonal(hess, omega_z**2 + curvature.sum(axis=1))
    return hess


def solve_equilibrium(
    n: int, omega_z: float, omega_x: float = DEFAULT_OMEGA_X
) -> IonChain:
    """Equilibrium positions of n ions in a harmonic axial trap.

    Damped Newton iteration on the force balance between the trap and
    the pairwise Coulomb repulsion. The Hessian is strictly diagonally
    dominant on ordered configurations, so full steps are accepted
    almost always; backtracking only guards the first few iterations
    when started from a crude uniform grid.

    Parameters
    ----------
    n : int
        Ion count. A single ion sits at the origin without solving.
    omega_z : float
        Axial trap frequency in chain units.
    omega_x : float, optional
        Transverse frequency recorded in the returned trap spec.

    Returns
    -------
    IonChain
        Ascending positions, centred so that sum(z) = 0, with the
        residual force below ``FORCE_TOLERANCE`` in max-norm.
    """
    trap = TrapSpec(kind="harmonic", n=int(n), omega_x=float(omega_x), omega_z=float(omega_z))
    if n == 1:
        return IonChain(positions=np.zeros(1), trap=trap)

    # Initial guess: uniform grid at the known minimum-spacing scale
    # (about 2 n^-0.56 in units of omega_z^(-2/3) for a harmonic chain).
    spacing = 2.018 * n ** -0.559 * omega_z ** (-2.0 / 3.0)
    z = spacing * (np.arange(n) - 0.5 * (n - 1))
    grad = _axial_gradient(z, omega_z)

    residual = np.abs(grad).max()
    for _ in range(_MAX_NEWTON_STEPS):
        if residual <= FORCE_TOLERANCE:
            break
        step = np.linalg.solve(_axial_hessian(z, omega_z), grad)
        alpha = 1.0
        while alpha >= _MIN_DAMPING:
            z_new = z - alpha * step
            if np.all(np.diff(z_new) > 0):
                grad_new = _axial_gradient(z_new, omega_z)
                if np.abs(grad_new).max() < residual:
                    break
            alpha *= 0.5
        else:
            raise SolverFailure(
                f"equilibrium line search stalled at residual {residual:.3e} for n={n}"
            )
        z, grad = z_new, grad_new
        residual = np.abs(grad).max()
    if residual > FORCE_TOLERANCE:
        raise SolverFailure(
            f"equilibrium solve did not converge: residual {residual:.3e} "
            f"after {_MAX_NEWTON_STEPS} iterations for n={n}"
        )
    return IonChain(positions=z - z.mean(), trap=trap)


def calibrate_axial_frequency(n: int) -> float:
    """Axial frequency at which the largest equilibrium gap equals one.

    Positions scale as omega_z**(-2/3), so solving once at omega_z = 1
    and reading off the largest gap g fixes the answer as g**(3/2).
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ConfigError(f"calibration needs at least two ions, got {n!r}")
    gap = solve_equilibrium(int(n), 1.0).max_gap
    return float(gap**1.5)


def build_coupling_matrix(chain: IonChain, omega_x: float | None = None) -> CouplingMatrix:
    """Transverse coupling matrix of a chain at frequency omega_x.

    Raises TrapTooWeakError when a diagonal entry is non-positive and
    UnstableChainError when the matrix is not positive definite (the
    zigzag instability threshold), reporting the offending eigenvalue.
    """
    if omega_x is None:
        omega_x = chain.trap.omega_x
    if not (np.isfinite(omega_x) and omega_x > 0):
        raise ConfigError(f"omega_x must be positive and finite, got {omega_x!r}")

    z = chain.positions
    dist = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(dist, np.inf)
    coupling = dist**-3.0
    # Summing each row in sorted order keeps mirrored rows bitwise equal
    # for mirror-symmetric chains (and is the more accurate order anyway).
    diag = omega_x**2 - np.sort(coupling, axis=1).sum(axis=1)
    if diag.min() <= 0:
        raise TrapTooWeakError(
            f"omega_x = {omega_x:g} leaves a non-positive local curvature "
            f"(min diagonal {diag.min():.6e})"
        )
    matrix = coupling.copy()
    np.fill_diagonal(matrix, diag)
    smallest = float(np.linalg.eigvalsh(matrix)[0])
    if smallest <= 0:
        raise UnstableChainError(
            f"coupling matrix is not positive definite at omega_x = {omega_x:g}: "
            f"smallest eigenvalue {smallest:.6e}"
        )
    return CouplingMatrix(matrix=matrix, local_freqs=np.sqrt(diag))
