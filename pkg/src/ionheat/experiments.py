"""Scenario builders, parameter sweeps and profile analysis.

Everything here composes the geometry, bath and spectral layers into
the studies the CLI exposes: steady profiles under varying drive rates,
two-rate maps of the middle-ion temperature, background-bath sweeps,
and the canonical 20-ion relaxation runs. Grid points are pure
functions of the configuration, so sweeps parallelize freely and the
results are independent of evaluation order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .baths import BathAttachment, BathProfile, assemble_profile, noise_strengths
from .errors import ConfigError, NumericalError
from .geometry import (
    CouplingMatrix,
    IonChain,
    TrapSpec,
    build_coupling_matrix,
    calibrate_axial_frequency,
    solve_equilibrium,
    uniform_positions,
)
from .spectral import (
    RelaxationReport,
    TemperatureProfile,
    TemperatureSeries,
    build_drift_matrix,
    decompose,
    evolve_temperatures,
    relaxation_times,
    steady_state_temperatures,
    thermal_initial,
)

SWEEP_PARAMETERS = ("gamma", "gamma1", "gamma2", "gamma_bg", "hot_ion_index", "time")

# Fig.-style canonical drive and the 20-ion relaxation defaults.
DEFAULT_GAMMA_GRID = (1e-3, 1e2, 40)
DEFAULT_MAP_GRID = (1e-3, 1e2, 30)
DYNAMICS_KINDS = ("uniform", "harmonic", "harmonic_bg")
DYNAMICS_EPSILON = 0.05


@dataclass(frozen=True)
class SweepAxis:
    """One swept parameter and its grid."""

    parameter: str
    values: np.ndarray

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ConfigError(
                f"unknown sweep parameter {self.parameter!r}; "
                f"choose one of {', '.join(SWEEP_PARAMETERS)}"
            )
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size == 0:
            raise ConfigError(f"sweep grid for {self.parameter} must be a non-empty vector")
        if not np.all(np.isfinite(values)):
            raise ConfigError(f"sweep grid for {self.parameter} must be finite")
        if values.size > 1 and not np.all(np.diff(values) > 0):
            raise ConfigError(f"sweep grid for {self.parameter} must be strictly increasing")
        values.flags.writeable = False


@dataclass(frozen=True)
class ScenarioConfig:
    """A complete physical setup plus optional sweep descriptors."""

    trap: TrapSpec
    attachments: tuple[BathAttachment, ...]
    background: tuple[float, float] | None = None
    initial_temp: float = 0.0
    sweep: tuple[SweepAxis, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "attachments", tuple(self.attachments))
        object.__setattr__(self, "sweep", tuple(self.sweep))
        if not (np.isfinite(self.initial_temp) and self.initial_temp >= 0):
            raise ConfigError(
                f"initial temperature must be non-negative, got {self.initial_temp!r}"
            )

    def axis(self, parameter: str) -> SweepAxis | None:
        for ax in self.sweep:
            if ax.parameter == parameter:
                return ax
        return None

    def describe(self) -> dict:
        """JSON-ready echo of the scenario for result metadata."""
        return {
            "trap": {
                "kind": self.trap.kind,
                "n": self.trap.n,
                "omega_x": self.trap.omega_x,
                "omega_z": self.trap.omega_z,
            },
            "baths": [
                {"ion": a.ion_index, "gamma": a.gamma, "temperature": a.temperature}
                for a in self.attachments
            ],
            "background": None
            if self.background is None
            else {"gamma": self.background[0], "temperature": self.background[1]},
            "initial_temperature": self.initial_temp,
        }


@dataclass(frozen=True)
class SweepResult:
    """Temperatures over one or two grids, plus the fixed geometry."""

    axes: tuple[SweepAxis, ...]
    temperatures: np.ndarray
    chain: IonChain
    coupling: CouplingMatrix
    metadata: dict

    def __post_init__(self):
        expected = tuple(ax.values.size for ax in self.axes)
        if self.temperatures.shape[: len(expected)] != expected:
            raise ConfigError(
                f"payload shape {self.temperatures.shape} does not match "
                f"grid sizes {expected}"
            )


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class DynamicsResult:
    """Relaxation series with its steady target and timescale summary."""

    kind: str
    series: TemperatureSeries
    steady: TemperatureProfile | None
    relaxation: RelaxationReport | None
    scenario: ScenarioConfig
    chain: IonChain
    coupling: CouplingMatrix
    diagnostic: str | None = None


def middle_ion_index(n: int) -> int:
    """1-based index of the middle ion, rounding up for even chains."""
    return (n + 1) // 2


def default_gamma_grid() -> np.ndarray:
    lo, hi, points = DEFAULT_GAMMA_GRID
    return np.logspace(np.log10(lo), np.log10(hi), points)


def default_map_grid() -> np.ndarray:
    lo, hi, points = DEFAULT_MAP_GRID
    return np.logspace(np.log10(lo), np.log10(hi), points)


def build_chain(trap: TrapSpec) -> IonChain:
    """Equilibrium positions for either trap kind."""
    if trap.kind == "uniform":
        return uniform_positions(trap.n, trap.omega_x)
    return solve_equilibrium(trap.n, trap.omega_z, trap.omega_x)


def _scenario_profile(scenario: ScenarioConfig) -> BathProfile:
    return assemble_profile(scenario.trap.n, scenario.attachments, scenario.background)


def _steady_temperatures(coupling: CouplingMatrix, profile: BathProfile) -> np.ndarray:
    drift = build_drift_matrix(coupling, profile)
    decomp = decompose(drift)
    strengths = noise_strengths(profile, coupling)
    return steady_state_temperatures(decomp, strengths, coupling).temperatures


def steady_profile(
    scenario: ScenarioConfig,
) -> tuple[IonChain, CouplingMatrix, TemperatureProfile]:
    """Chain, coupling and steady temperatures for one fixed scenario."""
    chain = build_chain(scenario.trap)
    coupling = build_coupling_matrix(chain)
    profile = _scenario_profile(scenario)
    temps = _steady_temperatures(coupling, profile)
    return chain, coupling, TemperatureProfile(temperatures=temps, time=math.inf)


def _pool_map(worker, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [worker(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, items))


def run_gamma_sweep(base: ScenarioConfig, gammas=None, threads: int = 1) -> SweepResult:
    """Steady profiles while both drive rates track one grid value.

    The base scenario must carry exactly two attachments; their gammas
    are placeholders replaced by each grid point in turn.
    """
    if len(base.attachments) != 2:
        raise ConfigError(
            f"a drive-rate sweep needs exactly two bath attachments, got {len(base.attachments)}"
        )
    axis = SweepAxis("gamma", default_gamma_grid() if gammas is None else gammas)
    chain = build_chain(base.trap)
    coupling = build_coupling_matrix(chain)

    def point(gamma: float) -> np.ndarray:
        attachments = tuple(replace(a, gamma=float(gamma)) for a in base.attachments)
        profile = assemble_profile(base.trap.n, attachments, base.background)
        return _steady_temperatures(coupling, profile)

    temps = np.array(_pool_map(point, list(axis.values), threads))
    return SweepResult(
        axes=(axis,),
        temperatures=temps,
        chain=chain,
        coupling=coupling,
        metadata=base.describe() | {"swept": "gamma"},
    )


def run_gamma_map(
    base: ScenarioConfig,
    gamma1_grid=None,
    gamma2_grid=None,
    threads: int = 1,
) -> SweepResult:
    """Middle-ion steady temperature over two independent drive rates.

    gamma1 drives the first attachment, gamma2 the second; the payload
    is indexed [i, j] for (gamma1[i], gamma2[j]).
    """
    if len(base.attachments) != 2:
        raise ConfigError(
            f"a two-rate map needs exactly two bath attachments, got {len(base.attachments)}"
        )
    n = base.trap.n
    edges = {a.ion_index for a in base.attachments}
    if edges != {1, n}:
        raise ConfigError(
            f"a two-rate map drives the chain edges (ions 1 and {n}), "
            f"got ions {sorted(edges)}"
        )
    axis1 = SweepAxis("gamma1", default_map_grid() if gamma1_grid is None else gamma1_grid)
    axis2 = SweepAxis("gamma2", default_map_grid() if gamma2_grid is None else gamma2_grid)
    chain = build_chain(base.trap)
    coupling = build_coupling_matrix(chain)
    middle = middle_ion_index(n) - 1

    pairs = [(g1, g2) for g1 in axis1.values for g2 in axis2.values]

    def point(pair) -> float:
        g1, g2 = pair
        attachments = (
            replace(base.attachments[0], gamma=float(g1)),
            replace(base.attachments[1], gamma=float(g2)),
        )
        profile = assemble_profile(n, attachments, base.background)
        return float(_steady_temperatures(coupling, profile)[middle])

    flat = _pool_map(point, pairs, threads)
    temps = np.array(flat).reshape(axis1.values.size, axis2.values.size)
    return SweepResult(
        axes=(axis1, axis2),
        temperatures=temps,
        chain=chain,
        coupling=coupling,
        metadata=base.describe() | {"swept": "gamma1,gamma2", "middle_ion": middle + 1},
    )


def run_background_sweep(
    base: ScenarioConfig, gamma_bg_grid=None, threads: int = 1
) -> SweepResult:
    """Steady profiles while the background coupling rate varies.

    The base scenario's background entry supplies the bath temperature;
    its rate is the placeholder swept over the grid.
    """
    if base.background is None:
        raise ConfigError(
            "a background sweep needs a background entry to take the bath temperature from"
        )
    t_bg = base.background[1]
    axis = SweepAxis(
        "gamma_bg", default_gamma_grid() if gamma_bg_grid is None else gamma_bg_grid
    )
    chain = build_chain(base.trap)
    coupling = build_coupling_matrix(chain)

    def point(gamma_bg: float) -> np.ndarray:
        profile = assemble_profile(
            base.trap.n, base.attachments, (float(gamma_bg), t_bg)
        )
        return _steady_temperatures(coupling, profile)

    temps = np.array(_pool_map(point, list(axis.values), threads))
    return SweepResult(
        axes=(axis,),
        temperatures=temps,
        chain=chain,
        coupling=coupling,
        metadata=base.describe() | {"swept": "gamma_bg"},
    )


def _dynamics_scenario(kind: str, n: int) -> ScenarioConfig:
    if kind not in DYNAMICS_KINDS:
        raise ConfigError(
            f"unknown dynamics preset {kind!r}; choose one of {', '.join(DYNAMICS_KINDS)}"
        )
    if kind == "uniform":
        trap = TrapSpec(kind="uniform", n=n, omega_x=10.0)
    else:
        trap = TrapSpec(
            kind="harmonic", n=n, omega_x=10.0, omega_z=calibrate_axial_frequency(n)
        )
    background = (1e-4, 4.0) if kind == "harmonic_bg" else None
    return ScenarioConfig(
        trap=trap,
        attachments=(
            BathAttachment(ion_index=1, gamma=0.1, temperature=2.0),
            BathAttachment(ion_index=n, gamma=0.1, temperature=10.0),
        ),
        background=background,
        initial_temp=5.0,
    )


def dynamics_time_grid(kind: str, points: int = 400) -> np.ndarray:
    """Zero plus a log grid; the bare harmonic trap needs six extra decades."""
    top = 10.0 if kind == "harmonic" else 4.0
    return np.concatenate([[0.0], np.logspace(-2.0, top, points)])


def run_dynamics_scenario(
    kind: str,
    n: int = 20,
    points: int = 400,
    epsilon: float = DYNAMICS_EPSILON,
) -> DynamicsResult:
    """Canonical 20-ion relaxation run for one trap preset.

    Both edges are driven at rate 0.1 toward temperatures 2 and 10 from
    a uniform initial temperature of 5. The bare harmonic trap relaxes
    so slowly that its steady state sits near the solver's conditioning
    limit; if the steady evaluation fails there it is reported as a
    diagnostic on the result rather than raised.
    """
    scenario = _dynamics_scenario(kind, n)
    chain = build_chain(scenario.trap)
    coupling = build_coupling_matrix(chain)
    profile = _scenario_profile(scenario)
    drift = build_drift_matrix(coupling, profile)
    decomp = decompose(drift)
    strengths = noise_strengths(profile, coupling)
    initial = thermal_initial(scenario.initial_temp, coupling)

    series = evolve_temperatures(
        decomp, initial, strengths, coupling, dynamics_time_grid(kind, points)
    )
    steady = None
    relaxation = None
    diagnostic = None
    try:
        steady = steady_state_temperatures(decomp, strengths, coupling)
    except NumericalError as exc:
        diagnostic = f"steady state not resolvable: {exc}"
    if steady is not None:
        targets = {a.ion_index: a.temperature for a in scenario.attachments}
        relaxation = relaxation_times(series, steady, targets, epsilon)
    return DynamicsResult(
        kind=kind,
        series=series,
        steady=steady,
        relaxation=relaxation,
        scenario=scenario,
        chain=chain,
        coupling=coupling,
        diagnostic=diagnostic,
    )


def linear_fit(profile: TemperatureProfile, index_range: Sequence[int]) -> LinearFit:
    """Least squares of temperature against ion index over a 1-based range."""
    lo, hi = int(index_range[0]), int(index_range[1])
    if not (1 <= lo and hi <= profile.n and hi - lo >= 2):
        raise ConfigError(
            f"fit range [{lo}, {hi}] needs at least 3 ions inside [1, {profile.n}]"
        )
    indices = np.arange(lo, hi + 1, dtype=float)
    values = profile.temperatures[lo - 1 : hi]
    slope, intercept = np.polyfit(indices, values, 1)
    residuals = values - (slope * indices + intercept)
    total = float(((values - values.mean()) ** 2).sum())
    if total == 0.0:
        # A perfectly flat profile is a perfect line.
        return LinearFit(slope=float(slope), intercept=float(intercept), r_squared=1.0)
    r2 = 1.0 - float((residuals**2).sum()) / total
    return LinearFit(slope=float(slope), intercept=float(intercept), r_squared=r2)


def mirror_symmetry_score(profile: TemperatureProfile) -> float:
    """Largest temperature asymmetry under reversing the chain."""
    if profile.n < 2:
        raise ConfigError("mirror score needs at least two ions")
    temps = profile.temperatures
    return float(np.abs(temps - temps[::-1]).max())
