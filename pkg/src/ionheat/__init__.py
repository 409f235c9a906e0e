"""Temperature distributions of laser-driven trapped-ion chains.

The pipeline runs geometry -> baths -> spectral solution: build the
equilibrium chain and its transverse coupling matrix, attach per-ion
thermal baths, then evaluate exact second moments of the linear
Langevin dynamics at any time or in the steady state. Independent
oracles (stationarity solve, covariance ODE, seeded Monte-Carlo) and
the scenario-level studies live in their own modules.
"""

from .baths import BathAttachment, BathProfile, assemble_profile, noise_strengths
from .errors import (
    ConfigError,
    DefectiveSpectrumError,
    IllConditionedSteadyStateError,
    NoSteadyStateError,
    NumericalError,
    SolverFailure,
    TrapTooWeakError,
    UnstableChainError,
)
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
    DriftMatrix,
    InitialMoments,
    RelaxationReport,
    SecondMoments,
    SpectralDecomposition,
    TemperatureProfile,
    TemperatureSeries,
    build_drift_matrix,
    decompose,
    evolve_temperatures,
    relaxation_times,
    steady_state_temperatures,
    temperature_of,
    thermal_initial,
    variance_at,
)
from .units import UnitSystem, to_physical_units

__version__ = "0.1.0"

__all__ = [
    "BathAttachment",
    "BathProfile",
    "ConfigError",
    "CouplingMatrix",
    "DefectiveSpectrumError",
    "DriftMatrix",
    "IllConditionedSteadyStateError",
    "InitialMoments",
    "IonChain",
    "NoSteadyStateError",
    "NumericalError",
    "RelaxationReport",
    "SecondMoments",
    "SolverFailure",
    "SpectralDecomposition",
    "TemperatureProfile",
    "TemperatureSeries",
    "TrapSpec",
    "TrapTooWeakError",
    "UnitSystem",
    "UnstableChainError",
    "assemble_profile",
    "build_coupling_matrix",
    "build_drift_matrix",
    "calibrate_axial_frequency",
    "decompose",
    "evolve_temperatures",
    "noise_strengths",
    "relaxation_times",
    "solve_equilibrium",
    "steady_state_temperatures",
    "temperature_of",
    "thermal_initial",
    "to_physical_units",
    "uniform_positions",
    "variance_at",
]
