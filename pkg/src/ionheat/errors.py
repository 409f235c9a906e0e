"""Exception taxonomy shared across the package.

Configuration problems (bad arguments, malformed run files) raise
ConfigError; everything that goes wrong inside a solver raises a
subclass of NumericalError. The CLI maps the two families to distinct
exit codes.
"""

from __future__ import annotations


class ConfigError(ValueError):
    """Invalid argument or run configuration.

    Carries the full list of violations so a malformed config file is
    reported in one shot instead of one complaint per run.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class NumericalError(RuntimeError):
    """Base class for solver and linear-algebra failures."""


class SolverFailure(NumericalError):
    """An iterative solver stalled before reaching its tolerance."""


class TrapTooWeakError(NumericalError):
    """A diagonal coupling entry is non-positive: the transverse
    confinement cannot hold an ion against the Coulomb repulsion."""


class UnstableChainError(NumericalError):
    """The coupling matrix is not positive definite, so the straight
    chain is not a stable configuration at this transverse frequency."""


class DefectiveSpectrumError(NumericalError):
    """The drift eigenvector basis is numerically defective."""


class IllConditionedSteadyStateError(NumericalError):
    """An eigenvalue pair sum is too close to zero to divide by."""


class NoSteadyStateError(NumericalError):
    """The steady-state equation is singular; with no damping anywhere
    the chain never forgets its initial condition."""
