"""Per-ion thermal bath assembly.

Each laser-driven ion couples to its own Markovian bath with rate
gamma_i and mean phonon number t_i; undriven ions may share a weak
background bath standing in for off-resonant scattering and electrode
noise. A bath enters the dynamics twice: as the damping term gamma_i
p_i and as a white-noise momentum drive whose strength

    D_i = 2 gamma_i omega_i (t_i + 1/2)

follows from the fluctuation-dissipation relation for the local mode.
The 1/2 keeps zero-point motion in the noise floor, so a bath at t = 0
still drives D_i = gamma_i omega_i.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .geometry import CouplingMatrix, _readonly


@dataclass(frozen=True)
class BathAttachment:
    """One bath on one ion; `ion_index` is 1-based like all interfaces."""

    ion_index: int
    gamma: float
    temperature: float

    def __post_init__(self):
        problems = []
        if not isinstance(self.ion_index, (int, np.integer)) or self.ion_index < 1:
            problems.append(f"ion_index must be a positive integer, got {self.ion_index!r}")
        if not (np.isfinite(self.gamma) and self.gamma >= 0):
            problems.append(f"gamma must be non-negative, got {self.gamma!r}")
        if not (np.isfinite(self.temperature) and self.temperature >= 0):
            problems.append(f"temperature must be non-negative, got {self.temperature!r}")
        if problems:
            raise ConfigError(problems)


@dataclass(frozen=True)
class BathProfile:
    """Damping rate and bath temperature for every ion in the chain.

    Ions without a bath carry gamma = 0 (their temperature entry is
    inert). Profiles with no damping at all can be built directly for
    studying the closed chain, but `assemble_profile` refuses them.
    """

    gammas: np.ndarray
    temperatures: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gammas", _readonly(self.gammas))
        object.__setattr__(self, "temperatures", _readonly(self.temperatures))
        g, t = self.gammas, self.temperatures
        problems = []
        if g.ndim != 1 or t.shape != g.shape:
            problems.append(f"gammas {g.shape} and temperatures {t.shape} must be equal-length vectors")
        else:
            if not (np.all(np.isfinite(g)) and g.min(initial=0.0) >= 0):
                problems.append("gammas must be finite and non-negative")
            if not (np.all(np.isfinite(t)) and t.min(initial=0.0) >= 0):
                problems.append("temperatures must be finite and non-negative")
        if problems:
            raise ConfigError(problems)

    @property
    def n(self) -> int:
        return self.gammas.size

    @property
    def driven(self) -> np.ndarray:
        """Boolean mask of ions with a bath attached (gamma > 0)."""
        return self.gammas > 0


def assemble_profile(
    n: int,
    attachments: Iterable[BathAttachment],
    background: Sequence[float] | None = None,
) -> BathProfile:
    """Merge explicit attachments and an optional background bath.

    The background pair (gamma_bg, t_bg) applies to every ion without
    an explicit attachment. Duplicate or out-of-range attachments and a
    profile with no damping anywhere are configuration errors; all
    violations are reported together.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ConfigError(f"need a positive ion count, got {n!r}")
    attachments = tuple(attachments)
    problems = []

    gammas = np.zeros(n)
    temperatures = np.zeros(n)
    explicit = np.zeros(n, dtype=bool)
    for att in attachments:
        if att.ion_index > n:
            problems.append(f"attachment on ion {att.ion_index} exceeds chain length {n}")
            continue
        i = att.ion_index - 1
        if explicit[i]:
            problems.append(f"duplicate attachment on ion {att.ion_index}")
            continue
        explicit[i] = True
        gammas[i] = att.gamma
        temperatures[i] = att.temperature

    if background is not None:
        if len(background) != 2:
            problems.append(f"background must be a (gamma, temperature) pair, got {background!r}")
        else:
            gamma_bg, t_bg = float(background[0]), float(background[1])
            if not (np.isfinite(gamma_bg) and gamma_bg >= 0):
                problems.append(f"background gamma must be non-negative, got {background[0]!r}")
            elif not (np.isfinite(t_bg) and t_bg >= 0):
                problems.append(f"background temperature must be non-negative, got {background[1]!r}")
            else:
                gammas[~explicit] = gamma_bg
                temperatures[~explicit] = t_bg

    if not problems and not np.any(gammas > 0):
        problems.append("no damping anywhere: attach at least one bath or a background")
    if problems:
        raise ConfigError(problems)
    return BathProfile(gammas=gammas, temperatures=temperatures)


def noise_strengths(profile: BathProfile, coupling: CouplingMatrix) -> np.ndarray:
    """Momentum noise strength D_i = 2 gamma_i omega_i (t_i + 1/2)."""
    if profile.n != coupling.n:
        raise ConfigError(
            f"bath profile has {profile.n} ions but coupling matrix has {coupling.n}"
        )
    return 2.0 * profile.gammas * coupling.local_freqs * (profile.temperatures + 0.5)
