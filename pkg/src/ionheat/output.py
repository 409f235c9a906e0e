"""Result serialization: delimited tables and JSON documents.

Floats are written with 17 significant digits, enough for any IEEE
double to survive a write/parse round trip bit-exactly, so outputs can
be compared across runs and languages byte for byte. Every writer
accepts either a path or an open text stream.
"""

from __future__ import annotations

import csv
import json
from contextlib import contextmanager
from pathlib import Path

from .experiments import DynamicsResult, SweepResult, middle_ion_index
from .geometry import CouplingMatrix, IonChain
from .spectral import TemperatureProfile, TemperatureSeries


def format_float(value: float) -> str:
    return f"{value:.17g}"


@contextmanager
def _destination(dest):
    if hasattr(dest, "write"):
        yield dest
        return
    path = Path(dest)
    try:
        with path.open("w", encoding="utf-8", newline="") as handle:
            yield handle
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _ion_headers(n: int) -> list[str]:
    return [f"ion_{i}" for i in range(1, n + 1)]


def write_positions_csv(chain: IonChain, coupling: CouplingMatrix, dest) -> None:
    """Equilibrium geometry: ion_index, z, omega_i."""
    with _destination(dest) as handle:
        writer = csv.writer(handle)
        writer.writerow(["ion_index", "z", "omega_i"])
        for i, (z, w) in enumerate(zip(chain.positions, coupling.local_freqs), start=1):
            writer.writerow([i, format_float(z), format_float(w)])


def write_profile_csv(
    chain: IonChain,
    coupling: CouplingMatrix,
    profile: TemperatureProfile,
    dest,
) -> None:
    """Steady or instantaneous profile: ion_index, z, omega_i, temperature."""
    with _destination(dest) as handle:
        writer = csv.writer(handle)
        writer.writerow(["ion_index", "z", "omega_i", "temperature"])
        rows = zip(chain.positions, coupling.local_freqs, profile.temperatures)
        for i, (z, w, t) in enumerate(rows, start=1):
            writer.writerow([i, format_float(z), format_float(w), format_float(t)])


def write_series_csv(series: TemperatureSeries, dest) -> None:
    """Time evolution, one row per grid time: time, ion_1 .. ion_N."""
    with _destination(dest) as handle:
        writer = csv.writer(handle)
        writer.writerow(["time"] + _ion_headers(series.n))
        for t, temps in zip(series.times, series.temperatures):
            writer.writerow([format_float(t)] + [format_float(v) for v in temps])


def write_sweep_csv(result: SweepResult, dest) -> None:
    """One-axis sweep, one row per grid point: <parameter>, ion_1 .. ion_N."""
    if len(result.axes) != 1 or result.temperatures.ndim != 2:
        raise ValueError("sweep writer expects a single-axis result with full profiles")
    axis = result.axes[0]
    with _destination(dest) as handle:
        writer = csv.writer(handle)
        writer.writerow([axis.parameter] + _ion_headers(result.temperatures.shape[1]))
        for value, temps in zip(axis.values, result.temperatures):
            writer.writerow([format_float(value)] + [format_float(v) for v in temps])


def write_map_csv(result: SweepResult, dest) -> None:
    """Two-rate map in row-major order: gamma1, gamma2, t_m."""
    if len(result.axes) != 2 or result.temperatures.ndim != 2:
        raise ValueError("map writer expects a two-axis scalar result")
    axis1, axis2 = result.axes
    with _destination(dest) as handle:
        writer = csv.writer(handle)
        writer.writerow([axis1.parameter, axis2.parameter, "t_m"])
        for i, g1 in enumerate(axis1.values):
            for j, g2 in enumerate(axis2.values):
                writer.writerow(
                    [
                        format_float(g1),
                        format_float(g2),
                        format_float(result.temperatures[i, j]),
                    ]
                )


def positions_payload(chain: IonChain, coupling: CouplingMatrix) -> dict:
    return {
        "kind": chain.trap.kind,
        "n": chain.n,
        "z": chain.positions.tolist(),
        "omega_i": coupling.local_freqs.tolist(),
        "max_gap": chain.max_gap,
    }


def profile_payload(
    chain: IonChain, coupling: CouplingMatrix, profile: TemperatureProfile
) -> dict:
    return positions_payload(chain, coupling) | {
        "time": None if profile.time == float("inf") else profile.time,
        "temperature": profile.temperatures.tolist(),
    }


def series_payload(series: TemperatureSeries) -> dict:
    return {
        "n": series.n,
        "times": series.times.tolist(),
        "temperatures": series.temperatures.tolist(),
    }


def sweep_payload(result: SweepResult) -> dict:
    return {
        "axes": [
            {"parameter": ax.parameter, "values": ax.values.tolist()}
            for ax in result.axes
        ],
        "temperatures": result.temperatures.tolist(),
        "metadata": result.metadata,
    }


def dynamics_payload(result: DynamicsResult) -> dict:
    relaxation = None
    if result.relaxation is not None:
        relaxation = {
            "epsilon": result.relaxation.epsilon,
            "t1": {str(ion): t for ion, t in result.relaxation.t1.items()},
            "t2": result.relaxation.t2,
        }
    return {
        "preset": result.kind,
        "scenario": result.scenario.describe(),
        "middle_ion": middle_ion_index(result.series.n),
        "series": series_payload(result.series),
        "steady": None if result.steady is None else result.steady.temperatures.tolist(),
        "relaxation": relaxation,
        "diagnostic": result.diagnostic,
    }


def write_json(payload: dict, dest) -> None:
    with _destination(dest) as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")
