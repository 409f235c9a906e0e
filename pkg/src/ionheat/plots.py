"""Figure rendering for the CLI report path.

Every renderer writes a PNG next to the delimited output and never
opens a window; the Agg backend is forced on import, so this module is
only pulled in when a plot was actually requested.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import DynamicsResult, SweepResult
from .geometry import CouplingMatrix, IonChain
from .spectral import TemperatureProfile, TemperatureSeries


def _finish(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_positions_plot(chain: IonChain, coupling: CouplingMatrix, path) -> None:
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    index = np.arange(1, chain.n + 1)
    top.plot(index, chain.positions, "o-", ms=4)
    top.set_ylabel("axial position z (d0)")
    bottom.plot(index, coupling.local_freqs, "s-", ms=4, color="tab:orange")
    bottom.set_ylabel("local frequency")
    bottom.set_xlabel("ion index")
    top.set_title(f"{chain.trap.kind} chain, {chain.n} ions")
    _finish(fig, path)


def save_profile_plot(profile: TemperatureProfile, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    index = np.arange(1, profile.n + 1)
    ax.plot(index, profile.temperatures, "o-", ms=4)
    ax.set_xlabel("ion index")
    ax.set_ylabel("temperature (phonons)")
    if title:
        ax.set_title(title)
    _finish(fig, path)


def _time_axis(ax, times: np.ndarray) -> None:
    positive = times[times > 0]
    if positive.size >= 2 and positive.max() / positive.min() > 100:
        ax.set_xscale("log")


def save_series_plot(series: TemperatureSeries, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    shade = plt.cm.viridis(np.linspace(0.0, 0.9, series.n))
    mask = series.times > 0
    for i in range(series.n):
        ax.plot(series.times[mask], series.temperatures[mask, i], color=shade[i], lw=1)
    _time_axis(ax, series.times)
    ax.set_xlabel("time")
    ax.set_ylabel("temperature (phonons)")
    if title:
        ax.set_title(title)
    fig.colorbar(
        plt.cm.ScalarMappable(plt.Normalize(1, series.n), "viridis"),
        ax=ax,
        label="ion index",
    )
    _finish(fig, path)


def save_sweep_plot(result: SweepResult, path) -> None:
    axis = result.axes[0]
    n = result.temperatures.shape[1]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    mesh = ax.pcolormesh(
        np.arange(1, n + 1), axis.values, result.temperatures, shading="nearest"
    )
    if axis.values.min() > 0 and axis.values.max() / axis.values.min() > 100:
        ax.set_yscale("log")
    ax.set_xlabel("ion index")
    ax.set_ylabel(axis.parameter)
    fig.colorbar(mesh, ax=ax, label="temperature (phonons)")
    _finish(fig, path)


def save_map_plot(result: SweepResult, path) -> None:
    axis1, axis2 = result.axes
    fig, ax = plt.subplots(figsize=(6.5, 5))
    # payload is [i, j] -> (gamma1[i], gamma2[j]); pcolormesh wants rows on y
    mesh = ax.pcolormesh(
        axis1.values, axis2.values, result.temperatures.T, shading="nearest"
    )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(axis1.parameter)
    ax.set_ylabel(axis2.parameter)
    fig.colorbar(mesh, ax=ax, label="middle-ion temperature (phonons)")
    _finish(fig, path)


def save_dynamics_plot(result: DynamicsResult, path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    series = result.series
    shade = plt.cm.viridis(np.linspace(0.0, 0.9, series.n))
    mask = series.times > 0
    for i in range(series.n):
        ax.plot(series.times[mask], series.temperatures[mask, i], color=shade[i], lw=1)
    if result.steady is not None:
        for i in (0, series.n - 1):
            ax.axhline(result.steady.temperatures[i], color=shade[i], ls=":", lw=0.8)
    _time_axis(ax, series.times)
    ax.set_xlabel("time")
    ax.set_ylabel("temperature (phonons)")
    ax.set_title(f"{result.kind} preset, {series.n} ions")
    _finish(fig, path)
