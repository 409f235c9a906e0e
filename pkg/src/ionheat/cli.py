"""Command-line surface.

Subcommands cover the full pipeline: equilibrium geometry, steady
profiles, time evolution, the three sweep studies, the canonical
relaxation presets, the oracle suite and unit conversion. Exit codes:
0 success, 2 configuration problem, 3 numerical failure, 4 validation
failure. Results go to stdout or --output; --plot additionally renders
a PNG next to the delimited output.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import output as out
from .baths import assemble_profile, noise_strengths
from .config import RunConfig, load_config, scenario_from_config
from .errors import ConfigError, NumericalError
from .experiments import (
    build_chain,
    run_background_sweep,
    run_dynamics_scenario,
    run_gamma_map,
    run_gamma_sweep,
    steady_profile,
)
from .geometry import build_coupling_matrix
from .spectral import build_drift_matrix, decompose, evolve_temperatures, thermal_initial
from .units import DEFAULT_MASS_AMU, DEFAULT_SPACING_M, to_physical_units, units_report
from .validation import run_validation


def _build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", metavar="PATH", help="JSON run configuration")
    shared.add_argument("--output", metavar="PATH", help="result file (default: stdout)")
    shared.add_argument(
        "--format", choices=("csv", "json"), default=None, help="result format"
    )
    shared.add_argument("--seed", type=int, default=42, help="base RNG seed")
    shared.add_argument("--threads", type=int, default=1, help="worker pool size")
    shared.add_argument("--quiet", action="store_true", help="suppress progress notes")
    shared.add_argument(
        "--plot", action="store_true", help="also render a PNG next to --output"
    )

    parser = argparse.ArgumentParser(
        prog="ionheat",
        description="Temperature distributions of laser-driven trapped-ion chains",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, handler, help_text, **kwargs):
        p = sub.add_parser(name, parents=[shared], help=help_text, **kwargs)
        p.set_defaults(handler=handler)
        return p

    command("positions", _cmd_positions, "equilibrium positions and local frequencies")
    command("steady", _cmd_steady, "steady-state temperature profile")
    command("evolve", _cmd_evolve, "temperature evolution on the configured time grid")
    command("sweep-gamma", _cmd_sweep_gamma, "steady profiles over a shared drive-rate grid")
    command("map-gamma", _cmd_map_gamma, "middle-ion temperature over two drive-rate grids")
    command(
        "sweep-background",
        _cmd_sweep_background,
        "steady profiles over a background-rate grid",
    )
    dynamics = command("dynamics", _cmd_dynamics, "canonical 20-ion relaxation runs")
    dynamics.add_argument(
        "--preset",
        required=True,
        choices=("uniform", "harmonic", "harmonic-bg"),
        help="trap preset",
    )
    dynamics.add_argument("--n", type=int, default=20, help="ion count")
    dynamics.add_argument("--points", type=int, default=400, help="time grid size")
    validate = command("validate", _cmd_validate, "run the oracle cross-check suite")
    validate.add_argument("--instances", type=int, default=20, help="random instances")
    validate.add_argument(
        "--trajectories", type=int, default=2000, help="Monte-Carlo ensemble size"
    )
    units = command("units", _cmd_units, "dimensionless-to-laboratory conversion table")
    units.add_argument("--mass", type=float, default=DEFAULT_MASS_AMU, help="ion mass (amu)")
    units.add_argument(
        "--d0", type=float, default=DEFAULT_SPACING_M, help="largest ion spacing (m)"
    )
    units.add_argument("--omega-x", type=float, default=10.0, help="rate to convert")
    units.add_argument("--gamma", type=float, default=0.1, help="rate to convert")
    units.add_argument("--time", type=float, default=400.0, help="time to convert")
    return parser


def _require_config(args) -> RunConfig:
    if not args.config:
        raise ConfigError(f"'{args.command}' needs --config <file>")
    return load_config(args.config)


def _destination(args, config: RunConfig | None):
    path = args.output or (config.output_path if config else None)
    fmt = args.format or (config.output_format if config else None) or "csv"
    return path, fmt


def _plot_path(args, path) -> Path | None:
    if not args.plot:
        return None
    if not path:
        raise ConfigError("--plot needs --output to place the PNG next to")
    return Path(path).with_suffix(".png")


def _emit(writer_csv, payload, path, fmt):
    dest = path if path else sys.stdout
    if fmt == "json":
        out.write_json(payload(), dest)
    else:
        writer_csv(dest)


def _note(args, message: str) -> None:
    if not args.quiet:
        print(message, file=sys.stderr)


def _cmd_positions(args) -> int:
    config = _require_config(args)
    scenario = scenario_from_config(config)
    chain = build_chain(scenario.trap)
    coupling = build_coupling_matrix(chain)
    path, fmt = _destination(args, config)
    _emit(
        lambda dest: out.write_positions_csv(chain, coupling, dest),
        lambda: out.positions_payload(chain, coupling),
        path,
        fmt,
    )
    if (png := _plot_path(args, path)) is not None:
        from . import plots

        plots.save_positions_plot(chain, coupling, png)
    return 0


def _cmd_steady(args) -> int:
    config = _require_config(args)
    scenario = scenario_from_config(config)
    chain, coupling, profile = steady_profile(scenario)
    path, fmt = _destination(args, config)
    _emit(
        lambda dest: out.write_profile_csv(chain, coupling, profile, dest),
        lambda: out.profile_payload(chain, coupling, profile),
        path,
        fmt,
    )
    if (png := _plot_path(args, path)) is not None:
        from . import plots

        plots.save_profile_plot(
            profile, png, title=f"steady state, {chain.trap.kind} chain of {chain.n}"
        )
    return 0


def _cmd_evolve(args) -> int:
    config = _require_config(args)
    if config.times is None:
        raise ConfigError("'evolve' needs a times section in the config")
    scenario = scenario_from_config(config)
    chain = build_chain(scenario.trap)
    coupling = build_coupling_matrix(chain)
    bath = assemble_profile(scenario.trap.n, scenario.attachments, scenario.background)
    decomp = decompose(build_drift_matrix(coupling, bath))
    series = evolve_temperatures(
        decomp,
        thermal_initial(scenario.initial_temp, coupling),
        noise_strengths(bath, coupling),
        coupling,
        config.times.grid(),
    )
    path, fmt = _destination(args, config)
    _emit(
        lambda dest: out.write_series_csv(series, dest),
        lambda: out.series_payload(series),
        path,
        fmt,
    )
    if (png := _plot_path(args, path)) is not None:
        from . import plots

        plots.save_series_plot(series, png, title=f"{chain.trap.kind} chain of {chain.n}")
    return 0


def _grid_or_none(config: RunConfig, parameter: str):
    for axis in config.sweep:
        if axis.parameter == parameter:
            return axis.values
    return None


def _cmd_sweep_gamma(args) -> int:
    config = _require_config(args)
    scenario = scenario_from_config(config)
    result = run_gamma_sweep(
        scenario, _grid_or_none(config, "gamma"), threads=args.threads
    )
    return _emit_sweep(args, config, result)


def _cmd_sweep_background(args) -> int:
    config = _require_config(args)
    scenario = scenario_from_config(config)
    result = run_background_sweep(
        scenario, _grid_or_none(config, "gamma_bg"), threads=args.threads
    )
    return _emit_sweep(args, config, result)


def _emit_sweep(args, config, result) -> int:
    path, fmt = _destination(args, config)
    _emit(
        lambda dest: out.write_sweep_csv(result, dest),
        lambda: out.sweep_payload(result),
        path,
        fmt,
    )
    if (png := _plot_path(args, path)) is not None:
        from . import plots

        plots.save_sweep_plot(result, png)
    return 0


def _cmd_map_gamma(args) -> int:
    config = _require_config(args)
    scenario = scenario_from_config(config)
    result = run_gamma_map(
        scenario,
        _grid_or_none(config, "gamma1"),
        _grid_or_none(config, "gamma2"),
        threads=args.threads,
    )
    path, fmt = _destination(args, config)
    _emit(
        lambda dest: out.write_map_csv(result, dest),
        lambda: out.sweep_payload(result),
        path,
        fmt,
    )
    if (png := _plot_path(args, path)) is not None:
        from . import plots

        plots.save_map_plot(result, png)
    return 0


def _cmd_dynamics(args) -> int:
    kind = args.preset.replace("-", "_")
    result = run_dynamics_scenario(kind, n=args.n, points=args.points)
    path, fmt = _destination(args, None)
    _emit(
        lambda dest: out.write_series_csv(result.series, dest),
        lambda: out.dynamics_payload(result),
        path,
        fmt,
    )
    if result.diagnostic:
        _note(args, f"note: {result.diagnostic}")
    if result.relaxation is not None:
        t1 = ", ".join(
            f"ion {ion}: {('not reached' if t is None else f'{t:.4g}')}"
            for ion, t in sorted(result.relaxation.t1.items())
        )
        t2 = result.relaxation.t2
        _note(args, f"bath-contact times (eps={result.relaxation.epsilon:g}): {t1}")
        _note(
            args,
            f"global settling time: {'not reached on this grid' if t2 is None else f'{t2:.4g}'}",
        )
    if (png := _plot_path(args, path)) is not None:
        from . import plots

        plots.save_dynamics_plot(result, png)
    return 0


def _cmd_validate(args) -> int:
    report = run_validation(
        seed=args.seed,
        instances=args.instances,
        n_traj=args.trajectories,
        threads=args.threads,
    )
    lines = [r.describe() for r in report.instances]
    summary = report.summary()
    if args.output:
        if (args.format or "csv") == "json":
            payload = {
                "seed": report.seed,
                "passed": report.passed,
                "worst_pairwise": report.worst_pairwise,
                "worst_sigma": report.worst_sigma,
                "instances": [vars(r) for r in report.instances],
            }
            out.write_json(payload, args.output)
        else:
            Path(args.output).write_text("\n".join(lines + [summary]) + "\n")
    if not args.quiet:
        for line in lines:
            print(line)
    print(summary)
    return 0 if report.passed else 4


def _pretty_quantity(value: float, unit: str) -> str:
    scales = {
        "Hz": [(1e9, "GHz"), (1e6, "MHz"), (1e3, "kHz"), (1.0, "Hz")],
        "s": [(1.0, "s"), (1e-3, "ms"), (1e-6, "us"), (1e-9, "ns")],
    }
    if unit not in scales:
        return ""
    for scale, label in scales[unit]:
        if abs(value) >= scale:
            return f"{value / scale:.4g} {label}"
    return f"{value:.4g} {unit}"


def _cmd_units(args) -> int:
    units = to_physical_units(args.mass, args.d0)
    rows = units_report(
        units, omega_x=args.omega_x, gamma=args.gamma, sample_time=args.time
    )
    path, fmt = _destination(args, None)
    if fmt == "json":
        payload = {label: {"value": value, "unit": unit} for label, value, unit in rows}
        out.write_json(payload, path if path else sys.stdout)
        return 0
    dest = open(path, "w", encoding="utf-8") if path else sys.stdout
    try:
        width = max(len(label) for label, _, _ in rows)
        for label, value, unit in rows:
            pretty = _pretty_quantity(value, unit)
            suffix = f"  ({pretty})" if pretty else ""
            print(f"{label:<{width}}  {out.format_float(value)} {unit}{suffix}", file=dest)
    finally:
        if dest is not sys.stdout:
            dest.close()
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
