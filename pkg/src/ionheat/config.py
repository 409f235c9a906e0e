"""Run-configuration schema: JSON text to validated domain objects.

The file format mirrors the library's vocabulary directly. Parsing
reports every violation in one shot, rejects unknown keys (typos should
fail loudly, not silently fall back to defaults), and defers any actual
numerics: an omitted harmonic axial frequency is calibrated only when
the scenario is built.

Schema:

    {
      "n": 100,
      "trap": {"kind": "uniform" | "harmonic", "omega_x": 10.0,
               "omega_z": 0.5},                    # omega_z optional
      "baths": [{"ion": 1, "gamma": 10.0, "temperature": 2.0}, ...],
      "background": {"gamma": 1e-3, "temperature": 4.0},   # optional
      "initial_temperature": 5.0,                          # optional
      "times": {"t_max": 1e4, "points": 400,               # optional
                "spacing": "log", "t_min": 1e-2},
      "sweep": [{"parameter": "gamma", "values": [...]} |  # optional
                {"parameter": "gamma", "start": 1e-3, "stop": 1e2,
                 "points": 40, "spacing": "log"}],
      "output": {"path": "out.csv", "format": "csv"}       # optional
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baths import BathAttachment
from .errors import ConfigError
from .experiments import SWEEP_PARAMETERS, ScenarioConfig, SweepAxis
from .geometry import TrapSpec, calibrate_axial_frequency

_TOP_KEYS = {
    "n", "trap", "baths", "background", "initial_temperature",
    "times", "sweep", "output",
}
_TRAP_KEYS = {"kind", "omega_x", "omega_z"}
_BATH_KEYS = {"ion", "gamma", "temperature"}
_BACKGROUND_KEYS = {"gamma", "temperature"}
_TIMES_KEYS = {"t_max", "points", "spacing", "t_min"}
_SWEEP_KEYS = {"parameter", "values", "start", "stop", "points", "spacing"}
_OUTPUT_KEYS = {"path", "format"}

DEFAULT_TIME_POINTS = 200
# A log grid has to start somewhere above zero; four decades below the
# horizon covers every relaxation scale the presets probe.
LOG_START_FRACTION = 1e-4


@dataclass(frozen=True)
class TimeGridSpec:
    """Declarative time grid; materialized only on demand."""

    t_max: float
    points: int = DEFAULT_TIME_POINTS
    spacing: str = "log"
    t_min: float | None = None

    def grid(self) -> np.ndarray:
        if self.spacing == "linear":
            start = 0.0 if self.t_min is None else self.t_min
            return np.linspace(start, self.t_max, self.points)
        start = self.t_max * LOG_START_FRACTION if self.t_min is None else self.t_min
        return np.logspace(np.log10(start), np.log10(self.t_max), self.points)


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of one configuration file."""

    n: int
    trap_kind: str
    omega_x: float
    omega_z: float | None
    attachments: tuple[BathAttachment, ...]
    background: tuple[float, float] | None
    initial_temperature: float
    times: TimeGridSpec | None
    sweep: tuple[SweepAxis, ...]
    output_path: str | None
    output_format: str


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _reject_unknown(section: dict, allowed: set, where: str, problems: list):
    for key in sorted(set(section) - allowed):
        problems.append(f"{where}: unknown key {key!r}")


def _number_in(section: dict, key: str, where: str, problems: list, minimum=None):
    value = section.get(key)
    if value is None:
        return None
    if not _is_number(value):
        problems.append(f"{where}.{key}: expected a number, got {value!r}")
        return None
    if minimum is not None and not value >= minimum:
        problems.append(f"{where}.{key}: must be >= {minimum:g}, got {value!r}")
        return None
    return float(value)


def _parse_trap(section, problems) -> tuple[str, float, float | None]:
    kind, omega_x, omega_z = "uniform", None, None
    if not isinstance(section, dict):
        problems.append(f"trap: expected an object, got {section!r}")
        return kind, omega_x, omega_z
    _reject_unknown(section, _TRAP_KEYS, "trap", problems)
    kind = section.get("kind")
    if kind not in ("uniform", "harmonic"):
        problems.append(f"trap.kind: expected 'uniform' or 'harmonic', got {kind!r}")
        kind = "uniform"
    if "omega_x" not in section:
        problems.append("trap.omega_x: required")
    else:
        omega_x = _number_in(section, "omega_x", "trap", problems)
        if omega_x is not None and omega_x <= 0:
            problems.append(f"trap.omega_x: must be positive, got {omega_x!r}")
            omega_x = None
    omega_z = _number_in(section, "omega_z", "trap", problems)
    if omega_z is not None and omega_z <= 0:
        problems.append(f"trap.omega_z: must be positive, got {omega_z!r}")
        omega_z = None
    if kind == "uniform" and omega_z is not None:
        problems.append("trap.omega_z: only meaningful for a harmonic trap")
        omega_z = None
    return kind, omega_x, omega_z


def _parse_baths(section, problems) -> tuple[BathAttachment, ...]:
    if section is None:
        return ()
    if not isinstance(section, list):
        problems.append(f"baths: expected a list, got {section!r}")
        return ()
    attachments = []
    for i, entry in enumerate(section):
        where = f"baths[{i}]"
        if not isinstance(entry, dict):
            problems.append(f"{where}: expected an object, got {entry!r}")
            continue
        _reject_unknown(entry, _BATH_KEYS, where, problems)
        missing = [k for k in ("ion", "gamma", "temperature") if k not in entry]
        if missing:
            problems.append(f"{where}: missing {', '.join(missing)}")
            continue
        if not _is_int(entry["ion"]):
            problems.append(f"{where}.ion: expected an integer, got {entry['ion']!r}")
            continue
        if not (_is_number(entry["gamma"]) and _is_number(entry["temperature"])):
            problems.append(f"{where}: gamma and temperature must be numbers")
            continue
        try:
            attachments.append(
                BathAttachment(
                    ion_index=entry["ion"],
                    gamma=float(entry["gamma"]),
                    temperature=float(entry["temperature"]),
                )
            )
        except ConfigError as exc:
            problems.extend(f"{where}: {v}" for v in exc.violations)
    return tuple(attachments)


def _parse_background(section, problems) -> tuple[float, float] | None:
    if section is None:
        return None
    if not isinstance(section, dict):
        problems.append(f"background: expected an object, got {section!r}")
        return None
    _reject_unknown(section, _BACKGROUND_KEYS, "background", problems)
    missing = [k for k in ("gamma", "temperature") if k not in section]
    if missing:
        problems.append(f"background: missing {', '.join(missing)}")
        return None
    gamma = _number_in(section, "gamma", "background", problems, minimum=0.0)
    temp = _number_in(section, "temperature", "background", problems, minimum=0.0)
    if gamma is None or temp is None:
        return None
    return (gamma, temp)


def _parse_times(section, problems) -> TimeGridSpec | None:
    if section is None:
        return None
    if not isinstance(section, dict):
        problems.append(f"times: expected an object, got {section!r}")
        return None
    _reject_unknown(section, _TIMES_KEYS, "times", problems)
    if "t_max" not in section:
        problems.append("times.t_max: required")
        return None
    t_max = _number_in(section, "t_max", "times", problems)
    if t_max is not None and t_max <= 0:
        problems.append(f"times.t_max: must be positive, got {t_max!r}")
        t_max = None
    points = section.get("points", DEFAULT_TIME_POINTS)
    if not (_is_int(points) and points >= 2):
        problems.append(f"times.points: expected an integer >= 2, got {points!r}")
        points = DEFAULT_TIME_POINTS
    spacing = section.get("spacing", "log")
    if spacing not in ("linear", "log"):
        problems.append(f"times.spacing: expected 'linear' or 'log', got {spacing!r}")
        spacing = "log"
    t_min = _number_in(section, "t_min", "times", problems)
    if t_min is not None:
        floor = 0.0 if spacing == "linear" else None
        if floor is not None and t_min < floor:
            problems.append(f"times.t_min: must be >= 0, got {t_min!r}")
            t_min = None
        elif spacing == "log" and t_min <= 0:
            problems.append(f"times.t_min: must be positive on a log grid, got {t_min!r}")
            t_min = None
    if t_max is None:
        return None
    if t_min is not None and t_min >= t_max:
        problems.append(f"times: t_min {t_min!r} must be below t_max {t_max!r}")
        return None
    return TimeGridSpec(t_max=t_max, points=points, spacing=spacing, t_min=t_min)


def _parse_sweep(section, problems) -> tuple[SweepAxis, ...]:
    if section is None:
        return ()
    entries = section if isinstance(section, list) else [section]
    axes = []
    seen = set()
    for i, entry in enumerate(entries):
        where = f"sweep[{i}]"
        if not isinstance(entry, dict):
            problems.append(f"{where}: expected an object, got {entry!r}")
            continue
        _reject_unknown(entry, _SWEEP_KEYS, where, problems)
        parameter = entry.get("parameter")
        if parameter not in SWEEP_PARAMETERS:
            problems.append(
                f"{where}.parameter: expected one of {', '.join(SWEEP_PARAMETERS)}, "
                f"got {parameter!r}"
            )
            continue
        if parameter in seen:
            problems.append(f"{where}: duplicate sweep over {parameter!r}")
            continue
        seen.add(parameter)
        if "values" in entry:
            extra = {"start", "stop", "points", "spacing"} & set(entry)
            if extra:
                problems.append(
                    f"{where}: give either explicit values or a start/stop range, not both"
                )
                continue
            values = entry["values"]
            if not (isinstance(values, list) and values and all(_is_number(v) for v in values)):
                problems.append(f"{where}.values: expected a non-empty list of numbers")
                continue
            grid = np.asarray(values, dtype=float)
        else:
            missing = [k for k in ("start", "stop", "points") if k not in entry]
            if missing:
                problems.append(f"{where}: missing {', '.join(missing)}")
                continue
            start = _number_in(entry, "start", where, problems)
            stop = _number_in(entry, "stop", where, problems)
            points = entry["points"]
            if not (_is_int(points) and points >= 1):
                problems.append(f"{where}.points: expected a positive integer, got {points!r}")
                continue
            spacing = entry.get("spacing", "log")
            if spacing not in ("linear", "log"):
                problems.append(f"{where}.spacing: expected 'linear' or 'log', got {spacing!r}")
                continue
            if start is None or stop is None:
                continue
            if spacing == "log":
                if start <= 0 or stop <= 0:
                    problems.append(f"{where}: log grids need positive start and stop")
                    continue
                grid = np.logspace(np.log10(start), np.log10(stop), points)
            else:
                grid = np.linspace(start, stop, points)
        try:
            axes.append(SweepAxis(parameter=parameter, values=grid))
        except ConfigError as exc:
            problems.extend(f"{where}: {v}" for v in exc.violations)
    return tuple(axes)


def _parse_output(section, problems) -> tuple[str | None, str]:
    if section is None:
        return None, "csv"
    if not isinstance(section, dict):
        problems.append(f"output: expected an object, got {section!r}")
        return None, "csv"
    _reject_unknown(section, _OUTPUT_KEYS, "output", problems)
    path = section.get("path")
    if path is not None and not isinstance(path, str):
        problems.append(f"output.path: expected a string, got {path!r}")
        path = None
    fmt = section.get("format", "csv")
    if fmt not in ("csv", "json"):
        problems.append(f"output.format: expected 'csv' or 'json', got {fmt!r}")
        fmt = "csv"
    return path, fmt


def parse_config(text: str) -> RunConfig:
    """Validate a JSON config document, reporting all violations at once."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"JSON syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be an object, got {type(raw).__name__}")

    problems: list[str] = []
    _reject_unknown(raw, _TOP_KEYS, "config", problems)

    n = raw.get("n")
    if not (_is_int(n) and n >= 1):
        problems.append(f"n: expected a positive integer, got {n!r}")
        n = 1

    trap_kind, omega_x, omega_z = _parse_trap(raw.get("trap"), problems)
    attachments = _parse_baths(raw.get("baths"), problems)
    for att in attachments:
        if att.ion_index > n:
            problems.append(
                f"baths: ion {att.ion_index} is out of range [1, {n}]"
            )
    seen_ions = [a.ion_index for a in attachments]
    for ion in sorted({i for i in seen_ions if seen_ions.count(i) > 1}):
        problems.append(f"baths: duplicate entry for ion {ion}")

    background = _parse_background(raw.get("background"), problems)
    initial = raw.get("initial_temperature", 0.0)
    if not (_is_number(initial) and initial >= 0):
        problems.append(
            f"initial_temperature: expected a non-negative number, got {initial!r}"
        )
        initial = 0.0
    times = _parse_times(raw.get("times"), problems)
    sweep = _parse_sweep(raw.get("sweep"), problems)
    output_path, output_format = _parse_output(raw.get("output"), problems)

    if problems:
        raise ConfigError(problems)
    return RunConfig(
        n=n,
        trap_kind=trap_kind,
        omega_x=omega_x,
        omega_z=omega_z,
        attachments=attachments,
        background=background,
        initial_temperature=float(initial),
        times=times,
        sweep=sweep,
        output_path=output_path,
        output_format=output_format,
    )


def load_config(path) -> RunConfig:
    """Read and validate a config file, with the path in any complaint."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError([f"{path}: {v}" for v in exc.violations]) from exc


def scenario_from_config(config: RunConfig) -> ScenarioConfig:
    """Build the concrete scenario, calibrating omega_z when omitted.

    A harmonic trap without an explicit axial frequency gets the rate
    that makes the largest equilibrium gap exactly one length unit.
    """
    omega_z = config.omega_z
    if config.trap_kind == "harmonic" and omega_z is None:
        omega_z = calibrate_axial_frequency(config.n)
    trap = TrapSpec(
        kind=config.trap_kind, n=config.n, omega_x=config.omega_x, omega_z=omega_z
    )
    return ScenarioConfig(
        trap=trap,
        attachments=config.attachments,
        background=config.background,
        initial_temp=config.initial_temperature,
        sweep=config.sweep,
    )
