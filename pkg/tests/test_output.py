"""Serialization: lossless floats, table layouts, JSON documents."""

import io
import json
import math

import numpy as np
import pytest

from ionheat.baths import BathAttachment
from ionheat.experiments import ScenarioConfig, SweepAxis, SweepResult, run_gamma_map
from ionheat.geometry import TrapSpec, build_coupling_matrix, uniform_positions
from ionheat.output import (
    format_float,
    profile_payload,
    series_payload,
    sweep_payload,
    write_map_csv,
    write_positions_csv,
    write_profile_csv,
    write_series_csv,
    write_sweep_csv,
    write_json,
)
from ionheat.spectral import TemperatureProfile, TemperatureSeries


@pytest.mark.parametrize(
    "value",
    [0.1, 1.0 / 3.0, math.pi, 1e-300, 1e300, 123456.78901234567, -0.0, 5.0],
)
def test_float_formatting_survives_a_round_trip(value):
    assert float(format_float(value)) == value


def small_chain(n=3):
    chain = uniform_positions(n)
    return chain, build_coupling_matrix(chain)


def test_positions_table_layout():
    chain, coupling = small_chain()
    buf = io.StringIO()
    write_positions_csv(chain, coupling, buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "ion_index,z,omega_i"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[0] == "1"
    assert float(first[2]) == coupling.local_freqs[0]


def test_profile_table_layout():
    chain, coupling = small_chain()
    profile = TemperatureProfile(temperatures=np.array([1.0, 2.0, 3.0]), time=math.inf)
    buf = io.StringIO()
    write_profile_csv(chain, coupling, profile, buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "ion_index,z,omega_i,temperature"
    assert [line.split(",")[3] for line in lines[1:]] == ["1", "2", "3"]


def test_series_table_layout():
    series = TemperatureSeries(
        times=np.array([0.0, 1.5]),
        temperatures=np.array([[5.0, 5.0], [4.0, 6.0]]),
    )
    buf = io.StringIO()
    write_series_csv(series, buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "time,ion_1,ion_2"
    assert lines[2].startswith("1.5,4,6")


def fake_sweep_result(axes, temps):
    chain, coupling = small_chain(temps.shape[-1] if temps.ndim > 1 else 3)
    return SweepResult(
        axes=axes, temperatures=temps, chain=chain, coupling=coupling, metadata={}
    )


def test_sweep_table_uses_the_parameter_name():
    axis = SweepAxis("gamma_bg", np.array([0.1, 1.0]))
    result = fake_sweep_result((axis,), np.arange(6.0).reshape(2, 3))
    buf = io.StringIO()
    write_sweep_csv(result, buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "gamma_bg,ion_1,ion_2,ion_3"
    assert len(lines) == 3
    assert lines[1].split(",")[1:] == ["0", "1", "2"]


def test_map_table_is_row_major():
    scenario = ScenarioConfig(
        trap=TrapSpec(kind="uniform", n=4, omega_x=10.0),
        attachments=(
            BathAttachment(ion_index=1, gamma=0.1, temperature=2.0),
            BathAttachment(ion_index=4, gamma=0.1, temperature=10.0),
        ),
    )
    result = run_gamma_map(
        scenario,
        gamma1_grid=np.array([0.1, 1.0, 10.0]),
        gamma2_grid=np.array([0.5, 5.0]),
    )
    buf = io.StringIO()
    write_map_csv(result, buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "gamma1,gamma2,t_m"
    assert len(lines) == 7
    pairs = [tuple(float(v) for v in line.split(",")[:2]) for line in lines[1:]]
    assert pairs == [
        (0.1, 0.5), (0.1, 5.0), (1.0, 0.5), (1.0, 5.0), (10.0, 0.5), (10.0, 5.0)
    ]
    for (g1, g2), line in zip(pairs, lines[1:]):
        i = list(result.axes[0].values).index(g1)
        j = list(result.axes[1].values).index(g2)
        assert float(line.split(",")[2]) == result.temperatures[i, j]


def test_wrong_writer_for_the_result_shape():
    axis = SweepAxis("gamma", np.array([0.1, 1.0]))
    result = fake_sweep_result((axis,), np.arange(6.0).reshape(2, 3))
    with pytest.raises(ValueError):
        write_map_csv(result, io.StringIO())


def test_json_documents_parse_and_end_with_a_newline():
    chain, coupling = small_chain()
    profile = TemperatureProfile(temperatures=np.array([1.0, 2.0, 3.0]), time=math.inf)
    buf = io.StringIO()
    write_json(profile_payload(chain, coupling, profile), buf)
    text = buf.getvalue()
    assert text.endswith("\n")
    doc = json.loads(text)
    assert doc["time"] is None
    assert doc["temperature"] == [1.0, 2.0, 3.0]

    series = TemperatureSeries(
        times=np.array([0.0, 1.5]),
        temperatures=np.array([[5.0, 5.0], [4.0, 6.0]]),
    )
    doc = json.loads(json.dumps(series_payload(series)))
    assert doc["times"] == [0.0, 1.5]
    assert doc["temperatures"][1] == [4.0, 6.0]


def test_writers_surface_oserror_with_the_path(tmp_path):
    chain, coupling = small_chain()
    target = tmp_path / "missing" / "out.csv"
    with pytest.raises(OSError, match="out.csv"):
        write_positions_csv(chain, coupling, target)
