import numpy as np
import pytest

from aerograsp.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, main
from aerograsp.config import ConfigError, load_config, parse_override, resolve
from aerograsp.simkernel import run
from aerograsp.traceio import (SchemaError, columns, percent_reduction, read_trace_csv,
                               rms_table, write_trace_csv)
from aerograsp.trajectory import ScenarioSpec, Waypoint, WindModel

HOVER = (0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, np.pi / 2)


@pytest.fixture(scope="module")
def hover_traces(tmp_path_factory):
    out = tmp_path_factory.mktemp("traces")
    still = run(ScenarioSpec("hover", 0.2, (Waypoint(0.0, HOVER),)))
    windy = run(ScenarioSpec("hover", 0.5, (Waypoint(0.0, HOVER),),
                             wind=WindModel(mean=(0.5, 0.2, 0.0), gust_amplitude=0.2)))
    return out, still, windy


# -- config ---------------------------------------------------------------------------

def test_parse_override():
    assert parse_override("dt=0.002") == ("dt", 0.002)
    assert parse_override("controller.nu=[1, 2, 3]") == ("controller.nu", [1, 2, 3])
    with pytest.raises(ConfigError):
        parse_override("novalue")


def test_load_and_resolve(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("scenario: scenario2\ncase: 3\nwind_gust: 0.0\ngripper.pretension: 2.0\n"
                    "controller.delta: 0.2\nplant.payload_mass: 0.0\nx_pick: -0.5\n")
    setup = resolve(load_config(path, ["dt=0.002", "seed=5"]))
    assert (setup.scenario, setup.case, setup.dt) == ("scenario2", 3, 0.002)
    assert setup.spec.approach_speed == 0.2
    assert setup.spec.wind.gust_amplitude == 0.0 and setup.spec.wind.seed == 5
    assert setup.spec.gripper.pretension == 2.0
    assert setup.controller_cfg.delta == 0.2


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    nested = tmp_path / "nested.yaml"
    nested.write_text("controller:\n  delta: 0.2\n")
    with pytest.raises(ConfigError):
        load_config(nested)
    for bad in ({"bogus": 1}, {"controller.bogus": 1}, {"dt": -1}, {"controller": "pid"},
                {"trim": "x"}, {"baseline.preset": "odd"}):
        with pytest.raises(ConfigError):
            resolve(bad)


def test_mistuned_preset():
    setup = resolve({"controller": "baseline", "baseline.preset": "mistuned"})
    assert setup.baseline_cfg.fixed_rho == 0.1


# -- CSV and RMS tables -----------------------------------------------------------

def test_csv_round_trip(hover_traces):
    out, _, windy = hover_traces
    path = write_trace_csv(windy, out / "windy.csv", {"case": None})
    table = read_trace_csv(path)
    np.testing.assert_array_equal(table.group("chi"), windy.chi)
    np.testing.assert_array_equal(table.group("e"), windy.e)
    np.testing.assert_array_equal(table.data["khat1"], windy.khat[:, 1])
    assert table.gripper_state == windy.gripper
    assert list(table.data) == columns()[:-2]


def test_csv_schema_version_checked(hover_traces, tmp_path):
    _, still, _ = hover_traces
    path = write_trace_csv(still, tmp_path / "v.csv", {"version": 99})
    with pytest.raises(SchemaError):
        read_trace_csv(path)
    assert main(["rms", str(path)]) == EXIT_CONFIG


def test_zero_error_table(hover_traces):
    out, still, _ = hover_traces
    table = rms_table([read_trace_csv(write_trace_csv(still, out / "still.csv"))])
    np.testing.assert_array_equal(table.rows, np.zeros((1, 8)))


def test_halved_errors_give_fifty_percent(hover_traces, tmp_path):
    _, _, windy = hover_traces
    base = read_trace_csv(write_trace_csv(windy, tmp_path / "b.csv"))
    prop = read_trace_csv(write_trace_csv(windy, tmp_path / "p.csv"))
    for name in list(prop.data):
        if name.startswith("e_"):
            prop.data[name] = 0.5 * prop.data[name]
    table = rms_table([base, prop], pair=True)
    np.testing.assert_allclose(table.reduction, 50.0)
    assert "% reduction" in table.format()


def test_percent_reduction_formula():
    np.testing.assert_allclose(percent_reduction([2.0, 4.0, 0.0], [1.0, 1.0, 0.0]),
                               [50.0, 75.0, 0.0])


def test_rms_reports_angles_in_degrees(hover_traces, tmp_path):
    _, _, windy = hover_traces
    table = rms_table([read_trace_csv(write_trace_csv(windy, tmp_path / "w.csv"))])
    expected = np.sqrt(np.mean(windy.e ** 2, axis=0))
    np.testing.assert_allclose(table.rows[0, :3], expected[:3])
    np.testing.assert_allclose(table.rows[0, 3:], np.degrees(expected[3:]))


# -- subcommands --------------------------------------------------------------------

def test_run_writes_csv_and_summary(tmp_path, capsys):
    out = tmp_path / "s1.csv"
    code = main(["run", "--scenario", "scenario1", "--controller", "proposed",
                 "--set", "duration=0.3", "--out", str(out)])
    assert code == EXIT_OK
    text = capsys.readouterr().out
    assert "grasp_times=" in text and "drop_times=" in text and "uub satisfied=True" in text
    table = read_trace_csv(out)
    assert table.metadata["scenario"] == "scenario1"
    assert len(table.data["t"]) == 301


def test_run_is_byte_reproducible(tmp_path):
    args = ["run", "--scenario", "scenario1", "--seed", "3", "--set", "duration=0.5"]
    assert main(args + ["--out", str(tmp_path / "a.csv")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b.csv")]) == EXIT_OK
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_missing_config_exits_nonzero(tmp_path, capsys):
    code = main(["run", "--config", str(tmp_path / "nope.yaml")])
    assert code == EXIT_CONFIG
    assert "error" in capsys.readouterr().err


def test_rms_subcommand(hover_traces, tmp_path, capsys):
    _, still, windy = hover_traces
    a = write_trace_csv(windy, tmp_path / "a.csv")
    b = write_trace_csv(still, tmp_path / "b.csv")
    assert main(["rms", str(a), str(b), "--pair", "--out", str(tmp_path / "t.csv")]) == EXIT_OK
    assert "% reduction" in capsys.readouterr().out
    assert (tmp_path / "t.csv").read_text().splitlines()[0].startswith("run,x,y,z")
    assert main(["rms", str(a), "--pair"]) == EXIT_CONFIG


def test_verify_subcommand(capsys):
    assert main(["verify", "--samples", "20"]) == EXIT_OK
    assert "9/9 checks passed" in capsys.readouterr().out
    assert main(["verify", "--samples", "20", "--tol", "skew_symmetry=1e-40"]) == EXIT_FAILED
    assert main(["verify", "--tol", "bogus=1"]) == EXIT_CONFIG


SHORT_PASS = ["--set", "t_takeoff_end=1.0", "--set", "t_approach=1.5", "--set", "duration=8.0"]


def test_sweep_runs_cases_at_their_speeds(tmp_path, capsys):
    code = main(["sweep", "--cases", "1", "2", "--out", str(tmp_path)] + SHORT_PASS)
    assert code == EXIT_OK
    lines = (tmp_path / "rms_table.csv").read_text().splitlines()
    assert len(lines) == 3
    for case, speed in ((1, 0.4), (2, 0.3)):
        table = read_trace_csv(tmp_path / f"scenario2_proposed_case{case}.csv")
        assert table.metadata["case"] == case
        slope = np.diff(table.data["chi_d_x"]) / np.diff(table.data["t"])
        assert slope.min() == pytest.approx(-speed, abs=1e-6)
