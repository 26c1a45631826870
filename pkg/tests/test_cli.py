import math

import numpy as np
import pytest

from fracepi.cli import (ConfigError, load_scenario_config, main,
                         read_observed_csv, read_trajectory_csv,
                         write_observed_csv, write_trajectory_csv)
from fracepi.fitting import generate_synthetic
from fracepi.integrate import TimeGrid, TimeSeries


@pytest.fixture()
def obs_csv(tmp_path, scenario):
    params, y0 = scenario
    grid = TimeGrid(0.0, 30.0, 0.05)
    obs = generate_synthetic(params, y0, alpha_star=0.95, n_order=7,
                             sample_times=np.arange(5.0, 30.1, 5.0),
                             noise_pct=0.0, seed=2, grid=grid)
    path = tmp_path / "obs.csv"
    with open(path, "w", newline="") as fh:
        write_observed_csv(fh, obs)
    return path


class TestScenarioConfig:
    def test_empty_file_gives_default_scenario(self, tmp_path, scenario):
        params, y0 = scenario
        path = tmp_path / "empty.cfg"
        path.write_text("")
        cfg = load_scenario_config(str(path))
        assert cfg.params == params
        assert cfg.initial == y0
        assert cfg.alpha == 1.0
        assert cfg.order_n == 7
        assert cfg.t_end == 100.0
        assert cfg.step == 0.01
        assert cfg.epsilon == 1e-6

    def test_alpha_override_keeps_defaults(self, tmp_path, scenario):
        params, y0 = scenario
        path = tmp_path / "alpha.cfg"
        path.write_text("alpha = 0.987\n")
        cfg = load_scenario_config(str(path))
        assert cfg.alpha == 0.987
        assert cfg.params == params
        assert cfg.initial == y0

    def test_comments_and_blank_lines_ignored(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("# a comment\n\nalpha = 0.95  # trailing comment\n")
        assert load_scenario_config(str(path)).alpha == 0.95

    def test_alpha_out_of_bounds_names_the_constraint(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("alpha = 1.5\n")
        with pytest.raises(ConfigError, match="0 < alpha <= 1"):
            load_scenario_config(str(path))

    def test_unknown_key_names_the_line(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("alpha = 0.9\nfoo = 1\n")
        with pytest.raises(ConfigError, match=r"bad\.cfg:2.*unknown key 'foo'"):
            load_scenario_config(str(path))

    def test_unparsable_value_names_the_line(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("alpha = fast\n")
        with pytest.raises(ConfigError, match=r"bad\.cfg:1.*'fast'"):
            load_scenario_config(str(path))

    def test_duplicate_key_rejected(self, tmp_path):
        path = tmp_path / "dup.cfg"
        path.write_text("alpha = 0.9\nalpha = 0.8\n")
        with pytest.raises(ConfigError, match="duplicate"):
            load_scenario_config(str(path))

    def test_population_rescale_derives_dependents(self, tmp_path):
        path = tmp_path / "scale.cfg"
        path.write_text("n_h = 1000\nm_ratio = 2\ni_h0 = 10\n")
        cfg = load_scenario_config(str(path))
        assert cfg.params.n_m == 2000.0
        assert cfg.initial.s_h == 990.0
        assert cfg.initial.s_m == 2000.0

    def test_inconsistent_initial_sum_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("s_h0 = 56000\n")  # 56000 + 216 > n_h
        with pytest.raises(ConfigError, match="n_h"):
            load_scenario_config(str(path))


class TestCsvRoundTrips:
    def test_trajectory_round_trip_is_value_identical(self, tmp_path):
        times = np.linspace(0.0, 1.0, 7)
        values = np.column_stack([np.pi * times, np.exp(times)])
        series = TimeSeries(times=times, values=values, columns=("a", "b"))
        path = tmp_path / "t.csv"
        with open(path, "w", newline="") as fh:
            write_trajectory_csv(fh, series)
        back = read_trajectory_csv(str(path))
        assert np.array_equal(back.times, series.times)
        assert np.array_equal(back.values, series.values)
        assert back.columns == ("a", "b")

    def test_observed_round_trip(self, tmp_path, obs_csv):
        obs = read_observed_csv(str(obs_csv))
        path = tmp_path / "again.csv"
        with open(path, "w", newline="") as fh:
            write_observed_csv(fh, obs)
        assert path.read_bytes() == obs_csv.read_bytes()

    def test_observed_header_enforced(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,cases\n1,2\n")
        with pytest.raises(ValueError, match="I_h_obs"):
            read_observed_csv(str(path))


class TestCommands:
    def test_coeffs_prints_hand_values(self, capsys):
        assert main(["coeffs", "--alpha", "0.5", "--order", "2"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        table = dict(line.split() for line in lines)
        assert float(table["A"]) == pytest.approx(0.846284, abs=1e-5)
        assert float(table["A'"]) == pytest.approx(0.423142, abs=1e-5)
        assert float(table["C_2"]) == pytest.approx(-0.282095, abs=1e-5)

    def test_coeffs_rejects_classical_alpha(self, capsys):
        assert main(["coeffs", "--alpha", "1.0", "--order", "2"]) == 1
        assert "error: validation:" in capsys.readouterr().err

    def test_simulate_classical_conserves_hosts(self, tmp_path, capsys):
        out = tmp_path / "traj.csv"
        cfg = tmp_path / "s.cfg"
        cfg.write_text("t_end = 20\nstep = 0.05\n")
        assert main(["simulate", "--config", str(cfg), "--alpha", "1.0",
                     "--out", str(out)]) == 0
        series = read_trajectory_csv(str(out))
        totals = (series.column("S_h") + series.column("I_h")
                  + series.column("R_h"))
        assert np.max(np.abs(totals - 56000.0)) / 56000.0 < 1e-9

    def test_simulate_is_deterministic(self, tmp_path):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("alpha = 0.95\nt_end = 10\nstep = 0.05\n")
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["simulate", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["simulate", "--config", str(cfg), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_simulate_include_aux(self, tmp_path):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("alpha = 0.9\norder_n = 3\nt_end = 5\nstep = 0.05\n")
        out = tmp_path / "aux.csv"
        assert main(["simulate", "--config", str(cfg), "--include-aux",
                     "--out", str(out)]) == 0
        series = read_trajectory_csv(str(out))
        assert len(series.columns) == 15
        assert "V2_S_h" in series.columns
        assert np.all(series.values[0, 5:] == 0.0)

    def test_simulate_blow_up_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("alpha = 0.3\nt_end = 100\nstep = 2\n")
        out = tmp_path / "traj.csv"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 2
        err = capsys.readouterr().err
        assert err.startswith("error: numerical:")
        assert "t = " in err

    def test_fit_recovers_synthetic_alpha(self, tmp_path, capsys, obs_csv):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("t_end = 30\nstep = 0.05\n")
        out = tmp_path / "curve.csv"
        assert main(["fit", "--config", str(cfg), "--data", str(obs_csv),
                     "--alpha-min", "0.93", "--alpha-max", "0.97",
                     "--alpha-step", "0.01", "--out", str(out)]) == 0
        stdout = capsys.readouterr().out
        assert "best_alpha 0.950" in stdout
        rows = out.read_text().strip().splitlines()
        assert rows[0] == "alpha,error_pct,status"
        assert len(rows) == 6
        assert all(row.endswith(",ok") for row in rows[1:])

    def test_fit_curve_is_deterministic(self, tmp_path, obs_csv):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("t_end = 30\nstep = 0.05\n")
        out1, out2 = tmp_path / "c1.csv", tmp_path / "c2.csv"
        for out in (out1, out2):
            assert main(["fit", "--config", str(cfg), "--data", str(obs_csv),
                         "--alpha-min", "0.94", "--alpha-max", "0.96",
                         "--alpha-step", "0.01", "--out", str(out)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_deriv_tracks_closed_form(self, tmp_path):
        out = tmp_path / "deriv.csv"
        assert main(["deriv", "--alpha", "0.5", "--order", "15", "--function", "t",
                     "--t-end", "1.0", "--step", "0.001", "--out", str(out)]) == 0
        series = read_trajectory_csv(str(out))
        closed = series.column("closed_form")
        tail = series.times >= 0.5
        for column in ("expansion", "grunwald"):
            rel = np.abs(series.column(column)[tail] - closed[tail]) / closed[tail]
            assert np.max(rel) < 0.02

    def test_validate_passes(self, capsys):
        assert main(["validate"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert "checks passed" in out

    def test_missing_data_file_exits_1(self, tmp_path, capsys):
        assert main(["fit", "--data", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path / "c.csv")]) == 1
        assert "error: validation:" in capsys.readouterr().err

    def test_usage_error_exits_1(self, capsys):
        assert main(["simulate"]) == 1  # --out is required
        assert "error: validation:" in capsys.readouterr().err

    @pytest.mark.parametrize("command,flags", [
        ("coeffs", ["--alpha", "--order"]),
        ("deriv", ["--alpha", "--order", "--function", "--t-end", "--step", "--out"]),
        ("simulate", ["--config", "--alpha", "--order", "--include-aux", "--out"]),
        ("fit", ["--config", "--order", "--data", "--alpha-min", "--alpha-max",
                 "--alpha-step", "--out"]),
        ("validate", []),
    ])
    def test_help_exits_0_and_documents_flags(self, command, flags, capsys):
        assert main([command, "--help"]) == 0
        out = capsys.readouterr().out
        assert "usage" in out.lower()
        for flag in flags:
            assert flag in out

    def test_unknown_command_exits_1(self, capsys):
        assert main(["plot"]) == 1
