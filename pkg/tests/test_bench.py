import json

import numpy as np
import pytest

from trajopt import bench
from trajopt.bench import ConfigError, RunConfig, read_csv_table, reintegrate_cost, simpson
from trajopt.cli import main
from trajopt.core import DivergedRolloutError


def _cfg(problem, method, tmp_path, name="run", **sections):
    data = RunConfig.default(problem, method).to_dict()
    for key, value in sections.items():
        data[key].update(value)
    data["output_dir"] = str(tmp_path / name)
    return RunConfig.from_dict(data)


def _write(cfg, path):
    path.write_text(cfg.to_json())
    return str(path)


# quick configurations: a converging DDP run and a truncated one
def _quick_ok(tmp_path, name="ok"):
    return _cfg("quadrotor", "ddp", tmp_path, name, ddp={"dt": 0.05})


def _quick_short(tmp_path, name="short"):
    return _cfg("cartpole", "ddp", tmp_path, name, ddp={"max_iters": 3})


class TestConfig:
    @pytest.mark.parametrize("problem", ["cartpole", "double_cartpole", "quadrotor"])
    @pytest.mark.parametrize("method", ["ddp", "gpm"])
    def test_round_trip_lossless(self, problem, method):
        cfg = RunConfig.default(problem, method)
        text = cfg.to_json()
        again = RunConfig.from_json(text)
        assert again.to_json() == text
        assert again == cfg

    def test_init_emits_loadable_config(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        assert main(["init", "--problem", "cartpole", "--out", str(path)]) == 0
        cfg = RunConfig.load(path)
        assert cfg.problem == "cartpole"
        assert json.loads(path.read_text())["schema_version"] == bench.SCHEMA_VERSION
        assert main(["init", "--problem", "quadrotor", "--method", "gpm"]) == 0
        assert RunConfig.from_json(capsys.readouterr().out).method == "gpm"

    @pytest.mark.parametrize("mutate", [
        lambda d: d.update(colour="red"),
        lambda d: d["ddp"].update(step=0.1),
        lambda d: d["gpm"].update(nodes=3),
        lambda d: d["weights"].update(S=[1.0]),
        lambda d: d["bounds"].update(rate=[0, 1]),
    ])
    def test_unknown_keys_rejected(self, mutate):
        data = RunConfig.default("cartpole").to_dict()
        mutate(data)
        with pytest.raises(ConfigError):
            RunConfig.from_dict(data)

    @pytest.mark.parametrize("mutate", [
        lambda d: d.update(schema_version=99),
        lambda d: d.update(method="shooting"),
        lambda d: d.update(problem="acrobot"),
        lambda d: d["ddp"].update(dt=-0.1),
        lambda d: d["gpm"].update(K=0),
        lambda d: d.update(warm_start="random"),
    ])
    def test_invalid_values_rejected(self, mutate):
        data = RunConfig.default("cartpole").to_dict()
        mutate(data)
        with pytest.raises(ConfigError):
            RunConfig.from_dict(data)

    def test_partial_config_takes_defaults(self):
        cfg = RunConfig.from_dict({"schema_version": 1, "problem": "quadrotor", "method": "gpm",
                                   "gpm": {"K": 12}})
        assert cfg.gpm["K"] == 12
        assert cfg.weights == RunConfig.default("quadrotor", "gpm").weights

    def test_bad_json(self):
        with pytest.raises(ConfigError):
            RunConfig.from_json("{not json")


class TestSolve:
    def test_files_and_report(self, tmp_path):
        report = bench.cmd_solve(_quick_ok(tmp_path))
        out = tmp_path / "ok"
        for name in ("trajectory.csv", "cost_history.csv", "report.json"):
            assert (out / name).is_file()
        header, rows = read_csv_table(out / "trajectory.csv")
        assert header == ["t"] + [f"x_{i}" for i in range(12)] + [f"u_{j}" for j in range(4)]
        assert rows.shape == (61, 17)
        on_disk = json.loads((out / "report.json").read_text())
        assert on_disk["schema_version"] == bench.SCHEMA_VERSION
        assert on_disk["config"]["problem"] == "quadrotor"
        assert on_disk["status"] == report["status"] == "converged"
        # DDP exposes the terminal gap
        assert len(on_disk["final_state_error"]) == 12
        _, hist = read_csv_table(out / "cost_history.csv")
        assert hist[-1, 1] == on_disk["final_cost"]

    def test_ddp_history_non_increasing(self, tmp_path):
        bench.cmd_solve(_quick_short(tmp_path))
        _, hist = read_csv_table(tmp_path / "short" / "cost_history.csv")
        assert np.all(np.diff(hist[:, 1]) <= 0)

    def test_gpm_report(self, tmp_path):
        cfg = _cfg("cartpole", "gpm", tmp_path, "g", gpm={"K": 10})
        report = bench.cmd_solve(cfg)
        assert report["status"] == "optimal"
        assert report["max_violation"] < 1e-6
        _, rows = read_csv_table(tmp_path / "g" / "trajectory.csv")
        assert rows.shape[0] == 200
        np.testing.assert_allclose(rows[-1, 1:5], [0.0, np.pi, 0.0, 0.0], atol=1e-6)

    def test_byte_identical_reruns(self, tmp_path):
        a = _quick_short(tmp_path, "a")
        b = _quick_short(tmp_path, "b")
        bench.cmd_solve(a)
        bench.cmd_solve(b)
        for name in ("trajectory.csv", "cost_history.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_solver_error_still_writes_report(self, tmp_path, monkeypatch):
        def boom(*args, **kwargs):
            raise DivergedRolloutError("rollout produced a non-finite state", 7)

        monkeypatch.setattr(bench, "ddp_solve", boom)
        path = _write(_quick_short(tmp_path), tmp_path / "c.json")
        assert main(["solve", "--config", path]) == 2
        report = json.loads((tmp_path / "short" / "report.json").read_text())
        assert report["status"] == "error"
        assert "DivergedRolloutError" in report["message"]
        assert (tmp_path / "short" / "cost_history.csv").is_file()


class TestCli:
    def test_exit_zero_on_convergence(self, tmp_path, capsys):
        path = _write(_quick_ok(tmp_path), tmp_path / "c.json")
        assert main(["solve", "--config", path]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["status"] == "converged"

    def test_exit_two_when_not_converged(self, tmp_path):
        path = _write(_quick_short(tmp_path), tmp_path / "c.json")
        assert main(["solve", "--config", path]) == 2

    def test_out_flag_overrides(self, tmp_path):
        path = _write(_quick_short(tmp_path), tmp_path / "c.json")
        main(["solve", "--config", path, "--out", str(tmp_path / "elsewhere")])
        assert (tmp_path / "elsewhere" / "report.json").is_file()
        assert not (tmp_path / "short").exists()

    def test_method_flag_overrides(self, tmp_path):
        cfg = _cfg("quadrotor", "ddp", tmp_path, "m", gpm={"K": 8})
        path = _write(cfg, tmp_path / "c.json")
        assert main(["solve", "--config", path, "--method", "gpm"]) == 0
        report = json.loads((tmp_path / "m" / "report.json").read_text())
        assert report["method"] == "gpm"

    @pytest.mark.parametrize("argv", [
        [], ["solve"], ["solve", "--problem", "acrobot"], ["frobnicate"],
        ["solve", "--config", "/nonexistent/c.json"],
    ])
    def test_usage_errors_exit_one(self, argv):
        assert main(argv) == 1

    def test_unknown_key_exit_one(self, tmp_path):
        data = RunConfig.default("cartpole").to_dict()
        data["extra"] = 1
        path = tmp_path / "c.json"
        path.write_text(json.dumps(data))
        assert main(["solve", "--config", str(path)]) == 1

    def test_bad_log_level_exit_one(self, monkeypatch):
        monkeypatch.setenv("TRAJOPT_LOG", "loud")
        assert main(["init", "--problem", "cartpole"]) == 1


class TestPlotdata:
    def test_cartpole_series(self, tmp_path):
        bench.cmd_solve(_quick_short(tmp_path))
        assert main(["plotdata", str(tmp_path / "short")]) == 0
        names = sorted(p.name for p in (tmp_path / "short" / "plotdata").iterdir())
        assert names == ["cost.csv", "u_0.csv", "x_0.csv", "x_1.csv", "x_2.csv", "x_3.csv"]
        header, rows = read_csv_table(tmp_path / "short" / "plotdata" / "x_1.csv")
        assert header == ["t", "value"]
        _, traj = read_csv_table(tmp_path / "short" / "trajectory.csv")
        np.testing.assert_array_equal(rows, traj[:, [0, 2]])

    def test_quadrotor_series(self, tmp_path):
        bench.cmd_solve(_quick_ok(tmp_path))
        written = bench.cmd_plotdata(tmp_path / "ok")
        names = {p.name for p in written}
        assert {f"x_{i}.csv" for i in range(12)} <= names
        assert {f"u_{j}.csv" for j in range(4)} <= names
        assert len(names) == 17

    def test_empty_directory(self, tmp_path, capsys):
        assert main(["plotdata", str(tmp_path)]) == 1
        assert "missing" in capsys.readouterr().err


class TestCompare:
    def test_identical_configs(self, tmp_path):
        a = _quick_short(tmp_path, "a")
        b = _quick_short(tmp_path, "b")
        comp = bench.cmd_compare(a, b)
        for key, (va, vb) in comp["metrics"].items():
            if key != "runtime":
                assert va == vb, key
        assert "discrete" in comp["note"]

    def test_mismatched_problems(self, tmp_path):
        with pytest.raises(ConfigError):
            bench.cmd_compare(_quick_short(tmp_path), _quick_ok(tmp_path))

    def test_cli_compare(self, tmp_path, capsys):
        a = _write(_quick_ok(tmp_path, "a"), tmp_path / "a.json")
        b = _write(_cfg("quadrotor", "gpm", tmp_path, "b", gpm={"K": 8}), tmp_path / "b.json")
        out = tmp_path / "cmp.json"
        assert main(["compare", "--a", a, "--b", b, "--out", str(out)]) == 0
        comp = json.loads(out.read_text())
        assert comp["labels"] == ["a:ddp", "b:gpm"]
        assert len(comp["metrics"]["final_state_error"][0]) == 12
        assert "final_cost" in capsys.readouterr().out


class TestReintegrate:
    def test_ddp_discrete_sum(self, tmp_path):
        cfg = _quick_ok(tmp_path)
        report = bench.cmd_solve(cfg)
        again = reintegrate_cost(cfg, report["files"]["trajectory"])
        assert again == pytest.approx(report["final_cost"], abs=1e-6)

    def test_gpm_quadrature_gap(self, tmp_path):
        cfg = _cfg("cartpole", "gpm", tmp_path, "g", gpm={"K": 12})
        report = bench.cmd_solve(cfg)
        again = reintegrate_cost(cfg, report["files"]["trajectory"])
        assert abs(again - report["final_cost"]) <= 1e-3 * abs(report["final_cost"])

    @pytest.mark.parametrize("n", [2, 3, 4, 7, 10, 11])
    def test_simpson_exact_on_cubics(self, n):
        t = np.linspace(0.0, 2.0, n + 1)
        y = 1 + t - 3 * t**2 + t**3
        exact = 2 + 2 - 8 + 4
        assert simpson(y, t[1] - t[0]) == pytest.approx(exact, abs=1e-12)
