import json

import numpy as np
import pytest

from lrca import cli
from lrca.arch import arch_simulate
from lrca.errors import NotConverged, UsageError
from lrca.main import EXIT_NUMERICAL, EXIT_USAGE, main
from lrca.models import ArchParams


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({"dgp": "gaussian-linear", "n": 40, "replications": 20, "master_seed": 2}))
    return path


@pytest.fixture
def series_file(tmp_path):
    x = arch_simulate(ArchParams(omega=1.0, alpha=(0.3,)), 600, seed=1)
    path = tmp_path / "series.csv"
    path.write_text("x\n" + "\n".join(f"{v:.10f}" for v in x) + "\n")
    return path


class TestParse:
    def test_unknown_command(self):
        with pytest.raises(UsageError):
            cli.parse(["fit"])

    def test_seed_override(self, config_file):
        config = cli.to_run_config(cli.parse(["simulate", "--config", str(config_file), "--seed", "9"]))
        assert config.experiment.master_seed == 9
        assert config.experiment.n == 40

    def test_grid(self, config_file):
        args = cli.parse(["power", "--config", str(config_file), "--grid", "-1,0,0.5"])
        assert args.grid == [-1.0, 0.0, 0.5]

    def test_bad_grid(self, config_file):
        with pytest.raises(UsageError):
            cli.parse(["power", "--config", str(config_file), "--grid", "a,b"])


class TestMain:
    def test_describe(self, capsys):
        assert main(["describe", "arch"]) == 0
        assert "omega" in capsys.readouterr().out

    def test_describe_unknown_model(self, capsys):
        assert main(["describe", "garch"]) == EXIT_USAGE
        assert "valid models" in capsys.readouterr().err

    def test_unknown_command(self):
        assert main(["fit"]) == EXIT_USAGE

    def test_missing_config(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == EXIT_USAGE

    def test_invalid_config(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"dgp": "DGP1", "n": 100, "levels": [1.5]}))
        assert main(["simulate", "--config", str(path)]) == EXIT_USAGE
        assert "levels" in capsys.readouterr().err

    def test_simulate_writes_tables(self, config_file, tmp_path, capsys):
        out = tmp_path / "results"
        assert main(["simulate", "--config", str(config_file), "--out", str(out)]) == 0
        assert (out / "rejection_gaussian-linear_n40.csv").is_file()
        assert (out / "rejection_gaussian-linear_n40.md").is_file()
        assert "LRCa" in capsys.readouterr().out

    def test_simulate_archives(self, config_file, tmp_path):
        db = tmp_path / "runs.db"
        assert main(["simulate", "--config", str(config_file), "--archive", str(db)]) == 0
        assert db.is_file()

    def test_power_needs_grid_outside_weibull(self, config_file):
        assert main(["power", "--config", str(config_file)]) == EXIT_USAGE

    def test_power_with_grid(self, config_file, capsys):
        assert main(["power", "--config", str(config_file), "--grid", "0,0.5"]) == 0
        assert "grid" in capsys.readouterr().out

    def test_calibrate(self, config_file, capsys):
        assert main(["calibrate", "--config", str(config_file), "--format", "csv"]) == 0
        assert "ks_band" in capsys.readouterr().out

    def test_numerical_failure(self, config_file, monkeypatch):
        def failing(config):
            raise NotConverged("all replications failed")

        monkeypatch.setattr(cli, "run_level_experiment", failing)
        assert main(["simulate", "--config", str(config_file)]) == EXIT_NUMERICAL

    def test_test_command(self, series_file, capsys):
        code = main(["test", "--model", "arch", "--order", "2", "--data", str(series_file), "--restrict", "alpha2=0"])
        assert code == 0
        out = capsys.readouterr().out
        assert "H0: alpha2=0" in out
        assert "Wald" in out

    def test_test_command_bad_restriction(self, series_file):
        code = main(["test", "--model", "arch", "--data", str(series_file), "--restrict", "beta=0"])
        assert code == EXIT_USAGE

    def test_missing_data_file(self, tmp_path):
        code = main(["test", "--model", "arch", "--data", str(tmp_path / "x.csv"), "--restrict", "alpha1=0"])
        assert code == EXIT_USAGE

    def test_ci_command(self, series_file, tmp_path):
        out = tmp_path / "ci"
        code = main(["ci", "--model", "arch", "--data", str(series_file), "--param", "alpha1", "--out", str(out)])
        assert code == 0
        text = (out / "ci_arch_alpha1.csv").read_text()
        lower, upper = (float(v) for v in text.splitlines()[1].split(",")[4:6])
        assert 0.0 <= lower < upper
        assert np.isfinite(upper)
