"""test_cli.py - Tests for the shrinklab command line.

Covers:
    - Exit codes: 0 ok, 1 numerical failure, 2 usage error
    - Flag and --tol overrides reach the resolved RunConfig
    - verify --list prints the registry
    - sphere-ode and run print JSON summaries
    - sweep grid parsing
"""

import json
import logging

import pytest

from shrinklab import cli
from shrinklab.errors import BlowUpDetected
from shrinklab.geometry import SHRINKER_RADIUS


@pytest.fixture(autouse=True)
def _remove_cli_handlers():
    """main() installs handlers on the package logger; drop them after each test."""
    yield
    root = logging.getLogger("shrinklab")
    for handler in cli._installed:
        root.removeHandler(handler)
    cli._installed.clear()


# ---------------------------------------------------------------------------
# Config plumbing
# ---------------------------------------------------------------------------


class TestOverrides:
    def test_flags_and_tolerances(self):
        args = cli.build_parser().parse_args(
            ["run", "--n-points", "64", "--mode", "normal", "--no-normalize", "--tol", "ndot_slack=0.2"]
        )
        overrides = cli._overrides(args)
        assert overrides == {"n_points": "64", "mode": "normal", "normalize": False, "tol_ndot_slack": "0.2"}
        config = cli._config(args)
        assert config.n_points == 64
        assert config.normalize is False
        assert config.tol("ndot_slack") == 0.2

    def test_config_file(self, tmp_path):
        path = tmp_path / "run.env"
        path.write_text("t_end=2.5\n", encoding="utf-8")
        args = cli.build_parser().parse_args(["run", "--config", str(path), "--dt", "0.01"])
        config = cli._config(args)
        assert config.t_end == 2.5
        assert config.dt == 0.01

    def test_malformed_tol(self, capsys):
        assert cli.main(["run", "--tol", "ndot_slack"]) == 2
        assert "tol: expected NAME=VALUE" in capsys.readouterr().err

    def test_parse_grid(self):
        assert cli._parse_grid("2:0.05, 3:0.1") == [(2, 0.05), (3, 0.1)]


# ---------------------------------------------------------------------------
# Exit codes
# ---------------------------------------------------------------------------


class TestExitCodes:
    def test_malformed_initial(self, capsys):
        assert cli.main(["run", "--initial", "blob"]) == 2
        err = capsys.readouterr().err
        assert err.startswith("shrinklab: error: initial:")

    def test_unknown_log_level(self, capsys):
        assert cli.main(["--log-level", "LOUD", "verify", "--list"]) == 2
        assert "log-level" in capsys.readouterr().err

    def test_bad_grid(self, capsys):
        assert cli.main(["sweep", "--grid", "2-0.05"]) == 2
        assert "grid: expected k:amplitude" in capsys.readouterr().err

    def test_empty_sweep(self, capsys):
        assert cli.main(["sweep"]) == 2
        assert "grid is empty" in capsys.readouterr().err

    def test_numerical_failure(self, monkeypatch, capsys, tmp_path):
        def blow_up(config):
            raise BlowUpDetected("curve self-intersects at clock 0.5", clock=0.5)

        monkeypatch.setattr("shrinklab.pipeline.run_scenario", blow_up)
        assert cli.main(["run", "--output-dir", str(tmp_path)]) == 1
        assert "shrinklab: BlowUpDetected: curve self-intersects" in capsys.readouterr().err

    def test_missing_subcommand(self):
        with pytest.raises(SystemExit) as info:
            cli.main([])
        assert info.value.code == 2


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


class TestSubcommands:
    def test_verify_list(self, capsys):
        assert cli.main(["verify", "--list"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 17
        assert lines[0].startswith("curvature-laplacian")
        assert any("complete, first-derivation, displayed" in line for line in lines)

    def test_sphere_ode(self, capsys, tmp_path):
        argv = ["sphere-ode", "--n", "2", "--r0", "1.5", "--t-end", "5", "--dt", "0.01", "--output-dir", str(tmp_path)]
        assert cli.main(argv) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["event"] == "extinction"
        assert payload["fixed_point"] == pytest.approx(2.0)
        assert (tmp_path / "sphere.csv").exists()

    def test_run_on_shrinker(self, capsys, tmp_path):
        argv = [
            "run",
            "--initial",
            f"circle:{SHRINKER_RADIUS!r}",
            "--n-points",
            "32",
            "--dt",
            "0.1",
            "--t-end",
            "0.5",
            "--output-dir",
            str(tmp_path / "shrinker"),
            "--strict",
        ]
        assert cli.main(argv) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["failed_checks"] == []
        assert payload["output_dir"] == str(tmp_path / "shrinker")
        assert (tmp_path / "shrinker" / "summary.json").exists()
