"""CLI dispatch, overrides, and exit codes.

All invocations run in-process through main(argv) against a reduced
configuration; one subprocess check covers the installed entry point.
"""

import json
import subprocess
import sys

import pytest

from pulsebench import bench
from pulsebench.cli import (
    EXIT_CALIBRATION,
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    apply_overrides,
    build_parser,
    main,
)
from pulsebench.dynamics import PropagationError

SMOKE_INI = """
[truncation]
n_q = 15
n_eq = 5
n_ec = 3

[sweep]
flux_points = 11

[rx]
dt = 0.004

[cz]
dt = 0.02
"""


@pytest.fixture(scope="module")
def ini(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "smoke.ini"
    path.write_text(SMOKE_INI)
    return path


@pytest.fixture(scope="module")
def warm_dir(tmp_path_factory, ini):
    """Output directory holding a calibration artifact all runs can reuse."""
    out = tmp_path_factory.mktemp("warm")
    assert main(["calibrate", "--config", str(ini), "--out", str(out)]) == EXIT_OK
    return out


class TestDispatch:
    def test_calibrate_writes_artifact(self, ini, warm_dir, capsys):
        assert (warm_dir / "calibration.json").is_file()
        assert (warm_dir / "calibrate_meta.json").is_file()
        main(["calibrate", "--config", str(ini), "--out", str(warm_dir)])
        out = capsys.readouterr().out
        assert "calibration.json" in out

    def test_static_sweep(self, ini, warm_dir):
        code = main(["static-sweep", "--config", str(ini), "--out", str(warm_dir)])
        assert code == EXIT_OK
        header = (warm_dir / "static_sweep.csv").read_text().splitlines()[0]
        assert header.startswith("phi,")
        assert "circuit_zeta_ghz" in header

    def test_rx_with_overrides(self, ini, warm_dir):
        code = main([
            "rx", "--config", str(ini), "--out", str(warm_dir),
            "--dt", "0.01", "--drive-frame", "lab",
        ])
        assert code == EXIT_OK
        meta = json.loads((warm_dir / "rx_meta.json").read_text())
        assert meta["drive_frame"] == "lab"
        assert meta["carrier_freq_ghz"] > 9.0

    def test_cz(self, ini, warm_dir):
        assert main(["cz", "--config", str(ini), "--out", str(warm_dir)]) == EXIT_OK
        header = (warm_dir / "cz.csv").read_text().splitlines()[0]
        assert header.split(",")[:2] == ["time_ns", "flux_bias"]

    def test_out_defaults_to_config_directory(self, ini, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        config = tmp_path / "local.ini"
        config.write_text(SMOKE_INI + "[output]\ndirectory = results\n")
        assert main(["calibrate", "--config", str(config)]) == EXIT_OK
        assert (tmp_path / "results" / "calibration.json").is_file()


class TestExitCodes:
    def test_missing_config_file(self, capsys):
        assert main(["rx", "--config", "/nonexistent.ini"]) == EXIT_CONFIG
        assert "not found" in capsys.readouterr().err

    def test_invalid_config_value(self, ini, capsys):
        code = main(["calibrate", "--config", str(ini), "--flux-points", "1"])
        assert code == EXIT_CONFIG
        assert "flux_points" in capsys.readouterr().err

    def test_unknown_config_key(self, tmp_path, capsys):
        bad = tmp_path / "bad.ini"
        bad.write_text("[rx]\nwibble = 1\n")
        assert main(["rx", "--config", str(bad)]) == EXIT_CONFIG
        assert "unknown key" in capsys.readouterr().err

    def test_dt_rejected_off_target(self, ini, capsys):
        code = main(["truncation", "--config", str(ini), "--dt", "0.01"])
        assert code == EXIT_CONFIG
        assert "--dt does not apply" in capsys.readouterr().err

    def test_starved_fit_is_calibration_error(self, ini, tmp_path, capsys):
        code = main([
            "calibrate", "--config", str(ini), "--out", str(tmp_path),
            "--flux-points", "7",
        ])
        assert code == EXIT_CALIBRATION
        assert "flux points usable" in capsys.readouterr().err

    def test_numerical_failure(self, ini, warm_dir, monkeypatch, capsys):
        from pulsebench import cli

        def boom(config, calibration):
            raise PropagationError("state norm drifted")

        monkeypatch.setitem(cli._BENCHMARKS, "cz", (boom, bench.write_cz))
        code = main(["cz", "--config", str(ini), "--out", str(warm_dir)])
        assert code == EXIT_NUMERICAL
        assert "norm drifted" in capsys.readouterr().err


class TestOverrides:
    def test_flux_grid_flags(self, ini):
        parser = build_parser()
        args = parser.parse_args([
            "static-sweep", "--config", str(ini),
            "--flux-min", "0.1", "--flux-max", "0.3", "--flux-points", "21",
        ])
        from pulsebench.config import load_config

        cfg = apply_overrides(load_config(args.config), args)
        assert cfg.sweep.flux_min == 0.1
        assert cfg.sweep.flux_max == 0.3
        assert cfg.sweep.flux_points == 21

    def test_dt_fans_out_for_all(self, ini):
        parser = build_parser()
        args = parser.parse_args(["all", "--config", str(ini), "--dt", "0.05"])
        from pulsebench.config import load_config

        cfg = apply_overrides(load_config(args.config), args)
        assert cfg.rx.dt == cfg.cz.dt == cfg.leakage.dt == cfg.runtime.dt == 0.05

    def test_bad_override_raises_config_error(self, ini):
        from pulsebench.config import ConfigError, load_config

        parser = build_parser()
        args = parser.parse_args(["rx", "--config", str(ini), "--dt", "-1"])
        with pytest.raises(ConfigError, match="dt must be positive"):
            apply_overrides(load_config(args.config), args)


def test_entry_point_version():
    proc = subprocess.run(
        [sys.executable, "-m", "pulsebench.cli", "--version"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip().startswith("pulsebench ")
