"""End-to-end CLI behavior through click's test runner."""

import csv
from importlib import resources
from pathlib import Path

import pytest
import yaml
from click.testing import CliRunner

from dccsim.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def fixture_path(name):
    return Path(str(resources.files("dccsim") / "fixtures" / name))


def write_config(path, **overrides):
    raw = {
        "seed": 3,
        "duration_s": 6.0,
        "scenario": {"kind": "stationary_pair", "params": {"distance_m": 10.0}},
    }
    raw.update(overrides)
    path.write_text(yaml.safe_dump(raw))
    return path


class TestLinkBudget:
    def test_crossover_report(self, runner):
        result = runner.invoke(
            main, ["link-budget", "--tx", "-10", "--sweep-gain", "0,3,5"]
        )
        assert result.exit_code == 0
        assert "crossover at -77 dBm = 9.06 m" in result.output
        assert "crossover at -77 dBm = 18.08 m" in result.output
        assert "crossover at -77 dBm = 28.65 m" in result.output
        assert "cross distance (two-ray switch): 556.4 m" in result.output

    def test_csv_output(self, runner, tmp_path):
        out = tmp_path / "budget.csv"
        result = runner.invoke(
            main,
            ["link-budget", "--tx", "-10", "--gain", "4.5", "--csv", str(out)],
        )
        assert result.exit_code == 0
        rows = list(csv.reader(open(out)))
        assert rows[0] == ["gain_dbi", "distance_m", "rx_power_dbm"]
        assert len(rows) > 10

    def test_impossible_budget_fails_cleanly(self, runner):
        result = runner.invoke(main, ["link-budget", "--tx", "-10", "--sens", "10"])
        assert result.exit_code == 1

    def test_bad_sweep_gain_is_usage_error(self, runner):
        result = runner.invoke(
            main, ["link-budget", "--tx", "-10", "--sweep-gain", "a,b"]
        )
        assert result.exit_code == 2


class TestRun:
    def test_run_writes_outputs_and_manifest(self, runner, tmp_path):
        config = write_config(tmp_path / "config.yaml")
        outdir = tmp_path / "out"
        result = runner.invoke(main, ["run", str(config), "--output-dir", str(outdir)])
        assert result.exit_code == 0, result.output
        for name in (
            "manifest.yaml",
            "cbr_timeseries.csv",
            "link_pdr.csv",
            "pdr_vs_distance.csv",
            "summary.csv",
        ):
            assert (outdir / name).exists()
        assert (outdir / "rep_3" / "summary.csv").exists()

    def test_rerun_from_manifest_is_byte_identical(self, runner, tmp_path):
        config = write_config(tmp_path / "config.yaml")
        first = tmp_path / "first"
        second = tmp_path / "second"
        assert runner.invoke(main, ["run", str(config), "--output-dir", str(first)]).exit_code == 0
        assert (
            runner.invoke(
                main, ["run", str(first / "manifest.yaml"), "--output-dir", str(second)]
            ).exit_code
            == 0
        )
        for name in ("cbr_timeseries.csv", "link_pdr.csv", "pdr_vs_distance.csv", "summary.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_invalid_config_exits_one(self, runner, tmp_path):
        config = tmp_path / "config.yaml"
        config.write_text("scenario:\n  kind: no_such_thing\n")
        result = runner.invoke(main, ["run", str(config)])
        assert result.exit_code == 1

    def test_missing_config_exits_two(self, runner):
        result = runner.invoke(main, ["run", "does_not_exist.yaml"])
        assert result.exit_code == 2


class TestSweep:
    def test_sweep_summary(self, runner, tmp_path):
        config = write_config(tmp_path / "config.yaml", duration_s=5.0)
        outdir = tmp_path / "sweep"
        result = runner.invoke(
            main,
            [
                "sweep",
                str(config),
                "--parameter",
                "restrictive_tx_power",
                "--values",
                "-10,16",
                "--output-dir",
                str(outdir),
            ],
        )
        assert result.exit_code == 0, result.output
        rows = list(csv.reader(open(outdir / "sweep_summary.csv")))
        assert rows[0] == ["value", "mean_cbr", "tx_id", "rx_id", "sent", "delivered", "pdr"]
        values = {row[0] for row in rows[1:]}
        assert values == {"-10", "16"}
        assert (outdir / "restrictive_tx_power_-10").is_dir()

    def test_sweep_without_spec_is_usage_error(self, runner, tmp_path):
        config = write_config(tmp_path / "config.yaml")
        result = runner.invoke(main, ["sweep", str(config)])
        assert result.exit_code == 2


class TestAnalyzeLogs:
    def test_parking_fixture_table(self, runner, tmp_path):
        outdir = tmp_path / "logs"
        result = runner.invoke(
            main,
            [
                "analyze-logs",
                str(fixture_path("parking_txm10_tx.csv")),
                str(fixture_path("parking_txm10_rx.csv")),
                "--output-dir",
                str(outdir),
            ],
        )
        assert result.exit_code == 0, result.output
        rows = list(csv.reader(open(outdir / "pdr_table.csv")))
        percents = [row[4] for row in rows[1:]]
        assert percents == ["76.8", "2.2", "0.0", "0.0"]
        assert (outdir / "scatter.csv").exists()

    def test_highway_fixture_reports_crossover(self, runner, tmp_path):
        outdir = tmp_path / "logs"
        result = runner.invoke(
            main,
            [
                "analyze-logs",
                str(fixture_path("highway_tx16_tx.csv")),
                str(fixture_path("highway_tx16_rx.csv")),
                "--output-dir",
                str(outdir),
            ],
        )
        assert result.exit_code == 0, result.output
        assert "crossover at -77 dBm" in result.output
        assert (outdir / "fit.csv").exists()

    def test_unparseable_logs_fail(self, runner, tmp_path):
        tx = tmp_path / "tx.csv"
        rx = tmp_path / "rx.csv"
        tx.write_text("nothing,useful\n1,2\n")
        rx.write_text("nothing,useful\n1,2\n")
        result = runner.invoke(
            main, ["analyze-logs", str(tx), str(rx), "--output-dir", str(tmp_path / "o")]
        )
        assert result.exit_code == 1


class TestFitCurve:
    def test_fit_from_points_csv(self, runner, tmp_path):
        points = tmp_path / "points.csv"
        import math

        rows = ["distance_m,rx_power_dbm"]
        for d in (1.0, 2.0, 4.0, 8.0, 16.0):
            rows.append(f"{d},{10 * math.log10(2e-3 * d ** -2.0)}")
        points.write_text("\n".join(rows) + "\n")
        out = tmp_path / "fit.csv"
        result = runner.invoke(main, ["fit-curve", str(points), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "crossover=316.60 m" in result.output
        assert out.exists()

    def test_empty_points_fail(self, runner, tmp_path):
        points = tmp_path / "points.csv"
        points.write_text("distance_m,rx_power_dbm\n")
        result = runner.invoke(main, ["fit-curve", str(points)])
        assert result.exit_code == 1
