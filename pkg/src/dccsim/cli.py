"""Command-line surface: scenario runs, sweeps, log analysis, link budgets.

Exit codes are a stable scripting contract: 0 success, 1 runtime or
validation failure, 2 usage error.
"""

from __future__ import annotations

import concurrent.futures
import csv
import os
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import fieldlog, metrics
from .config import RunConfig, write_manifest
from .engine import RunOutput, SimConfig, run as run_engine
from .phy import ConfigError
from .propagation import (
    DomainError,
    LinkBudget,
    RadioEnvironment,
    cross_distance_m,
    crossover_distance_m,
    rx_power_dbm,
)
from .scenarios import SWEEPABLE_PARAMETERS, sweep as build_sweep


@click.group()
def main() -> None:
    """Vehicular DCC beaconing simulator and analysis toolkit."""


def _fail(message: str) -> None:
    raise click.ClickException(message)


# --------------------------------------------------------------------------
# link-budget


@main.command("link-budget")
@click.option("--tx", "tx_power", type=float, required=True, help="Tx power in dBm.")
@click.option("--gain", type=float, default=0.0, show_default=True, help="Per-end antenna gain in dBi.")
@click.option("--sens", type=float, default=-77.0, show_default=True, help="Rx sensitivity in dBm.")
@click.option("--freq", type=float, default=5900.0, show_default=True, help="Carrier frequency in MHz.")
@click.option("--distance", type=float, default=None, help="Report rx power at this distance only.")
@click.option("--sweep-gain", default=None, help="Comma-separated per-end gains to sweep.")
@click.option("--csv", "csv_path", type=click.Path(), default=None, help="Also write the table as CSV.")
@click.option("--figures", type=click.Path(), default=None, help="Directory for rendered figures.")
def cmd_link_budget(tx_power, gain, sens, freq, distance, sweep_gain, csv_path, figures):
    """Print rx power vs distance and the sensitivity crossover."""
    env = RadioEnvironment(frequency_mhz=freq)
    gains = [gain]
    if sweep_gain is not None:
        try:
            gains = [float(g) for g in sweep_gain.split(",") if g.strip()]
        except ValueError:
            raise click.UsageError(f"cannot parse --sweep-gain {sweep_gain!r}")
    rows = []
    try:
        if distance is not None:
            distances = [distance]
        else:
            distances = list(np.geomspace(1.0, 1000.0, 31))
        for g in gains:
            crossover = crossover_distance_m(tx_power, 2 * g, sens, env)
            click.echo(
                f"gain {g:g} dBi per end: crossover at {sens:g} dBm = {crossover:.2f} m"
            )
            for d in distances:
                power = rx_power_dbm(LinkBudget(tx_power, g, g, d), env)
                rows.append((g, d, power))
        click.echo(f"cross distance (two-ray switch): {cross_distance_m(env):.1f} m")
        click.echo()
        click.echo(f"{'gain_dbi':>9} {'distance_m':>11} {'rx_power_dbm':>13}")
        for g, d, power in rows:
            click.echo(f"{g:9.6g} {d:11.6g} {power:13.6g}")
    except DomainError as exc:
        _fail(str(exc))
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["gain_dbi", "distance_m", "rx_power_dbm"])
            for g, d, power in rows:
                writer.writerow([f"{g:.6g}", f"{d:.6g}", f"{power:.6g}"])
    if figures:
        from . import report

        outdir = Path(figures)
        outdir.mkdir(parents=True, exist_ok=True)
        for g in gains:
            report.save_link_budget_figure(
                [(d, power) for gg, d, power in rows if gg == g],
                outdir / f"link_budget_gain{g:g}.png",
                sens,
            )


# --------------------------------------------------------------------------
# run


def _run_one(sim: SimConfig) -> RunOutput:
    return run_engine(sim)


def _run_replications(sim: SimConfig, replications: int) -> list[RunOutput]:
    configs = [replace(sim, seed=sim.seed + k) for k in range(replications)]
    if replications == 1:
        return [_run_one(configs[0])]
    workers = min(replications, os.cpu_count() or 1)
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        outputs = list(pool.map(_run_one, configs))
    return sorted(outputs, key=lambda out: out.seed)


def _write_replication(outdir: Path, output: RunOutput, discard_first_s: float) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    metrics.write_cbr_timeseries_csv(outdir / "cbr_timeseries.csv", output.cbr_samples)
    metrics.write_link_pdr_csv(outdir / "link_pdr.csv", output.link_stats)
    bins = metrics.pdr_vs_distance(output.link_stats)
    metrics.write_pdr_vs_distance_csv(outdir / "pdr_vs_distance.csv", bins)
    with open(outdir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["seed", "frames_sent", "pairs_in_scope", "beacons_dropped", "delivered",
             "below_sensitivity", "sinr_failure", "rx_busy_transmitting", "mean_cbr"]
        )
        try:
            mean_cbr = metrics.ambient_cbr_summary(output.cbr_samples, discard_first_s)
        except ValueError:
            mean_cbr = float("nan")
        writer.writerow(
            [
                output.seed,
                output.frames_sent,
                output.pairs_in_scope,
                output.beacons_dropped,
                output.verdict_totals.get("delivered", 0),
                output.verdict_totals.get("below_sensitivity", 0),
                output.verdict_totals.get("sinr_failure", 0),
                output.verdict_totals.get("rx_busy_transmitting", 0),
                f"{mean_cbr:.6g}",
            ]
        )


def _merge_csvs(outdir: Path, rep_dirs: list[Path], name: str) -> None:
    rows: list[list[str]] = []
    header: list[str] | None = None
    for rep in rep_dirs:
        path = rep / name
        if not path.exists():
            continue
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            this_header = next(reader, None)
            if this_header is None:
                continue
            header = header or this_header
            rows.extend(reader)
    if header is None:
        return
    with open(outdir / name, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _execute_run(cfg: RunConfig, outdir: Path) -> list[RunOutput]:
    outdir.mkdir(parents=True, exist_ok=True)
    write_manifest(outdir / "manifest.yaml", cfg)
    outputs = _run_replications(cfg.sim, cfg.replications)
    rep_dirs = []
    for output in outputs:
        rep_dir = outdir / f"rep_{output.seed}"
        _write_replication(rep_dir, output, cfg.sim.discard_first_s)
        rep_dirs.append(rep_dir)
    for name in ("cbr_timeseries.csv", "link_pdr.csv", "pdr_vs_distance.csv", "summary.csv"):
        _merge_csvs(outdir, rep_dirs, name)
    if cfg.figures:
        from . import report

        first = outputs[0]
        report.save_cbr_timeseries_figure(
            first.cbr_samples,
            outdir / "cbr_timeseries.png",
            cfg.dcc_table.min_cbr_threshold,
            cfg.dcc_table.max_cbr_threshold,
        )
        report.save_link_pdr_figure(first.link_stats, outdir / "link_pdr.png")
        report.save_pdr_vs_distance_figure(
            metrics.pdr_vs_distance(first.link_stats), outdir / "pdr_vs_distance.png"
        )
    return outputs


@main.command("run")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--output-dir", type=click.Path(), default=None, help="Override the config's output directory.")
def cmd_run(config_path, output_dir):
    """Run a scenario from a configuration file (or a run manifest)."""
    try:
        cfg = RunConfig.from_file(config_path)
        outdir = Path(output_dir) if output_dir else Path(cfg.output_dir)
        outputs = _execute_run(cfg, outdir)
    except (ConfigError, DomainError, OSError) as exc:
        _fail(f"{config_path}: {exc}")
    total_sent = sum(o.frames_sent for o in outputs)
    click.echo(f"wrote {outdir} ({len(outputs)} replication(s), {total_sent} frames)")


# --------------------------------------------------------------------------
# sweep


@main.command("sweep")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--parameter", default=None, type=click.Choice(SWEEPABLE_PARAMETERS))
@click.option("--values", default=None, help="Comma-separated values overriding the config sweep.")
@click.option("--output-dir", type=click.Path(), default=None)
def cmd_sweep(config_path, parameter, values, output_dir):
    """Run one simulation per parameter value and summarize the results."""
    try:
        cfg = RunConfig.from_file(config_path)
    except ConfigError as exc:
        _fail(f"{config_path}: {exc}")
    if parameter is None or values is None:
        if cfg.sweep_spec is None:
            raise click.UsageError(
                "either pass --parameter/--values or put a sweep section in the config"
            )
        parameter, value_list = cfg.sweep_spec
    else:
        try:
            value_list = [float(v) for v in values.split(",") if v.strip()]
        except ValueError:
            raise click.UsageError(f"cannot parse --values {values!r}")
    outdir = Path(output_dir) if output_dir else Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    summary_rows = []
    try:
        for value, sim in build_sweep(cfg.sim, parameter, value_list):
            sub = outdir / f"{parameter}_{value:g}"
            sub.mkdir(parents=True, exist_ok=True)
            outputs = _run_replications(sim, cfg.replications)
            rep_dirs = []
            for output in outputs:
                rep_dir = sub / f"rep_{output.seed}"
                _write_replication(rep_dir, output, sim.discard_first_s)
                rep_dirs.append(rep_dir)
            for name in ("cbr_timeseries.csv", "link_pdr.csv", "pdr_vs_distance.csv", "summary.csv"):
                _merge_csvs(sub, rep_dirs, name)
            all_samples = [s for o in outputs for s in o.cbr_samples]
            try:
                mean_cbr = metrics.ambient_cbr_summary(all_samples, sim.discard_first_s)
            except ValueError:
                mean_cbr = float("nan")
            links: dict[tuple[int, int], list[int]] = {}
            for output in outputs:
                for rec in output.link_stats:
                    acc = links.setdefault((rec.tx_id, rec.rx_id), [0, 0])
                    acc[0] += rec.sent
                    acc[1] += rec.delivered
            if links:
                for (tx_id, rx_id), (sent, delivered) in sorted(links.items()):
                    pdr = delivered / sent if sent else float("nan")
                    summary_rows.append((value, mean_cbr, tx_id, rx_id, sent, delivered, pdr))
            else:
                summary_rows.append((value, mean_cbr, "", "", 0, 0, float("nan")))
    except ConfigError as exc:
        _fail(str(exc))
    with open(outdir / "sweep_summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "mean_cbr", "tx_id", "rx_id", "sent", "delivered", "pdr"])
        for row in summary_rows:
            writer.writerow(
                [f"{v:.6g}" if isinstance(v, float) else v for v in row]
            )
    click.echo(f"wrote {outdir / 'sweep_summary.csv'} ({len(value_list)} value(s))")


# --------------------------------------------------------------------------
# analyze-logs


@main.command("analyze-logs")
@click.argument("tx_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("rx_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--bin-width", type=float, default=2.5, show_default=True)
@click.option("--sens", type=float, default=-77.0, show_default=True)
@click.option("--output-dir", type=click.Path(), default="log_analysis", show_default=True)
@click.option("--figures", is_flag=True, help="Render figures next to the CSVs.")
def cmd_analyze_logs(tx_path, rx_path, bin_width, sens, output_dir, figures):
    """Match tx/rx beacon logs into a PDR table and a power-curve fit."""
    diag = fieldlog.Diagnostics()
    tx_records = fieldlog.read_tx_log(tx_path, diag)
    rx_records = fieldlog.read_rx_log(rx_path, diag)
    if not tx_records and not rx_records:
        _fail("no parseable records in either log")
    try:
        table = fieldlog.match_and_tabulate(tx_records, rx_records, bin_width, diag)
    except fieldlog.LogError as exc:
        _fail(str(exc))
    outdir = Path(output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    fieldlog.write_pdr_table_csv(outdir / "pdr_table.csv", table)
    with open(outdir / "scatter.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["distance_m", "rx_power_dbm"])
        for d, p in table.scatter:
            writer.writerow([f"{d:.6g}", f"{p:.6g}"])
    fit = None
    try:
        fit = metrics.fit_power_curve(table.scatter, sensitivity_dbm=sens)
        metrics.write_fit_csv(outdir / "fit.csv", fit)
        click.echo(
            f"fitted power curve: a={fit.coefficient_a:.4g} b={fit.exponent_b:.4g}; "
            f"crossover at {sens:g} dBm = {fit.crossover_at_sensitivity_m:.2f} m"
        )
    except metrics.FitError as exc:
        click.echo(f"power-curve fit skipped: {exc}")
    click.echo(
        f"{len(tx_records)} tx records, {len(table.scatter)} matched rx records, "
        f"{diag.total_rejected} rejected, {diag.unmatched_rx} unmatched rx"
    )
    if figures and fit is not None:
        from . import report

        report.save_fit_figure(table.scatter, fit, outdir / "fit.png", sens)
    click.echo(f"wrote {outdir}")


# --------------------------------------------------------------------------
# fit-curve


@main.command("fit-curve")
@click.argument("points_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--sens", type=float, default=-77.0, show_default=True)
@click.option("--out", type=click.Path(), default="fit.csv", show_default=True)
def cmd_fit_curve(points_path, sens, out):
    """Fit a power curve to a (distance_m, rx_power_dbm) CSV."""
    points = []
    with open(points_path, newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                points.append((float(row["distance_m"]), float(row["rx_power_dbm"])))
            except (KeyError, TypeError, ValueError):
                continue
    if not points:
        _fail(f"no parseable points in {points_path}")
    try:
        fit = metrics.fit_power_curve(points, sensitivity_dbm=sens)
    except metrics.FitError as exc:
        _fail(str(exc))
    metrics.write_fit_csv(out, fit)
    click.echo(
        f"a={fit.coefficient_a:.6g} b={fit.exponent_b:.6g} sse={fit.sse:.6g} "
        f"crossover={fit.crossover_at_sensitivity_m:.2f} m"
    )


if __name__ == "__main__":
    main()
