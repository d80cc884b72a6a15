"""Command-line entry points: run / montecarlo / assess / serve."""

from __future__ import annotations

import sys

import click

from . import control, harness
from .scenario import ConfigInvalid, ScenarioConfig, load_config


def _load(config_path: str | None, seed: int | None) -> ScenarioConfig:
    try:
        config = load_config(config_path) if config_path else ScenarioConfig()
        if seed is not None:
            import dataclasses

            config = dataclasses.replace(config, seed=seed)
        config.validate()
        return config
    except ConfigInvalid as exc:
        for error in exc.errors:
            click.echo(f"config error: {error}", err=True)
        sys.exit(2)


@click.group()
def main() -> None:
    """Deterministic BLE security lab."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", "out_dir", type=click.Path(), default=None)
def run(config_path, seed, out_dir) -> None:
    """Execute one seeded simulation run."""
    config = _load(config_path, seed)
    result = harness.run(config, out_dir=out_dir)
    click.echo(f"events:  {result.events_path}")
    click.echo(f"journal: {result.journal_path}")
    click.echo(f"alerts:  {len(result.alerts)}")
    click.echo(f"central bpm samples: {len(result.central_bpm)}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--runs", type=int, required=True)
@click.option("--seed-base", type=int, default=0)
@click.option("--out", "out_dir", type=click.Path(), default=None)
def montecarlo(config_path, runs, seed_base, out_dir) -> None:
    """Monte Carlo detector evaluation; writes metrics.csv."""
    config = _load(config_path, None)
    try:
        metrics = harness.montecarlo(config, runs=runs, seed_base=seed_base, out_dir=out_dir)
    except ConfigInvalid as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    click.echo(
        f"runs={metrics.runs} tpr={metrics.true_positive_rate:.4f} "
        f"fpr={metrics.false_positive_rate:.4f} "
        f"mean_ttd_ms={metrics.mean_time_to_detect_ms:.1f}"
    )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
def assess(config_path, out_dir) -> None:
    """Static risk assessment; writes report.json and report.txt."""
    config = _load(config_path, None)
    findings = harness.assess(config, out_dir=out_dir)
    for finding in findings:
        click.echo(f"n.{finding.id} [{finding.risk.value}] {finding.title}")
    if not findings:
        click.echo("no applicable findings")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--port", type=int, default=8732)
@click.option("--time-scale", type=float, default=1.0,
              help="Virtual-to-wall clock ratio (1.0 = real time).")
@click.option("--frontend", "frontend_dir", type=click.Path(), default=None,
              help="Directory of static UI files to serve at /.")
def serve(config_path, port, time_scale, frontend_dir) -> None:
    """Start the interactive control service."""
    config = _load(config_path, None)
    try:
        control.serve(config, port=port, time_scale=time_scale, frontend_dir=frontend_dir)
    except control.PortUnavailable as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
