"""Headless entry points: run scenarios, trade-off analysis, and log replay.

The CLI is a thin client over the core package; `--serve` hands the session
to the FastAPI service for live consoles.
"""

from __future__ import annotations

import dataclasses
import json
import pathlib
import sys
import time

import click

from . import tradeoff as to
from .report import aggregate
from .scenario import ScenarioError, default_scenario_path, load_scenario
from .session import ScriptedCommand, Session, command_from_frame
from .telemetry import (
    CommandIngestError,
    encode_frame,
    iter_replay,
    parse_command_frame,
    read_log,
)


def fail(message: str) -> SystemExit:
    click.echo(f"error: {message}", err=True)
    return SystemExit(2)


def load_command_script(path) -> list[ScriptedCommand]:
    """Command scripts are newline-delimited wire cmd frames; each frame's
    t field is the sim time at which the command is issued."""
    commands = []
    try:
        lines = pathlib.Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise fail(f"{path}: {exc.strerror}")
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            frame = parse_command_frame(line)
        except CommandIngestError as exc:
            raise fail(f"{path}:{lineno}: {exc}")
        kwargs = command_from_frame(frame)
        commands.append(ScriptedCommand(at=frame.sim_time, **kwargs))
    return commands


@click.group()
@click.version_option(package_name="robonurse")
def main():
    """Ward simulator and control stack for an IoT-supervised robot nurse."""


@main.command()
@click.option("--scenario", "scenario_path", default=None,
              help="Scenario file (defaults to the packaged ward).")
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--duration", type=float, default=600.0, show_default=True,
              help="Simulated seconds to run (headless mode).")
@click.option("--commands", "commands_path", default=None,
              help="Command script: wire cmd frames, one per line, issued at their t.")
@click.option("--serve", is_flag=True, help="Serve live telemetry for consoles.")
@click.option("--port", type=int, default=None, help="Telemetry port (with --serve).")
@click.option("--speed", type=float, default=1.0, show_default=True,
              help="Real-time multiplier (with --serve).")
@click.option("--log", "log_path", default=None, help="Telemetry log output path.")
@click.option("--machine", is_flag=True, help="Emit the report as JSON.")
def sim(scenario_path, seed, duration, commands_path, serve, port, speed, log_path, machine):
    """Run a full scenario: routine rounds, telemetry, report."""
    path = scenario_path or default_scenario_path()
    try:
        scenario = load_scenario(path)
    except ScenarioError as exc:
        raise fail(str(exc))
    if seed is not None:
        scenario = dataclasses.replace(scenario, seed=seed)

    script = load_command_script(commands_path) if commands_path else []

    if serve:
        import uvicorn

        from .service import LiveRunner, create_app, default_frontend_dir

        session = Session(scenario)
        if script:
            session.load_script(script)
        runner = LiveRunner(session, speed=speed)
        app = create_app(runner=runner, frontend_dir=default_frontend_dir())
        uvicorn.run(app, host="0.0.0.0", port=port or scenario.telemetry.port,
                    log_level="warning")
        return

    if log_path is None:
        stamp = time.strftime("%Y%m%d-%H%M%S")
        name = pathlib.Path(path).stem
        log_path = f"{name}-seed{scenario.seed}-{stamp}.log"
    session = Session(scenario, log_path=log_path)
    if script:
        session.load_script(script)
    session.run(duration)

    report = session.report()
    if machine:
        click.echo(json.dumps({**report.to_dict(), "log": str(log_path)}, indent=2))
    else:
        for line in report.lines():
            click.echo(line)
        click.echo(f"telemetry log         {log_path}")


@main.command()
@click.option("--catalog", "catalog_path", required=True, help="Alternatives catalog file.")
@click.option("--weights", "weights_path", required=True, help="Weight matrix file.")
@click.option("-k", "top_k", type=int, default=3, show_default=True,
              help="How many ranked configurations to print.")
@click.option("--availability", "availability_path", default=None,
              help="Optional YAML map of code -> available.")
@click.option("--machine", is_flag=True, help="Emit JSON instead of a table.")
def tradeoff(catalog_path, weights_path, top_k, availability_path, machine):
    """Rank subsystem configurations by weighted cost."""
    try:
        catalog = to.load_catalog(catalog_path)
        weights = to.load_weights(weights_path)
    except to.WeightMatrixError as exc:
        raise fail(str(exc))
    except (to.CatalogError, to.ConfigurationError, OSError) as exc:
        raise fail(str(exc))

    availability = {}
    if availability_path:
        import yaml

        with open(availability_path, "r", encoding="utf-8") as fh:
            availability = {str(k): bool(v) for k, v in yaml.safe_load(fh).items()}

    try:
        ranked = to.select_optimal(to.enumerate_configs(catalog, weights), k=top_k)
        final = to.apply_availability(ranked, availability, weights, catalog)
    except to.CatalogError as exc:
        raise fail(str(exc))
    except to.InfeasibleConfigurationError as exc:
        raise fail(str(exc))

    if machine:
        def as_dict(c):
            return {
                "codes": list(c.codes()),
                "breakdown": {k: round(v, 6) for k, v in c.breakdown.items()},
                "total": round(c.total, 6),
            }

        click.echo(json.dumps(
            {"ranked": [as_dict(c) for c in ranked], "final": as_dict(final)}, indent=2
        ))
        return

    header = f"{'rank':<5}{'configuration':<28}{'cost':>8}{'acc':>8}{'wt':>8}{'speed':>8}{'total':>9}"
    click.echo(header)
    click.echo("-" * len(header))
    for rank, cand in enumerate(ranked, start=1):
        b = cand.breakdown
        click.echo(
            f"{rank:<5}{cand.code_string():<28}"
            f"{b['c']:>8.2f}{b['a']:>8.2f}{b['w']:>8.2f}{b['s']:>8.2f}{cand.total:>9.2f}"
        )
    click.echo(f"\nfinal (after availability): {final.code_string()}  total {final.total:.2f}")


@main.command()
@click.option("--log", "log_path", required=True, help="Telemetry log to replay.")
@click.option("--speed", type=float, default=0.0, show_default=True,
              help="Replay pacing (0 = as fast as possible).")
@click.option("--serve", is_flag=True, help="Re-serve the stream for consoles.")
@click.option("--port", type=int, default=7071, show_default=True)
@click.option("--report", "with_report", is_flag=True,
              help="Print the aggregated report after replay.")
def replay(log_path, speed, serve, port, with_report):
    """Replay a persisted telemetry log."""
    try:
        frames, skipped = read_log(log_path)
    except OSError as exc:
        raise fail(f"{log_path}: {exc.strerror}")
    if skipped:
        click.echo(f"warning: skipped {skipped} corrupt line(s)", err=True)

    if serve:
        import uvicorn

        from .service import ReplayRunner, create_app, default_frontend_dir

        runner = ReplayRunner(frames, speed=speed if speed > 0 else 0.0)
        app = create_app(runner=runner, frontend_dir=default_frontend_dir())
        uvicorn.run(app, host="0.0.0.0", port=port, log_level="warning")
        return

    for delay, frame in iter_replay(frames, speed=speed):
        if delay > 0:
            time.sleep(delay)
        click.echo(encode_frame(frame))
    if with_report:
        for line in aggregate(frames).lines():
            click.echo(line, err=True)


if __name__ == "__main__":
    main()
