"""Command-line interface (CLI) entry point and complete reference of omega functionality."""

import logging
import os
import sys

import click

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
_handler = None


def welcome():
    """Print first to welcome the user while it waits to load the modules"""
    banner = [
        "",
        "              ╔═══════════════════════════════╗           ",
        "              ║            OMEGA              ║           ",
        "              ║  excited states by variation  ║           ",
        "              ╚═══════════════════════════════╝           ",
        "  ╔════════════════════════════════════════════════════╗ ",
        "  ║   Usage: omega --help                              ║ ",
        "  ║   Tasks: spectrum omega-min hum refine             ║ ",
        "  ║          pathology bench                           ║ ",
        "  ╚════════════════════════════════════════════════════╝ ",
        "",
    ]
    for line in banner:
        click.echo(line, err=True)


def configure_logging() -> int:
    """
    Point the ``omega`` logger at standard error with the level named by OMEGA_LOG.

    Raises
    ------
    ConfigError
        If OMEGA_LOG is not one of error, info, debug.
    """
    from omega.errors import ConfigError

    global _handler
    name = os.environ.get("OMEGA_LOG", "error").strip().lower()
    if name not in LOG_LEVELS:
        raise ConfigError(f"OMEGA_LOG must be one of error, info, debug; got '{name}'.")
    level = LOG_LEVELS[name]
    logger = logging.getLogger("omega")
    if _handler is not None:
        logger.removeHandler(_handler)
    _handler = logging.StreamHandler(sys.stderr)
    _handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(_handler)
    logger.setLevel(level)
    logger.propagate = False
    return level


def scenario_options(function):
    """Options shared by every task."""
    options = [
        click.option("--input", "input_path", type=click.Path(), help="Hamiltonian matrix file (.json or text)."),
        click.option("--builtin", type=click.Choice(["he-model"]), help="Builtin model."),
        click.option("--random", "random_spec", help="Random model: dim=<n>,seed=<s>,min-gap=<g>,spread=<r>."),
        click.option("--tol", type=float, default=1e-8, show_default=True, help="Omega tolerance."),
        click.option("--max-iters", type=int, default=10000, show_default=True, help="Iterations per run."),
        click.option("--restarts", type=int, default=8, show_default=True, help="Random restarts."),
        click.option("--steepen", help="Minimize the steepened functional: N=<n>,T=<t>."),
        click.option("--out", type=click.Path(), help="Report file; standard output when omitted."),
        click.option("--format", "fmt", type=click.Choice(["json", "tsv"]), default="json", show_default=True),
        click.option("--seed", type=int, default=0, show_default=True, help="Seed for states, restarts and trials."),
        click.option("--epsilon", type=float, default=0.0, show_default=True, help="Pathology energy offset."),
        click.option("--trials", type=int, default=100, show_default=True, help="Bench trials."),
        click.option("--outer-rounds", type=int, default=5, show_default=True, help="Refine outer rounds."),
        click.option("--perturbation", type=float, default=0.1, show_default=True, help="Approximant angle."),
        click.option("--n-jobs", type=int, default=1, show_default=True, help="joblib workers."),
    ]
    for option in reversed(options):
        function = option(function)
    return function


def build_config(task: str, options: dict):
    """Translate parsed options into a ScenarioConfig."""
    from omega.analyze import ScenarioConfig, SteepeningOptions
    from omega.errors import ConfigError
    from omega.optimize import OptimizerConfig
    from omega.process import RandomModelSpec

    optimizer = OptimizerConfig(
        tol_omega=options["tol"],
        max_iters=options["max_iters"],
        restart_count=options["restarts"],
        seed=options["seed"],
    )
    config = ScenarioConfig(
        task=task,
        input_path=options["input_path"],
        builtin=options["builtin"],
        random=RandomModelSpec.parse(options["random_spec"]) if options["random_spec"] else None,
        optimizer=optimizer,
        steepening=SteepeningOptions.parse(options["steepen"]) if options["steepen"] else None,
        out=options["out"],
        fmt=options["fmt"],
        seed=options["seed"],
        epsilon=options["epsilon"],
        trials=options["trials"],
        outer_rounds=options["outer_rounds"],
        perturbation=options["perturbation"],
        n_jobs=options["n_jobs"],
    )
    if config.steepening is not None and task != "omega-min":
        raise ConfigError("--steepen only applies to omega-min.")
    config.validate()
    return config


def run_task(task: str, options: dict) -> None:
    """Run one task; typed errors become a one-line diagnostic and exit status 2."""
    from omega import manage
    from omega.analyze import run_scenario
    from omega.errors import OmegaError

    try:
        if configure_logging() <= logging.INFO:
            welcome()
        config = build_config(task, options)
        report = run_scenario(config)
    except OmegaError as err:
        message = " ".join(str(err).split())
        click.echo(f"{type(err).__name__}: {message}", err=True)
        sys.exit(2)
    if config.out is None:
        click.echo(manage.format_report(report.to_dict(), config.fmt), nl=False)


@click.group()
@click.help_option("--help", "-h")
def cli():
    """Omega_n excited-state functional: experiments on model Hamiltonians."""


@cli.command()
@scenario_options
def spectrum(**options):
    """Exact eigenvalues and eigenvectors of the Hamiltonian."""
    run_task("spectrum", options)


@cli.command("omega-min")
@scenario_options
def omega_min(**options):
    """Minimize Omega_1 (or the steepened functional) for the first excited state."""
    run_task("omega-min", options)


@cli.command()
@scenario_options
def hum(**options):
    """Secular-equation roots on a trial basis against the exact levels."""
    run_task("hum", options)


@cli.command()
@scenario_options
def refine(**options):
    """Alternate Omega_1 minimization with ground-state rotation."""
    run_task("refine", options)


@cli.command()
@scenario_options
def pathology(**options):
    """Three-level state orthogonal to phi0 at E_1 - epsilon with no psi1 weight."""
    run_task("pathology", options)


@cli.command()
@scenario_options
def bench(**options):
    """Seeded property checks over many trials."""
    run_task("bench", options)


if __name__ == "__main__":
    cli()
