"""Command-line entry point.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for an
invalid configuration (nothing is run), 3 for a numerical failure (a report
flagged ``complete: false`` is still written).
"""

from __future__ import annotations

import json
import logging
import sys
import time
from pathlib import Path

import click

from harmreg.cli.commands import new_report, run_command
from harmreg.cli.config import FORMATS, load_config
from harmreg.cli.report import write_report
from harmreg.errors import ConfigError, NumericalError

log = logging.getLogger("harmreg")

EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 1, 2, 3


def common_options(fn):
    fn = click.option("--plot", is_flag=True, help="Also write SVG figures.")(fn)
    fn = click.option("--format", "fmt", type=click.Choice(FORMATS), default=None, help="Report format.")(fn)
    fn = click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")(fn)
    fn = click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Master seed (u64).")(fn)
    fn = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                      help="INI experiment config.")(fn)
    return fn


def execute(command: str, config_path, seed, out, fmt, plot) -> int:
    try:
        cfg = load_config(config_path, {"run": {"seed": seed, "out": out, "format": fmt}})
        cfg.seed  # validates
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_CONFIG
    out_dir = Path(cfg.get("run", "out", "results"))
    fmt = cfg.get("run", "format", "json")
    started = time.perf_counter()
    try:
        report = run_command(command, cfg)
        code = 0
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_CONFIG
    except NumericalError as exc:
        report = new_report(command, cfg)
        report.complete = False
        report.error = str(exc)
        report.add("numerical_failure", {"diagnostics": exc.diagnostics}, False)
        code = EXIT_NUMERICAL
    elapsed = time.perf_counter() - started
    paths = write_report(report, out_dir, fmt)
    # wall time goes to a sidecar so the report itself stays reproducible
    timing = out_dir / f"{command}.timing.json"
    timing.write_text(json.dumps({"command": command, "wall_time_s": elapsed}) + "\n", encoding="utf-8")
    if plot and report.complete:
        try:
            from harmreg.cli.plot import write_plots

            paths += write_plots(report, out_dir)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            return EXIT_CONFIG
    for chk in report.checks:
        click.echo(f"{'PASS' if chk.passed else 'FAIL'}  {chk.name}")
    for path in paths:
        click.echo(f"wrote {path}")
    log.info("%s finished in %.3f s", command, elapsed)
    if code == 0 and not report.passed:
        code = EXIT_FAIL
    return code


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Numerical checks for boundary regularity of harmonic functions."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@main.command("majorant-check")
@common_options
def majorant_check(**kw):
    """Majorant axioms and the regularity test."""
    sys.exit(execute("majorant-check", **kw))


@main.command("verify")
@click.argument("check", type=click.Choice(["har-est", "trans-dist", "max-principle", "dilate"]))
@common_options
def verify(check, **kw):
    """Gradient bound, transversal distance, band transfer or dilation checks."""
    sys.exit(execute(f"verify-{check}", **kw))


@main.command("seminorm")
@click.argument("which", type=click.Choice(["global", "transversal", "hl"]))
@common_options
def seminorm(which, **kw):
    """Sampled global, transversal or gradient-functional constant."""
    sys.exit(execute(f"seminorm-{which}", **kw))


@main.command("main-theorem")
@common_options
def main_theorem(**kw):
    """Transversal, gradient and global constants at two budgets."""
    sys.exit(execute("main-theorem", **kw))


if __name__ == "__main__":
    main()
