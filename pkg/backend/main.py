"""
mudkit command line

Commands:
- whiten     run one whitening operator on a random instance, JSON report
- trace      Gram-map convergence trace, CSV with a fitted-order row
- sgs-check  congruence vs SGS-preconditioned spectra, JSON
- bench      FLOP / wall-time rows, CSV (or the structural cost table)
- train      one training run, CSV of records
- compare    several optimizers over several seeds, JSON summary

Exit codes: 0 ok (click default), 2 usage or config error, 3 numerical failure,
4 diverged training. Payloads go to stdout (or --out), logs to stderr.
"""

import functools
import sys
from typing import Optional, Tuple

import click

from analysis.bench import bench, table_rows
from analysis.compare import compare_runs
from analysis.convergence import fit_convergence_order, trace_convergence
from analysis.generators import SpectrumSpec, random_unit_diag_spd, random_with_spectrum
from errors import ConfigError, MudkitError, NumericalError
from harness.trainer import train
from run_config import RunConfig, env_seed, load_compare_config, load_run_config, parse_config, validate_run_config
from utils.log import get_logger, setup_logging
from utils.reports import (
    BENCH_HEADER,
    TABLE_HEADER,
    TRACE_HEADER,
    TRAIN_HEADER,
    records_as_rows,
    write_csv,
    write_json,
)
from whitening.gram_space import NORM_NAMES, sgs_preconditioned_spectrum, spectrum_discrepancy
from whitening.operators import WhitenConfig, run_whiten

logger = get_logger(__name__)

EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_DIVERGED = 4

SGS_TOLERANCE = 1e-8


def handle_errors(command):
    """Map mudkit exceptions to exit codes"""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except NumericalError as e:
            logger.error(f"❌ numerical failure: {e}")
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_NUMERICAL)
        except MudkitError as e:
            logger.error(f"❌ {e}")
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_USAGE)

    return wrapper


def resolve_seed(flag: Optional[int], default: int = 0) -> int:
    """Explicit flag, then MUDKIT_SEED, then the default"""
    if flag is not None:
        return flag
    seed = env_seed()
    return default if seed is None else seed


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log progress (INFO).")
@click.option("--debug", is_flag=True, help="Log kernel details (DEBUG).")
def cli(verbose: bool, debug: bool):
    """Matrix-whitening optimizer toolkit."""
    setup_logging("DEBUG" if debug else "INFO" if verbose else None)


@cli.command()
@click.option("--op", default="mud", show_default=True, help="mud, muon, polar, cholqr (mud2, muon3, ... also accepted).")
@click.option("--passes", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--ns-iters", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--rows", type=click.IntRange(min=1), default=256, show_default=True)
@click.option("--cols", type=click.IntRange(min=1), default=1024, show_default=True)
@click.option("--cond", type=click.FloatRange(min=1.0), default=10.0, show_default=True)
@click.option("--eps", type=float, default=1e-8, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", default="-", show_default=True)
@handle_errors
def whiten(op, passes, ns_iters, rows, cols, cond, eps, seed, out):
    """Whiten a random matrix with a controlled condition number."""
    k, d = min(rows, cols), max(rows, cols)
    M = random_with_spectrum(SpectrumSpec(k, d, condition_number=cond), resolve_seed(seed))
    if rows > cols:
        M = M.T
    report = run_whiten(op, M, WhitenConfig(passes=passes, ns_iters=ns_iters, eps=eps))
    with click.open_file(out, "w") as f:
        write_json(f, report.summary())


@cli.command()
@click.option("--dim", type=click.IntRange(min=1), default=16, show_default=True)
@click.option("--eps0", type=click.FloatRange(min=0.0), default=0.003, show_default=True)
@click.option("--passes", type=click.IntRange(min=1), default=8, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", default="-", show_default=True)
@handle_errors
def trace(dim, eps0, passes, seed, out):
    """Trace ||G_t - I|| under repeated Gram-map passes."""
    G0 = random_unit_diag_spd(dim, eps0, resolve_seed(seed))
    gram_trace = trace_convergence(G0, max_passes=passes)
    rows = gram_trace.rows()
    slopes = {name: fit_convergence_order(gram_trace, name) for name in NORM_NAMES}
    if any(value is not None for value in slopes.values()):
        rows.append({"pass": "slope", **slopes})
    with click.open_file(out, "w") as f:
        write_csv(f, TRACE_HEADER, rows)


@cli.command("sgs-check")
@click.option("--dim", type=click.IntRange(min=1), default=24, show_default=True)
@click.option("--eps0", type=click.FloatRange(min=0.0), default=None, help="Defaults to 0.5/(dim-1).")
@click.option("--instances", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", default="-", show_default=True)
@handle_errors
def sgs_check(dim, eps0, instances, seed, out):
    """Compare the congruence spectrum with the SGS-preconditioned spectrum."""
    if eps0 is None:
        eps0 = 0.5 / (dim - 1) if dim > 1 else 0.0
    base = resolve_seed(seed)
    worst = 0.0
    for i in range(instances):
        G = random_unit_diag_spd(dim, eps0, base + i)
        congruence, preconditioned = sgs_preconditioned_spectrum(G)
        worst = max(worst, spectrum_discrepancy(congruence, preconditioned))
    passed = worst <= SGS_TOLERANCE
    with click.open_file(out, "w") as f:
        write_json(f, {
            "dim": dim,
            "eps0": eps0,
            "instances": instances,
            "max_discrepancy": worst,
            "tolerance": SGS_TOLERANCE,
            "passed": passed,
        })
    if not passed:
        logger.error(f"❌ spectra differ by {worst:.3e}")
        sys.exit(EXIT_NUMERICAL)


@cli.command("bench")
@click.option("--op", "ops", multiple=True, default=("muon5", "mud1", "mud2"), show_default=True)
@click.option("--k", "k", type=click.IntRange(min=1), default=256, show_default=True)
@click.option("--d", "d", type=click.IntRange(min=1), default=1024, show_default=True)
@click.option("--repeats", type=click.IntRange(min=3), default=5, show_default=True)
@click.option("--cond", type=click.FloatRange(min=1.0), default=10.0, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--table", is_flag=True, help="Emit the structural cost table instead of timings.")
@click.option("--out", default="-", show_default=True)
@handle_errors
def bench_cmd(ops: Tuple[str, ...], k, d, repeats, cond, seed, table, out):
    """Benchmark whitening operators: ledger FLOPs and median wall time."""
    if k > d:
        raise ConfigError(f"--k must not exceed --d, got {k} > {d}")
    if table:
        rows = table_rows(k, d, ops=ops, seed=resolve_seed(seed))
        with click.open_file(out, "w") as f:
            write_csv(f, TABLE_HEADER, rows)
        return
    spec = SpectrumSpec(k, d, condition_number=cond)
    M = random_with_spectrum(spec, resolve_seed(seed))
    results = [bench(name, spec, repeats=repeats, matrix=M) for name in ops]
    with click.open_file(out, "w") as f:
        write_csv(f, BENCH_HEADER, (row.as_row() for row in results))


@cli.command("train")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@click.option("--optimizer", type=click.Choice(["adamw", "muon", "mud"]), default=None)
@click.option("--task", type=click.Choice(["matreg", "mlp"]), default=None)
@click.option("--steps", type=click.IntRange(min=0), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None)
@click.option("--no-wall-clock", is_flag=True, help="Write elapsed_seconds as 0 for byte-stable output.")
@click.option("--progress", is_flag=True)
@click.option("--out", default=None)
@handle_errors
def train_cmd(config_path, optimizer, task, steps, seed, fmt, no_wall_clock, progress, out):
    """Train on a synthetic task and write the per-step records."""
    config = load_run_config(config_path)
    overrides = {
        "optimizer": optimizer,
        "task": task,
        "steps": steps,
        "seed": seed,
        "format": fmt,
        "wall_clock": False if no_wall_clock else None,
    }
    overrides = {key: value for key, value in overrides.items() if value is not None}
    if overrides:
        config = parse_config(RunConfig, {**config.model_dump(), **overrides}, "run config")
    validate_run_config(config)

    run = train(config, progress=progress)
    with click.open_file(out or config.output_path or "-", "w") as f:
        if config.format == "json":
            write_json(f, run.to_dict())
        else:
            write_csv(f, TRAIN_HEADER, records_as_rows(run.records))
    if run.diverged:
        click.echo(f"Diverged at step {run.stopped_at}", err=True)
        sys.exit(EXIT_DIVERGED)


@cli.command("compare")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@click.option("--workers", type=click.IntRange(min=1), default=None)
@click.option("--out", default=None)
@handle_errors
def compare_cmd(config_path, workers, out):
    """Steps- and seconds-to-target for several optimizers and seeds."""
    config = load_compare_config(config_path)
    if workers is not None:
        config = config.model_copy(update={"workers": workers})
    summary = compare_runs(config)
    with click.open_file(out or config.output_path or "-", "w") as f:
        write_json(f, summary)
    if summary["diverged"]:
        sys.exit(EXIT_DIVERGED)


if __name__ == "__main__":
    cli()
