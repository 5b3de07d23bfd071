# -*- coding: utf-8 -*-

"""Command line interface for qdiscord.

Exit statuses are 0 on success, 1 if a computation fails, and 2 on invalid flags.
"""

import contextlib
import json
import logging
import sys
from pathlib import Path
from typing import Iterator, Optional, Sequence, Tuple

import click
import numpy as np

from .config_api import get_config, get_workers
from .constants import (
    DEFAULT_ETA,
    DEFAULT_GAMMA,
    DEFAULT_GRID_POINTS,
    DEFAULT_GRID_WIDTH,
    DEFAULT_M_Q,
    DEFAULT_MC_TRIALS,
    DEFAULT_N_BLOCKS,
    MODULE_NAME,
)
from .estimation import GridSpec, Method, bayesian_estimate, inversion_estimate
from .homodyne import load_dataset, save_dataset, simulate_dataset, simulate_physical
from .model import PhysicalParams, StsParams, effective_photons, sts_discord
from .sweep import SweepConfig, bounds_table, run_sweep, validate_table, write_table
from .utils import DomainError, QDiscordError
from .version import get_version

__all__ = [
    "main",
]

logger = logging.getLogger(__name__)


class RangeGridType(click.ParamType):
    """A grid of the form ``start:stop:step``, including ``stop``."""

    name = "start:stop:step"

    def convert(self, value, param, ctx) -> Tuple[float, ...]:  # noqa:D102
        if isinstance(value, tuple):
            return value
        try:
            start, stop, step = (float(part) for part in value.split(":"))
        except ValueError:
            self.fail(f"{value!r} is not of the form start:stop:step", param, ctx)
        if step <= 0.0 or stop < start:
            self.fail(f"{value!r} needs step > 0 and stop >= start", param, ctx)
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(count))


class GridSpecType(click.ParamType):
    """A posterior grid of the form ``points:width``."""

    name = "points:width"

    def convert(self, value, param, ctx) -> GridSpec:  # noqa:D102
        if isinstance(value, GridSpec):
            return value
        try:
            points, width = value.split(":")
            rv = GridSpec(points=int(points), width=float(width))
        except ValueError:
            self.fail(f"{value!r} is not of the form points:width", param, ctx)
        if rv.points < 3 or rv.width <= 0.0:
            self.fail(f"{value!r} needs at least 3 points and a positive width", param, ctx)
        return rv


@contextlib.contextmanager
def _surface_errors() -> Iterator[None]:
    """Report library errors as failed commands."""
    try:
        yield
    except (QDiscordError, ValueError, OSError) as e:
        raise click.ClickException(f"{type(e).__name__}: {e}") from e


def _echo_json(data) -> None:
    click.echo(json.dumps(data, indent=2))


def _physical(gamma: Optional[float], eta: Optional[float]) -> Tuple[float, float]:
    return (
        get_config(MODULE_NAME, "gamma", passthrough=gamma, default=DEFAULT_GAMMA, dtype=float),
        get_config(MODULE_NAME, "eta", passthrough=eta, default=DEFAULT_ETA, dtype=float),
    )


gamma_option = click.option(
    "--gamma", type=float, help=f"Relative parasite gain [default: {DEFAULT_GAMMA}]"
)
eta_option = click.option("--eta", type=float, help=f"Homodyne efficiency [default: {DEFAULT_ETA}]")
seed_option = click.option("--seed", type=int, default=0, show_default=True)
workers_option = click.option(
    "--workers", type=int, help="Number of threads [default: $QDISCORD_WORKERS or 1]"
)
grid_option = click.option(
    "--grid",
    type=GridSpecType(),
    default=f"{DEFAULT_GRID_POINTS}:{DEFAULT_GRID_WIDTH:g}",
    show_default=True,
    help="Posterior grid points per axis and half-width in prior standard deviations",
)


@click.group()
@click.version_option(version=get_version(), prog_name=MODULE_NAME)
@click.option("-v", "--verbose", count=True, help="Log INFO (-v) or DEBUG (-vv) messages")
def main(verbose: int):
    """Estimate the Gaussian discord of squeezed thermal states from homodyne data."""
    if verbose:
        logging.basicConfig(
            level=logging.DEBUG if verbose > 1 else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
        )


@main.command()
@click.option(
    "--r",
    "r",
    type=float,
    help="Squeezing strength, mapped to photon numbers with --gamma and --eta",
)
@click.option("--ns", type=float, help="Effective squeezing photons")
@click.option("--nt", type=float, help="Effective thermal photons")
@gamma_option
@eta_option
@click.option(
    "--mq", type=int, default=DEFAULT_M_Q, show_default=True, help="Shots per quadrature pair"
)
@seed_option
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--name", default="dataset", show_default=True, help="Stem of the dataset files")
@workers_option
def simulate(
    r: Optional[float],
    ns: Optional[float],
    nt: Optional[float],
    gamma: Optional[float],
    eta: Optional[float],
    mq: int,
    seed: int,
    out: Path,
    name: str,
    workers: Optional[int],
):
    """Simulate a dual-homodyne dataset."""
    if (r is None) == (ns is None and nt is None):
        raise click.UsageError("give either --r or both --ns and --nt")
    if r is None and (ns is None or nt is None):
        raise click.UsageError("--ns and --nt must be given together")
    with _surface_errors():
        if r is not None:
            gamma, eta = _physical(gamma, eta)
            q = PhysicalParams(r=r, gamma=gamma, eta=eta)
            p = effective_photons(q)
            ds = simulate_physical(q, mq, seed, workers=get_workers(workers))
        else:
            p = StsParams(n_s=ns, n_t=nt)
            ds = simulate_dataset(p, mq, seed, workers=get_workers(workers))
        path = out / f"{name}.csv"
        sidecar = save_dataset(ds, path)
    _echo_json(
        {
            "path": str(path),
            "meta_path": str(sidecar),
            "n_s": p.n_s,
            "n_t": p.n_t,
            "d_true": sts_discord(p),
            "meta": ds.meta.to_json(),
        }
    )


@main.command()
@click.option("--method", type=click.Choice([m.value for m in Method]), required=True)
@click.option(
    "--in",
    "input_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    required=True,
    help="Dataset CSV with its JSON sidecar next to it",
)
@click.option("--mc-trials", type=int, default=DEFAULT_MC_TRIALS, show_default=True)
@click.option("--blocks", type=int, default=DEFAULT_N_BLOCKS, show_default=True)
@grid_option
@seed_option
@workers_option
@click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=Path),
    help="Also write the record to this JSON file",
)
def estimate(
    method: str,
    input_path: Path,
    mc_trials: int,
    blocks: int,
    grid: GridSpec,
    seed: int,
    workers: Optional[int],
    out: Optional[Path],
):
    """Estimate the discord of a dataset."""
    with _surface_errors():
        ds = load_dataset(input_path)
        if Method(method) is Method.INVERSION:
            record = inversion_estimate(
                ds, mc_trials=mc_trials, seed=seed, workers=get_workers(workers)
            )
        else:
            record = bayesian_estimate(
                ds,
                n_blocks=blocks,
                grid_spec=grid,
                seed=seed,
                mc_trials=mc_trials,
                workers=get_workers(workers),
            )
    if out is not None:
        with _surface_errors(), out.open("w", encoding="utf-8") as file:
            json.dump(record.to_json(), file, indent=2)
    _echo_json(record.to_json())


@main.command()
@click.option(
    "--r-grid",
    type=RangeGridType(),
    required=True,
    help="Squeezing strengths, e.g., 0.05:1:0.05",
)
@gamma_option
@eta_option
@click.option(
    "--out", type=click.Path(dir_okay=False, path_type=Path), help="Output CSV [default: stdout]"
)
def bounds(
    r_grid: Sequence[float],
    gamma: Optional[float],
    eta: Optional[float],
    out: Optional[Path],
):
    """Tabulate the quantum and homodyne bounds on the discord."""
    gamma, eta = _physical(gamma, eta)
    try:
        PhysicalParams(r=r_grid[0], gamma=gamma, eta=eta)
    except DomainError as e:
        raise click.UsageError(str(e)) from e
    with _surface_errors():
        df = bounds_table(r_grid, gamma=gamma, eta=eta)
        if out is None:
            validate_table(df, "bounds")
            df.to_csv(sys.stdout, index=False, float_format="%.17g", lineterminator="\n")
        else:
            write_table(df, out, "bounds")
    skipped = len(r_grid) - len(df.index)
    if skipped:
        click.secho(f"skipped {skipped} singular rows", fg="yellow", err=True)


@main.command()
@click.option("--r-grid", type=RangeGridType(), help="Squeezing strengths [default: 0.05:1:0.05]")
@gamma_option
@eta_option
@click.option("--mq", type=int, help=f"Shots per quadrature pair [default: {DEFAULT_M_Q}]")
@click.option(
    "--blocks", type=int, help=f"Blocks of the Bayesian estimator [default: {DEFAULT_N_BLOCKS}]"
)
@click.option(
    "--mc-trials", type=int, help=f"Monte Carlo experiments [default: {DEFAULT_MC_TRIALS}]"
)
@click.option("--seed", "seeds", type=int, multiple=True, help="Seeds, repeatable [default: 0]")
@grid_option
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), help="Output directory")
@workers_option
@click.option("--force", is_flag=True, help="Recompute cached cells")
@click.option("--no-progress", is_flag=True, help="Hide the progress bar")
def sweep(
    r_grid: Optional[Sequence[float]],
    gamma: Optional[float],
    eta: Optional[float],
    mq: Optional[int],
    blocks: Optional[int],
    mc_trials: Optional[int],
    seeds: Sequence[int],
    grid: GridSpec,
    out: Optional[Path],
    workers: Optional[int],
    force: bool,
    no_progress: bool,
):
    """Run the sweep of estimators and bounds over the squeezing strength."""
    try:
        cfg = SweepConfig.from_config(
            r_values=r_grid,
            gamma=gamma,
            eta=eta,
            m_q=mq,
            n_blocks=blocks,
            mc_trials=mc_trials,
            seeds=seeds or None,
            grid_spec=grid,
            output_dir=out,
        )
    except ValueError as e:
        raise click.UsageError(str(e)) from e
    with _surface_errors():
        result = run_sweep(cfg, workers=workers, force=force, progress=not no_progress)
    n_cells = len(cfg.r_values) * len(cfg.seeds)
    if len(result.failures) == n_cells:
        manifest = result.output_dir / "manifest.json"
        raise click.ClickException(f"all {n_cells} cells failed, see {manifest}")
    if result.failures:
        click.secho(f"{len(result.failures)} of {n_cells} cells failed", fg="yellow", err=True)
    click.echo(str(result.output_dir))


if __name__ == "__main__":
    main()
