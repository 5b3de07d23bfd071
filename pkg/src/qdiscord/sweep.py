# -*- coding: utf-8 -*-

"""Sweeps over the squeezing strength and the tables they produce.

A sweep evaluates one *cell* per pair of squeezing strength ``r`` and seed:
it simulates a dataset, runs both estimators, and compares their variances
with the quantum and the homodyne Cramér-Rao bounds. Cells are cached as
JSON below ``<output>/cells/<config hash>/``, so an interrupted sweep
resumes where it stopped. The following files are written to the output
directory, each checked against its schema:

========================  ===========================================================
File                      Content
========================  ===========================================================
``sweep.csv``             One :class:`SweepRow` per ``r``, aggregated over the seeds
``sweep.json``            The same rows as a list of JSON objects
``fig2.csv``              The discord from the model and from both estimators
``fig3.csv``              The noise ratios in dB in long format, one series per
                          estimator and bound
``manifest.json``         Configuration, versions, timings, and failed cells
========================  ===========================================================
"""

import json
import logging
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy
from tqdm import tqdm

from .cache import CachedJSON, config_hash
from .config_api import get_config, get_workers
from .constants import (
    DEFAULT_ETA,
    DEFAULT_GAMMA,
    DEFAULT_M_Q,
    DEFAULT_MC_TRIALS,
    DEFAULT_N_BLOCKS,
    DEFAULT_R_VALUES,
    FORMAT_VERSION,
    MODULE_NAME,
    RNG_ALGORITHM,
    SCHEMA_VERSION,
)
from .estimation import GridSpec, bayesian_estimate, inversion_estimate
from .fisher import InfoKind, crb_discord, crb_single_parameter, noise_ratio_db
from .homodyne import simulate_physical
from .model import PhysicalParams, discord_physical, effective_photons
from .utils import (
    MatrixInversionError,
    PoleError,
    QDiscordError,
    SchemaError,
    SingularJacobianError,
    get_base,
    mkdir,
)
from .version import get_version

__all__ = [
    # Types
    "SweepConfig",
    "SweepRow",
    "SweepResult",
    # Cells and aggregation
    "run_cell",
    "aggregate_cells",
    "run_sweep",
    # Tables
    "sweep_table",
    "fig2_table",
    "fig3_table",
    "bounds_table",
    "validate_table",
    "validate_manifest",
    "write_table",
]

logger = logging.getLogger(__name__)

#: Recoverable failures of a cell. Anything else aborts the sweep.
CELL_ERRORS = (
    QDiscordError,
    np.linalg.LinAlgError,
    FloatingPointError,
    OverflowError,
    ZeroDivisionError,
)

#: Failures that make a bound singular at a single squeezing strength
SINGULAR_BOUND_ERRORS = (PoleError, SingularJacobianError, MatrixInversionError)

STAND_IN_NOTE = (
    "The grid of squeezing strengths is a stand-in for the unpublished pump powers of the "
    "experiment, so the realized discord values need not match measured ones."
)


@dataclass(frozen=True)
class SweepConfig:
    """The configuration of a sweep."""

    r_values: Tuple[float, ...] = DEFAULT_R_VALUES
    gamma: float = DEFAULT_GAMMA
    eta: float = DEFAULT_ETA
    m_q: int = DEFAULT_M_Q
    n_blocks: int = DEFAULT_N_BLOCKS
    mc_trials: int = DEFAULT_MC_TRIALS
    seeds: Tuple[int, ...] = (0,)
    grid_spec: GridSpec = field(default_factory=GridSpec)
    #: Where the tables are written. Defaults to ``sweep`` below :func:`qdiscord.utils.get_home`
    output_dir: Optional[Path] = None

    def __post_init__(self):  # noqa:D105
        object.__setattr__(self, "r_values", tuple(float(r) for r in self.r_values))
        object.__setattr__(self, "seeds", tuple(int(seed) for seed in self.seeds))
        if not self.r_values:
            raise ValueError("r_values must not be empty")
        if self.r_values[0] <= 0.0 or any(a >= b for a, b in zip(self.r_values, self.r_values[1:])):
            raise ValueError(f"r_values must be positive and strictly increasing: {self.r_values}")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ValueError(f"seeds must be non-empty and unique: {self.seeds}")
        if self.m_q < 2 or self.n_blocks < 1 or self.m_q % self.n_blocks:
            raise ValueError(f"n_blocks={self.n_blocks} must divide m_q={self.m_q}")
        if self.mc_trials < 10_000:
            raise ValueError(f"mc_trials={self.mc_trials} must be at least 10^4")
        PhysicalParams(r=self.r_values[0], gamma=self.gamma, eta=self.eta)

    @classmethod
    def from_config(cls, **kwargs: Any) -> "SweepConfig":
        """Build a configuration, filling unset values from :func:`qdiscord.get_config`.

        :param kwargs: Explicit values. ``None`` values are looked up in the
            environment (e.g., ``QDISCORD_M_Q``) and the configuration files.
        :returns: A sweep configuration
        """
        lookups = {
            "gamma": (DEFAULT_GAMMA, float),
            "eta": (DEFAULT_ETA, float),
            "m_q": (DEFAULT_M_Q, int),
            "n_blocks": (DEFAULT_N_BLOCKS, int),
            "mc_trials": (DEFAULT_MC_TRIALS, int),
        }
        for key, (default, dtype) in lookups.items():
            kwargs[key] = get_config(
                MODULE_NAME, key, passthrough=kwargs.get(key), default=default, dtype=dtype
            )
        return cls(**{key: value for key, value in kwargs.items() if value is not None})

    def get_output_dir(self) -> Path:
        """Get the output directory, creating it if needed."""
        if self.output_dir is None:
            return get_base("sweep")
        rv = Path(self.output_dir)
        mkdir(rv)
        return rv

    def to_json(self) -> Dict[str, Any]:
        """Serialize everything that determines the results, i.e., all but the output directory."""
        return {
            "r_values": list(self.r_values),
            "gamma": self.gamma,
            "eta": self.eta,
            "m_q": self.m_q,
            "n_blocks": self.n_blocks,
            "mc_trials": self.mc_trials,
            "seeds": list(self.seeds),
            "grid_spec": asdict(self.grid_spec),
        }


def run_cell(cfg: SweepConfig, r: float, seed: int) -> Dict[str, Any]:
    """Simulate, estimate, and bound the discord at one squeezing strength.

    The noise ratios use the variances reported by the estimators and the
    bounds at the generating parameters.

    :param cfg: The sweep configuration
    :param r: The squeezing strength
    :param seed: The seed of the dataset and of the Monte Carlo draws
    :returns: A JSON-compatible record of the cell
    """
    start = time.perf_counter()
    q = PhysicalParams(r=r, gamma=cfg.gamma, eta=cfg.eta)
    p = effective_photons(q)
    ds = simulate_physical(q, cfg.m_q, seed)
    inv = inversion_estimate(ds, mc_trials=cfg.mc_trials, seed=seed)
    bay = bayesian_estimate(
        ds, n_blocks=cfg.n_blocks, grid_spec=cfg.grid_spec, seed=seed, prior=inv
    )
    crb_quantum = crb_discord(q, InfoKind.QUANTUM)
    crb_classical = crb_discord(q, InfoKind.CLASSICAL)
    return {
        "r": r,
        "seed": seed,
        "n_s": p.n_s,
        "n_t": p.n_t,
        "d_true": discord_physical(q),
        "d_inv": inv.d_hat,
        "var_inv": inv.var_d,
        "d_bay": bay.d_hat,
        "var_bay": bay.var_d,
        "crb_quantum": crb_quantum.var_bound_per_shot,
        "crb_classical": crb_classical.var_bound_per_shot,
        "k_m_inv_db": noise_ratio_db(inv.var_d, inv.resources_m, crb_classical),
        "k_m_bay_db": noise_ratio_db(bay.var_d, bay.resources_m, crb_classical),
        "k_m_quantum_inv_db": noise_ratio_db(inv.var_d, inv.resources_m, crb_quantum),
        "k_m_quantum_bay_db": noise_ratio_db(bay.var_d, bay.resources_m, crb_quantum),
        "resources_inv": inv.resources_m,
        "resources_bay": bay.resources_m,
        "elapsed_seconds": time.perf_counter() - start,
    }


@dataclass(frozen=True)
class SweepRow:
    """The results at one squeezing strength, aggregated over the seeds."""

    r: float
    n_s: float
    n_t: float
    #: The model discord at the generating parameters
    d_true: float
    #: Mean of the inversion estimates
    d_inv: float
    #: Root mean square of the standard deviations reported by the inversion estimator
    sigma_inv: float
    #: Standard deviation of the inversion estimates over the seeds
    spread_inv: float
    d_bay: float
    sigma_bay: float
    spread_bay: float
    #: Per-shot bounds on the variance of the discord
    crb_quantum: float
    crb_classical: float
    #: Noise ratios in dB, averaged over the seeds
    k_m_inv_db: float
    k_m_bay_db: float
    k_m_quantum_inv_db: float
    k_m_quantum_bay_db: float
    resources_inv: int
    resources_bay: int
    n_seeds: int

    def __post_init__(self):  # noqa:D105
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ValueError(f"{f.name} is not finite: {value}")


SWEEP_COLUMNS = tuple(f.name for f in fields(SweepRow))
FIG2_COLUMNS = ("r", "d_model", "d_inv", "sigma_inv", "d_bay", "sigma_bay")
FIG3_COLUMNS = ("discord", "k_m_db", "series")
BOUNDS_COLUMNS = (
    "r",
    "n_s",
    "n_t",
    "d_true",
    "crb_quantum",
    "crb_classical",
    "ratio_db",
    "crb_single_quantum",
    "crb_single_classical",
)
#: Columns holding labels instead of numbers
TEXT_COLUMNS = frozenset({"series"})
TABLE_SCHEMAS: Dict[str, Tuple[str, ...]] = {
    "sweep": SWEEP_COLUMNS,
    "fig2": FIG2_COLUMNS,
    "fig3": FIG3_COLUMNS,
    "bounds": BOUNDS_COLUMNS,
}
#: Series of the long-format noise ratio table, mapped to their columns in :class:`SweepRow`
FIG3_SERIES = {
    "inversion/classical": "k_m_inv_db",
    "bayes/classical": "k_m_bay_db",
    "inversion/quantum": "k_m_quantum_inv_db",
    "bayes/quantum": "k_m_quantum_bay_db",
}
MANIFEST_KEYS = (
    "schema_version",
    "format_version",
    "config",
    "config_hash",
    "versions",
    "rng",
    "timings",
    "failures",
    "tables",
    "notes",
)


def aggregate_cells(cells: Iterable[Mapping[str, Any]]) -> List[SweepRow]:
    """Aggregate cell records over the seeds.

    :param cells: Records from :func:`run_cell`
    :returns: One row per squeezing strength, in increasing order of ``r``
    """
    df = pd.DataFrame(list(cells))
    if df.empty:
        return []
    rv = []
    for r, group in df.groupby("r", sort=True):
        first = group.iloc[0]

        def _spread(column: str) -> float:
            return float(group[column].std(ddof=1)) if len(group.index) > 1 else 0.0

        rv.append(
            SweepRow(
                r=float(r),
                n_s=float(first["n_s"]),
                n_t=float(first["n_t"]),
                d_true=float(first["d_true"]),
                d_inv=float(group["d_inv"].mean()),
                sigma_inv=math.sqrt(float(group["var_inv"].mean())),
                spread_inv=_spread("d_inv"),
                d_bay=float(group["d_bay"].mean()),
                sigma_bay=math.sqrt(float(group["var_bay"].mean())),
                spread_bay=_spread("d_bay"),
                crb_quantum=float(first["crb_quantum"]),
                crb_classical=float(first["crb_classical"]),
                k_m_inv_db=float(group["k_m_inv_db"].mean()),
                k_m_bay_db=float(group["k_m_bay_db"].mean()),
                k_m_quantum_inv_db=float(group["k_m_quantum_inv_db"].mean()),
                k_m_quantum_bay_db=float(group["k_m_quantum_bay_db"].mean()),
                resources_inv=int(first["resources_inv"]),
                resources_bay=int(first["resources_bay"]),
                n_seeds=len(group.index),
            )
        )
    return rv


def sweep_table(rows: Sequence[SweepRow]) -> pd.DataFrame:
    """Tabulate the sweep rows."""
    return pd.DataFrame([asdict(row) for row in rows], columns=list(SWEEP_COLUMNS))


def fig2_table(rows: Sequence[SweepRow]) -> pd.DataFrame:
    """Tabulate the discord from the model and from both estimators against ``r``."""
    return pd.DataFrame(
        [(row.r, row.d_true, row.d_inv, row.sigma_inv, row.d_bay, row.sigma_bay) for row in rows],
        columns=list(FIG2_COLUMNS),
    )


def fig3_table(rows: Sequence[SweepRow]) -> pd.DataFrame:
    """Tabulate the noise ratios against the model discord in long format."""
    return pd.DataFrame(
        [
            (row.d_true, getattr(row, column), series)
            for series, column in FIG3_SERIES.items()
            for row in rows
        ],
        columns=list(FIG3_COLUMNS),
    )


def bounds_table(r_values: Iterable[float], gamma: float, eta: float) -> pd.DataFrame:
    """Tabulate the per-shot bounds on the discord.

    Squeezing strengths at which a bound is singular, e.g., ``r = 0``, are
    skipped with a warning.

    :param r_values: The squeezing strengths
    :param gamma: The relative parasite gain
    :param eta: The homodyne efficiency
    :returns: A table with the columns :data:`BOUNDS_COLUMNS`
    :raises DomainError: if ``gamma``, ``eta`` or one of the squeezing strengths is
        outside of its domain
    """
    PhysicalParams(r=0.0, gamma=gamma, eta=eta)
    rows = []
    for r in r_values:
        q = PhysicalParams(r=float(r), gamma=gamma, eta=eta)
        try:
            p = effective_photons(q)
            quantum = crb_discord(q, InfoKind.QUANTUM).var_bound_per_shot
            classical = crb_discord(q, InfoKind.CLASSICAL).var_bound_per_shot
            single_quantum = crb_single_parameter(q, InfoKind.QUANTUM).var_bound_per_shot
            single_classical = crb_single_parameter(q, InfoKind.CLASSICAL).var_bound_per_shot
        except SINGULAR_BOUND_ERRORS as e:
            logger.warning("skipping r=%s: %s", r, e)
            continue
        rows.append(
            (
                float(r),
                p.n_s,
                p.n_t,
                discord_physical(q),
                quantum,
                classical,
                10.0 * math.log10(classical / quantum),
                single_quantum,
                single_classical,
            )
        )
    return pd.DataFrame(rows, columns=list(BOUNDS_COLUMNS))


def validate_table(df: pd.DataFrame, name: str) -> None:
    """Check a table against its schema.

    :param df: The table
    :param name: The schema name, one of ``sweep``, ``fig2``, ``fig3``, or ``bounds``
    :raises SchemaError: if the columns differ from the schema or a numeric value is not finite
    """
    expected = TABLE_SCHEMAS[name]
    if tuple(df.columns) != expected:
        raise SchemaError(f"{name} table has columns {list(df.columns)}, expected {list(expected)}")
    for column in expected:
        if column in TEXT_COLUMNS or df.empty:
            continue
        if not pd.api.types.is_numeric_dtype(df[column]):
            raise SchemaError(f"{name} table has non-numeric values in column {column}")
        if not np.all(np.isfinite(df[column].to_numpy(dtype=float))):
            raise SchemaError(f"{name} table has non-finite values in column {column}")


def write_table(df: pd.DataFrame, path: Path, name: str) -> Path:
    """Write a table as CSV and check the written file against its schema.

    :param df: The table
    :param path: The output path
    :param name: The schema name
    :returns: The output path
    """
    validate_table(df, name)
    df.to_csv(path, index=False, float_format="%.17g", lineterminator="\n", encoding="utf-8")
    validate_table(pd.read_csv(path, encoding="utf-8"), name)
    return path


def validate_manifest(manifest: Mapping[str, Any]) -> None:
    """Check a run manifest.

    :param manifest: The parsed manifest
    :raises SchemaError: if a key is missing or the schema version is not supported
    """
    missing = [key for key in MANIFEST_KEYS if key not in manifest]
    if missing:
        raise SchemaError(f"manifest is missing {missing}")
    if manifest["schema_version"] != SCHEMA_VERSION:
        raise SchemaError(
            f"manifest has schema version {manifest['schema_version']!r}, "
            f"expected {SCHEMA_VERSION!r}"
        )


def _versions() -> Dict[str, str]:
    return {
        "qdiscord": get_version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
    }


@dataclass
class SweepResult:
    """The outcome of :func:`run_sweep`."""

    rows: List[SweepRow]
    failures: List[Dict[str, Any]]
    manifest: Dict[str, Any]
    output_dir: Path


def run_sweep(
    cfg: SweepConfig,
    *,
    workers: Optional[int] = None,
    force: bool = False,
    progress: bool = True,
) -> SweepResult:
    """Run all cells of a sweep and write the tables.

    :param cfg: The configuration
    :param workers: The number of threads running cells. Looked up with
        :func:`qdiscord.config_api.get_workers` if not given.
    :param force: Recompute cached cells
    :param progress: Show a progress bar
    :returns: The aggregated rows, failed cells, and the manifest
    """
    start = time.perf_counter()
    workers = get_workers(workers)
    output_dir = cfg.get_output_dir()
    key = config_hash(cfg.to_json())
    cells_dir = output_dir / "cells" / key
    tasks = [(r, seed) for r in cfg.r_values for seed in cfg.seeds]

    def _run(task: Tuple[float, int]):
        r, seed = task
        path = cells_dir / f"r={r!r}_seed={seed}.json"
        cached = path.is_file() and not force

        def _compute() -> Dict[str, Any]:
            return run_cell(cfg, r, seed)

        try:
            record = CachedJSON(path, force=force)(_compute)()
        except CELL_ERRORS as e:
            logger.error("cell r=%s seed=%d failed: %s", r, seed, e)
            return None, {"r": r, "seed": seed, "error": type(e).__name__, "message": str(e)}
        timing = {"r": r, "seed": seed, "elapsed_seconds": record["elapsed_seconds"]}
        return record, {**timing, "cached": cached}

    with ThreadPoolExecutor(max_workers=workers) as executor:
        outcomes = list(
            tqdm(
                executor.map(_run, tasks),
                total=len(tasks),
                desc="sweep",
                unit="cell",
                disable=not progress,
            )
        )

    records = [record for record, _ in outcomes if record is not None]
    failures = [info for record, info in outcomes if record is None]
    timings = [info for record, info in outcomes if record is not None]
    rows = aggregate_cells(records)

    write_table(sweep_table(rows), output_dir / "sweep.csv", "sweep")
    with (output_dir / "sweep.json").open("w", encoding="utf-8") as file:
        json.dump([asdict(row) for row in rows], file, indent=2)
    write_table(fig2_table(rows), output_dir / "fig2.csv", "fig2")
    write_table(fig3_table(rows), output_dir / "fig3.csv", "fig3")

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "format_version": FORMAT_VERSION,
        "config": cfg.to_json(),
        "config_hash": key,
        "versions": _versions(),
        "rng": RNG_ALGORITHM,
        "timings": {
            "total_seconds": time.perf_counter() - start,
            "workers": workers,
            "cells": timings,
        },
        "failures": failures,
        "tables": {
            name: list(columns) for name, columns in TABLE_SCHEMAS.items() if name != "bounds"
        },
        "notes": [STAND_IN_NOTE],
    }
    validate_manifest(manifest)
    with (output_dir / "manifest.json").open("w", encoding="utf-8") as file:
        json.dump(manifest, file, indent=2)
    with (output_dir / "manifest.json").open(encoding="utf-8") as file:
        validate_manifest(json.load(file))

    logger.info(
        "sweep of %d cells finished with %d failures in %s", len(tasks), len(failures), output_dir
    )
    return SweepResult(rows=rows, failures=failures, manifest=manifest, output_dir=output_dir)
