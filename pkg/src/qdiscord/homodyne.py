# -*- coding: utf-8 -*-

"""Simulation, storage, and preprocessing of dual-homodyne datasets.

A dataset holds ``m_q`` shots of the pair ``(x0, x1)`` and ``m_q`` shots of
the pair ``(p0, p1)`` in shot-noise units (vacuum variance 1). The
correlations follow the convention in which ``(x0 + x1)/sqrt(2)`` and
``(p0 - p1)/sqrt(2)`` are the squeezed combinations.
"""

import json
import logging
import math
import re
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np
import pandas as pd

from .constants import DATASET_COLUMNS, FORMAT_VERSION, RNG_ALGORITHM
from .model import PhysicalParams, StsParams, VacuumUnit, effective_photons, sts_covariance
from .utils import DomainError, FormatVersionError, MalformedRowError, get_rng, mkdir

__all__ = [
    # Types
    "DatasetMeta",
    "HomodyneDataset",
    "Quadratures",
    # Simulation
    "simulate_dataset",
    "simulate_physical",
    # Preprocessing
    "derive_quadratures",
    "pooled_quadratures",
    # I/O
    "save_dataset",
    "load_dataset",
    "sidecar_path",
]

logger = logging.getLogger(__name__)

#: Shots per independently seeded substream
CHUNK_SIZE = 8192
#: Substream channel identifiers
CHANNEL_X = 0
CHANNEL_P = 1

Quadratures = namedtuple("Quadratures", "q1 q2 q3 q4")


@dataclass(frozen=True)
class DatasetMeta:
    """Metadata stored in the JSON sidecar of a dataset."""

    #: How the data was produced, e.g., ``{"kind": "sts", "n_s": 1.0, "n_t": 0.5, ...}``
    generator: Dict[str, Any]
    seed: int
    m_q: int
    format_version: str = FORMAT_VERSION

    def to_json(self) -> Dict[str, Any]:
        """Serialize to a JSON-compatible dictionary."""
        return {
            "format_version": self.format_version,
            "seed": self.seed,
            "m_q": self.m_q,
            "generator": self.generator,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "DatasetMeta":
        """Deserialize from a dictionary written by :meth:`to_json`.

        :param data: The parsed sidecar
        :returns: The metadata
        """
        return cls(
            generator=dict(data["generator"]),
            seed=int(data["seed"]),
            m_q=int(data["m_q"]),
            format_version=str(data["format_version"]),
        )


@dataclass(frozen=True)
class HomodyneDataset:
    """Shots of the two quadrature pairs measured by the homodyne detectors."""

    #: Array of shape ``(m_q, 2)`` with the ``(x0, x1)`` pairs
    shots_x: np.ndarray
    #: Array of shape ``(m_q, 2)`` with the ``(p0, p1)`` pairs
    shots_p: np.ndarray
    meta: DatasetMeta

    def __post_init__(self):  # noqa:D105
        for name in ("shots_x", "shots_p"):
            value = np.asarray(getattr(self, name), dtype=float)
            if value.ndim != 2 or value.shape[1] != 2:
                raise ValueError(f"{name} must have shape (m_q, 2), got {value.shape}")
            if value.shape[0] != self.meta.m_q:
                raise ValueError(f"{name} has {value.shape[0]} shots, expected m_q={self.meta.m_q}")
            if not np.all(np.isfinite(value)):
                raise ValueError(f"{name} contains non-finite samples")
            object.__setattr__(self, name, value)

    @property
    def m_q(self) -> int:
        """Get the number of shots per quadrature."""
        return self.meta.m_q

    def __eq__(self, other: object) -> bool:  # noqa:D105
        if not isinstance(other, HomodyneDataset):
            return NotImplemented
        return (
            self.meta == other.meta
            and np.array_equal(self.shots_x, other.shots_x)
            and np.array_equal(self.shots_p, other.shots_p)
        )


def _draw_pairs(
    cholesky: np.ndarray, m_q: int, seed: int, channel: int, workers: int
) -> np.ndarray:
    n_chunks = math.ceil(m_q / CHUNK_SIZE)

    def _chunk(index: int) -> np.ndarray:
        size = min(CHUNK_SIZE, m_q - index * CHUNK_SIZE)
        z = get_rng(seed, channel, index).standard_normal((size, 2))
        return z @ cholesky.T

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            chunks = list(executor.map(_chunk, range(n_chunks)))
    else:
        chunks = [_chunk(index) for index in range(n_chunks)]
    return np.concatenate(chunks, axis=0)


def _simulate(
    p: StsParams, m_q: int, seed: int, generator: Dict[str, Any], workers: int
) -> HomodyneDataset:
    if m_q < 2:
        raise DomainError("m_q", m_q, "m_q >= 2")
    cm = sts_covariance(p, VacuumUnit.ONE)
    # Cov(x0, x1) = -c and Cov(p0, p1) = +c make Q1 and Q4 the squeezed combinations
    cholesky_x = np.linalg.cholesky(np.array([[cm.a, -cm.c], [-cm.c, cm.a]]))
    cholesky_p = np.linalg.cholesky(np.array([[cm.a, cm.c], [cm.c, cm.a]]))
    meta = DatasetMeta(generator={**generator, "rng": RNG_ALGORITHM}, seed=seed, m_q=m_q)
    logger.debug("simulating %d shots per quadrature pair with seed %d", m_q, seed)
    return HomodyneDataset(
        shots_x=_draw_pairs(cholesky_x, m_q, seed, CHANNEL_X, workers),
        shots_p=_draw_pairs(cholesky_p, m_q, seed, CHANNEL_P, workers),
        meta=meta,
    )


def simulate_dataset(p: StsParams, m_q: int, seed: int, workers: int = 1) -> HomodyneDataset:
    """Simulate a dual-homodyne dataset of a squeezed thermal state.

    :param p: The effective photon numbers of the state
    :param m_q: The number of shots per quadrature pair, at least 2
    :param seed: The seed. Each ``CHUNK_SIZE`` block of shots of each pair is drawn
        from its own substream, so the result does not depend on ``workers``.
    :param workers: The number of threads used to draw the chunks
    :returns: A dataset
    :raises DomainError: if ``m_q`` is smaller than 2
    """
    return _simulate(p, m_q, seed, {"kind": "sts", "n_s": p.n_s, "n_t": p.n_t}, workers)


def simulate_physical(q: PhysicalParams, m_q: int, seed: int, workers: int = 1) -> HomodyneDataset:
    """Simulate a dual-homodyne dataset from the physical parameters of the amplifier.

    :param q: The physical parameters
    :param m_q: The number of shots per quadrature pair, at least 2
    :param seed: The seed
    :param workers: The number of threads used to draw the chunks
    :returns: A dataset whose metadata records the physical parameters
    """
    p = effective_photons(q)
    generator = {
        "kind": "physical",
        "r": q.r,
        "gamma": q.gamma,
        "eta": q.eta,
        "n_s": p.n_s,
        "n_t": p.n_t,
    }
    return _simulate(p, m_q, seed, generator, workers)


def derive_quadratures(ds: HomodyneDataset) -> Quadratures:
    """Calculate the four joint quadrature combinations of each shot.

    :param ds: A dataset
    :returns: :math:`Q^{(1/2)} = (x_0 \\pm x_1)/\\sqrt{2}` and
        :math:`Q^{(3/4)} = (p_0 \\pm p_1)/\\sqrt{2}`
    """
    x0, x1 = ds.shots_x[:, 0], ds.shots_x[:, 1]
    p0, p1 = ds.shots_p[:, 0], ds.shots_p[:, 1]
    sqrt2 = math.sqrt(2.0)
    return Quadratures(
        q1=(x0 + x1) / sqrt2,
        q2=(x0 - x1) / sqrt2,
        q3=(p0 + p1) / sqrt2,
        q4=(p0 - p1) / sqrt2,
    )


def pooled_quadratures(ds: HomodyneDataset) -> Tuple[np.ndarray, np.ndarray]:
    """Pool the squeezed and the anti-squeezed combinations.

    :param ds: A dataset
    :returns: The ``2 m_q`` squeezed samples :math:`Q^{(1)} \\cup Q^{(4)}` and the ``2 m_q``
        anti-squeezed samples :math:`Q^{(2)} \\cup Q^{(3)}`
    """
    q = derive_quadratures(ds)
    return np.concatenate([q.q1, q.q4]), np.concatenate([q.q2, q.q3])


def sidecar_path(path: Union[str, Path]) -> Path:
    """Get the path of the JSON sidecar of a dataset file.

    :param path: The path to the dataset CSV, e.g., ``run/dataset.csv``
    :returns: The sidecar path, e.g., ``run/dataset.meta.json``
    """
    path = Path(path)
    return path.with_name(f"{path.stem}.meta.json")


def save_dataset(ds: HomodyneDataset, path: Union[str, Path]) -> Path:
    """Write a dataset as CSV with a JSON sidecar.

    :param ds: The dataset
    :param path: The path to the CSV file. Parent directories are created.
    :returns: The path to the sidecar file
    """
    path = Path(path)
    mkdir(path.parent)
    df = pd.DataFrame(np.hstack([ds.shots_x, ds.shots_p]), columns=list(DATASET_COLUMNS))
    df.to_csv(path, index=False, float_format="%.17g", lineterminator="\n", encoding="utf-8")
    rv = sidecar_path(path)
    with rv.open("w", encoding="utf-8") as file:
        json.dump(ds.meta.to_json(), file, indent=2)
    logger.info("wrote %d shots to %s", ds.m_q, path)
    return rv


def _parse_rows(path: Path, values: np.ndarray) -> np.ndarray:
    try:
        rv = values.astype(float)
    except ValueError:
        rv = None
    if rv is not None and np.all(np.isfinite(rv)):
        return rv
    for index, row in enumerate(values, start=1):
        try:
            parsed = [float(cell) for cell in row]
        except ValueError:
            raise MalformedRowError(path, index, f"non-numeric cell in {list(row)}") from None
        if not all(math.isfinite(value) for value in parsed):
            raise MalformedRowError(path, index, f"non-finite cell in {list(row)}")
    raise AssertionError("unreachable")  # pragma: no cover


def load_dataset(path: Union[str, Path]) -> HomodyneDataset:
    """Read a dataset written by :func:`save_dataset`.

    :param path: The path to the CSV file. The sidecar must be next to it.
    :returns: The dataset
    :raises FormatVersionError: if the sidecar declares another format version
    :raises MalformedRowError: if a row can not be parsed, naming its 1-based index
    """
    path = Path(path)
    meta_path = sidecar_path(path)
    with meta_path.open(encoding="utf-8") as file:
        meta = DatasetMeta.from_json(json.load(file))
    if meta.format_version != FORMAT_VERSION:
        raise FormatVersionError(meta_path, meta.format_version, FORMAT_VERSION)

    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        row = int(match.group(1)) - 1 if match else 0
        raise MalformedRowError(path, row, "wrong number of fields") from e
    if tuple(df.columns) != DATASET_COLUMNS:
        raise MalformedRowError(path, 0, f"header {list(df.columns)} != {list(DATASET_COLUMNS)}")
    if len(df.index) != meta.m_q:
        raise MalformedRowError(
            path, len(df.index), f"found {len(df.index)} rows, metadata declares m_q={meta.m_q}"
        )

    values = _parse_rows(path, df.to_numpy(dtype=str))
    return HomodyneDataset(shots_x=values[:, :2], shots_p=values[:, 2:], meta=meta)
