# -*- coding: utf-8 -*-

"""Utilities."""

import contextlib
import logging
import os
import tempfile
from pathlib import Path
from typing import Iterator
from uuid import uuid4

import numpy as np

from .constants import (
    MODULE_NAME,
    QDISCORD_HOME_ENVVAR,
    QDISCORD_NAME_DEFAULT,
    QDISCORD_NAME_ENVVAR,
    RADICAND_TOLERANCE,
)

__all__ = [
    # Exceptions
    "QDiscordError",
    "DomainError",
    "PoleError",
    "SingularJacobianError",
    "MatrixInversionError",
    "BasisMismatchError",
    "InconsistentEstimateError",
    "RejectionRateError",
    "GridCoverageError",
    "MalformedRowError",
    "FormatVersionError",
    "SchemaError",
    # Numerics
    "clamp_radicand",
    "get_rng",
    # Paths and environment
    "mkdir",
    "mock_envvar",
    "mock_home",
    "getenv_path",
    "n",
    "get_name",
    "get_home",
    "get_base",
]

logger = logging.getLogger(__name__)


class QDiscordError(Exception):
    """Base class for errors raised by qdiscord."""


class DomainError(QDiscordError, ValueError):
    """Thrown if a function is evaluated outside of its domain."""

    def __init__(self, name: str, value: object, condition: str):
        """Instantiate the exception.

        :param name: The name of the offending argument
        :param value: The offending value
        :param condition: A human-readable statement of the domain, e.g., ``x >= 1/2``
        """
        self.name = name
        self.value = value
        self.condition = condition

    def __str__(self) -> str:  # noqa:D105
        return f"{self.name}={self.value!r} is outside of the domain ({self.condition})"


class PoleError(QDiscordError, ZeroDivisionError):
    """Thrown if an information matrix entry diverges."""

    def __init__(self, entry: str, reason: str):
        """Instantiate the exception.

        :param entry: The diverging entry, e.g., ``N_t``
        :param reason: What makes it diverge
        """
        self.entry = entry
        self.reason = reason

    def __str__(self) -> str:  # noqa:D105
        return f"information for {self.entry} diverges: {self.reason}"


class SingularJacobianError(QDiscordError, ArithmeticError):
    """Thrown if a change of variables can not be inverted."""

    def __init__(self, slope: float, at: str):
        """Instantiate the exception.

        :param slope: The vanishing derivative
        :param at: A description of the evaluation point
        """
        self.slope = slope
        self.at = at

    def __str__(self) -> str:  # noqa:D105
        return f"dD/dr={self.slope:.3e} vanishes at {self.at}, the transfer matrix is singular"


class MatrixInversionError(QDiscordError, ArithmeticError):
    """Thrown if an information matrix is (numerically) singular."""

    def __init__(self, determinant: float, scale: float):
        """Instantiate the exception.

        :param determinant: The determinant of the matrix
        :param scale: The product of the diagonal entries, used as reference scale
        """
        self.determinant = determinant
        self.scale = scale

    def __str__(self) -> str:  # noqa:D105
        return (
            f"can not invert matrix with determinant {self.determinant:.3e} "
            f"(scale {self.scale:.3e})"
        )


class BasisMismatchError(QDiscordError, ValueError):
    """Thrown if a transfer matrix is applied to a matrix in another parametrization."""

    def __init__(self, expected: str, actual: str):
        """Instantiate the exception.

        :param expected: The basis the transfer matrix starts from
        :param actual: The basis of the information matrix
        """
        self.expected = expected
        self.actual = actual

    def __str__(self) -> str:  # noqa:D105
        return f"transfer matrix starts from {self.expected} but the matrix is in {self.actual}"


class InconsistentEstimateError(QDiscordError, ValueError):
    """Thrown if measured variances can not come from a squeezed thermal state."""


class RejectionRateError(QDiscordError, RuntimeError):
    """Thrown if too many Monte Carlo draws fall outside of the physical region."""

    def __init__(self, rejected: int, total: int, limit: float):
        """Instantiate the exception.

        :param rejected: The number of rejected draws
        :param total: The number of accepted draws requested
        :param limit: The maximum tolerated rejection rate
        """
        self.rejected = rejected
        self.total = total
        self.limit = limit

    def __str__(self) -> str:  # noqa:D105
        rate = self.rejected / max(self.total, 1)
        return f"rejected {self.rejected} of {self.total} draws ({rate:.2%} > {self.limit:.2%})"


class GridCoverageError(QDiscordError, RuntimeError):
    """Thrown if the posterior grid is too narrow for the posterior."""

    def __init__(self, axis: str, mass: float):
        """Instantiate the exception.

        :param axis: The name of the axis, e.g., ``n_s``
        :param mass: The posterior mass found next to the boundary
        """
        self.axis = axis
        self.mass = mass

    def __str__(self) -> str:  # noqa:D105
        return f"posterior mass {self.mass:.2e} at the {self.axis} grid boundary, grid too narrow"


class MalformedRowError(QDiscordError, ValueError):
    """Thrown if a row of a dataset file can not be parsed."""

    def __init__(self, path: Path, row: int, detail: str):
        """Instantiate the exception.

        :param path: The path to the offending file
        :param row: The 1-based index of the offending data row (the header is not counted)
        :param detail: What went wrong
        """
        self.path = path
        self.row = row
        self.detail = detail

    def __str__(self) -> str:  # noqa:D105
        return f"malformed row {self.row} in {self.path}: {self.detail}"


class FormatVersionError(QDiscordError, ValueError):
    """Thrown if a dataset file was written with an unsupported format version."""

    def __init__(self, path: Path, actual: str, expected: str):
        """Instantiate the exception.

        :param path: The path to the sidecar file
        :param actual: The version found in the file
        :param expected: The version supported by this package
        """
        self.path = path
        self.actual = actual
        self.expected = expected

    def __str__(self) -> str:  # noqa:D105
        return f"{self.path} has format version {self.actual!r}, expected {self.expected!r}"


class SchemaError(QDiscordError, ValueError):
    """Thrown if an emitted table does not match its declared schema."""


def clamp_radicand(value: float, what: str, tolerance: float = RADICAND_TOLERANCE) -> float:
    """Clamp small negative round-off to zero.

    :param value: The radicand (or other quantity that has to be non-negative)
    :param what: A name for the quantity, used in the error message
    :param tolerance: The magnitude below zero that is still considered round-off
    :returns: The value, or zero if it was slightly negative
    :raises DomainError: if the value is negative beyond the tolerance
    """
    if value >= 0.0:
        return value
    if value < -tolerance:
        raise DomainError(what, value, f"{what} >= -{tolerance:g}")
    return 0.0


def get_rng(seed: int, *spawn_key: int) -> np.random.Generator:
    """Get an independent random generator for a substream.

    The substream is fully determined by the seed and the spawn key, e.g.,
    ``(channel, chunk)``, so results don't depend on how work is scheduled.

    :param seed: The 64-bit user seed
    :param spawn_key: Integers identifying the substream
    :returns: A generator backed by the counter-based Philox bit generator
    """
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(spawn_key))
    return np.random.Generator(np.random.Philox(sequence))


def mkdir(path: Path, ensure_exists: bool = True) -> None:
    """Make a directory (or parent directory if a file is given) if flagged with ``ensure_exists``.

    :param path: The path to a directory
    :param ensure_exists: Should the directories leading to the path be created if they don't already exist?
    """
    if ensure_exists:
        path.mkdir(exist_ok=True, parents=True)


@contextlib.contextmanager
def mock_envvar(envvar: str, value: str) -> Iterator[None]:
    """Mock the environment variable then delete it after the test is over.

    :param envvar: The environment variable to mock
    :param value: The value to temporarily put in the environment variable
        during this mock.
    :yield: None, since this just mocks the environment variable for the
        time being.
    """
    original_value = os.environ.get(envvar)
    os.environ[envvar] = value
    try:
        yield
    finally:
        if original_value is None:
            del os.environ[envvar]
        else:
            os.environ[envvar] = original_value


@contextlib.contextmanager
def mock_home() -> Iterator[Path]:
    """Mock the qdiscord home environment variable, yields the directory name.

    :yield: The path to the temporary directory.
    """
    with tempfile.TemporaryDirectory() as directory:
        with mock_envvar(QDISCORD_HOME_ENVVAR, directory):
            yield Path(directory)


def getenv_path(envvar: str, default: Path, ensure_exists: bool = True) -> Path:
    """Get an environment variable representing a path, or use the default.

    :param envvar: The environmental variable name to check
    :param default: The default path to return if the environmental variable is not set
    :param ensure_exists: Should the directories leading to the path be created if they don't already exist?
    :return: A path either specified by the environmental variable or by the default.
    """
    rv = Path(os.getenv(envvar, default=default))
    mkdir(rv, ensure_exists=ensure_exists)
    return rv


def n() -> str:
    """Get a random string for testing.

    :returns: A random string for testing purposes.
    """
    return str(uuid4())


def get_name() -> str:
    """Get the qdiscord home directory name.

    :returns: The name of the qdiscord home directory, either loaded from
        the :data:`QDISCORD_NAME_ENVVAR` environment variable or given by the default
        value :data:`QDISCORD_NAME_DEFAULT`.
    """
    return os.getenv(QDISCORD_NAME_ENVVAR, default=QDISCORD_NAME_DEFAULT)


def get_home(ensure_exists: bool = True) -> Path:
    """Get the qdiscord home directory.

    :param ensure_exists: If true, ensures the directory is created
    :returns: A path object representing the home directory, as one of:

        1. :data:`QDISCORD_HOME_ENVVAR` environment variable or
        2. The default directory constructed in the user's home directory from what's
           returned by :func:`get_name` and :data:`MODULE_NAME`, e.g., ``~/.data/qdiscord``.
    """
    default = Path.home() / get_name() / MODULE_NAME
    return getenv_path(QDISCORD_HOME_ENVVAR, default, ensure_exists=ensure_exists)


def get_base(*subkeys: str, ensure_exists: bool = True) -> Path:
    """Get an output directory below the qdiscord home directory.

    :param subkeys: A sequence of additional directory names to join, e.g., ``("sweeps", "default")``
    :param ensure_exists: Should all directories be created automatically? Defaults to true.
    :returns: The path to the output directory
    :raises ValueError: if one of the keys is invalid (e.g., has a dot in it)
    """
    for key in subkeys:
        if "." in key:
            raise ValueError(f"The directory name should not have a dot in it: {key}")
    rv = get_home(ensure_exists=ensure_exists).joinpath(*subkeys)
    mkdir(rv, ensure_exists=ensure_exists)
    return rv

