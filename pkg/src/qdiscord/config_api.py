# -*- coding: utf-8 -*-

"""Configuration handling.

A setting such as the homodyne efficiency of a sweep is resolved from, in
order of precedence:

1. a value given explicitly, e.g. on the command line,
2. the environment variable ``<MODULE>_<KEY>``, e.g. ``QDISCORD_ETA``,
3. the ``[<module>]`` section of the configuration files below
   :func:`get_home`, e.g. ``~/.config/qdiscord.ini``,
4. the default.
"""

import os
from configparser import ConfigParser
from functools import lru_cache
from pathlib import Path
from typing import Any, List, Optional, Type, TypeVar

from .constants import MODULE_NAME
from .utils import getenv_path

__all__ = [
    "get_config",
    "write_config",
    "get_workers",
    "envvar_name",
]

X = TypeVar("X")

CONFIG_NAME_ENVVAR = "QDISCORD_CONFIG_NAME"
CONFIG_HOME_ENVVAR = "QDISCORD_CONFIG_HOME"
CONFIG_NAME_DEFAULT = ".config"

_TRUE = frozenset({"t", "true", "yes", "1"})
_FALSE = frozenset({"f", "false", "no", "0"})


def get_name() -> str:
    """Get the name of the configuration directory below the user's home."""
    return os.getenv(CONFIG_NAME_ENVVAR, default=CONFIG_NAME_DEFAULT)


def get_home(ensure_exists: bool = True) -> Path:
    """Get the configuration directory.

    :param ensure_exists: If true, the directory is created
    :returns: The :data:`CONFIG_HOME_ENVVAR` directory if set, else ``~/<get_name()>``
    """
    return getenv_path(CONFIG_HOME_ENVVAR, Path.home() / get_name(), ensure_exists=ensure_exists)


def _candidate_files(module: str) -> List[Path]:
    directory = get_home()
    # later files override earlier ones
    return [
        directory / "config.ini",
        directory / f"{module}.cfg",
        directory / f"{module}.ini",
    ]


@lru_cache(maxsize=1)
def _get_cfp(module: str) -> ConfigParser:
    cfp = ConfigParser()
    cfp.read(_candidate_files(module))
    return cfp


def envvar_name(module: str, key: str) -> str:
    """Get the environment variable that overrides a configuration key.

    >>> envvar_name("qdiscord", "mc_trials")
    'QDISCORD_MC_TRIALS'
    """
    return f"{module}_{key}".upper()


def get_config(
    module: str,
    key: str,
    *,
    passthrough: Optional[X] = None,
    default: Optional[X] = None,
    dtype: Optional[Type[X]] = None,
    raise_on_missing: bool = False,
):
    """Resolve a configuration value.

    :param module: The section to look in, usually ``qdiscord``
    :param key: The key, e.g. ``gamma`` or ``workers``
    :param passthrough: An explicit value, returned (cast) whenever it is not None
    :param default: Returned when neither the environment nor the files set the key
    :param dtype: One of :class:`int`, :class:`float`, :class:`bool` or :class:`str`.
        Strings are returned unchanged if not given.
    :param raise_on_missing: Raise instead of returning a missing default
    :returns: The resolved value
    :raises ValueError: if the key is missing, no default is given and
        ``raise_on_missing`` is set, or if a string can not be cast
    :raises TypeError: if ``dtype`` is not supported
    """
    if passthrough is not None:
        return _cast(passthrough, dtype)
    rv = os.getenv(envvar_name(module, key))
    if rv is None:
        rv = _get_cfp(module).get(module, key, fallback=None)
    if rv is not None:
        return _cast(rv, dtype)
    if default is None and raise_on_missing:
        raise ValueError(f"{module}/{key} is not configured and has no default")
    return default


def _cast(rv: Any, dtype: Optional[type]) -> Any:
    if not isinstance(rv, str) or dtype in (None, str):
        return rv
    if dtype in (int, float):
        return dtype(rv)
    if dtype is bool:
        lowered = rv.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ValueError(f"not a boolean: {rv}")
    raise TypeError(f"unsupported dtype: {dtype}")


def write_config(module: str, key: str, value: str) -> None:
    """Persist a configuration value to ``<module>.ini`` below :func:`get_home`.

    :param module: The section, usually ``qdiscord``
    :param key: The key
    :param value: The value, as it should appear in the file
    """
    path = get_home() / f"{module}.ini"
    cfp = ConfigParser()
    cfp.read(path)
    if not cfp.has_section(module):
        cfp.add_section(module)
    cfp.set(module, key, value)
    with path.open("w") as file:
        cfp.write(file)
    _get_cfp.cache_clear()


def get_workers(passthrough: Optional[int] = None) -> int:
    """Get the number of worker threads for simulation and estimation.

    :param passthrough: An explicit value, e.g. from ``--workers``
    :returns: At least 1
    """
    workers = get_config(MODULE_NAME, "workers", passthrough=passthrough, default=1, dtype=int)
    return max(1, int(workers))
