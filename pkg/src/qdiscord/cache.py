# -*- coding: utf-8 -*-

"""Utilities for caching the results of sweep cells."""

import functools
import hashlib
import json
import logging
import os
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Callable, Dict, Generic, Mapping, TypeVar, Union, cast

from .utils import mkdir

__all__ = [
    # Classes
    "Cached",
    "CachedJSON",
    # Functions
    "config_hash",
    # Types
    "Getter",
]

logger = logging.getLogger(__name__)

JSONType = Dict[str, Any]

X = TypeVar("X")
Getter = Callable[[], X]


def config_hash(config: Mapping[str, Any], length: int = 12) -> str:
    """Hash a JSON-compatible configuration.

    :param config: The configuration. Key order does not matter.
    :param length: The number of hexadecimal digits to keep
    :returns: A stable prefix of the SHA-256 digest of the canonical JSON dump
    """
    dump = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(dump.encode("utf-8")).hexdigest()[:length]


class Cached(Generic[X], ABC):
    """Caching decorator."""

    def __init__(
        self,
        path: Union[str, Path, os.PathLike],
        force: bool = False,
    ) -> None:
        """Instantiate the decorator.

        :param path: The path to the cache for the file
        :param force: Should a pre-existing file be disregarded/overwritten?
        """
        self.path = Path(path)
        self.force = force

    def __call__(self, func: Getter[X]) -> Getter[X]:
        """Apply this instance as a decorator.

        :param func: The function to wrap
        :return: A wrapped function
        """

        @functools.wraps(func)
        def _wrapped() -> X:
            if self.path.is_file() and not self.force:
                logger.debug("loading cache from %s", self.path)
                return self.load()
            rv = func()
            logger.debug("writing cache to %s", self.path)
            mkdir(self.path.parent)
            # an interrupted write must not leave a truncated cache behind
            tmp = self.path.with_name(f"{self.path.name}.tmp")
            self.dump(rv, tmp)
            tmp.replace(self.path)
            return rv

        return _wrapped

    @abstractmethod
    def load(self) -> X:
        """Load data from the cache (typically by opening a file at the given path)."""

    @abstractmethod
    def dump(self, rv: X, path: Path) -> None:
        """Dump data to a file.

        :param rv: The data to dump
        :param path: The file to write to
        """


class CachedJSON(Cached[JSONType]):
    """Make a function lazily cache its return value as JSON."""

    def load(self) -> JSONType:
        """Load data from the cache as JSON.

        :returns: A python object with JSON-like data from the cache
        """
        with self.path.open(encoding="utf-8") as file:
            return cast(JSONType, json.load(file))

    def dump(self, rv: JSONType, path: Path) -> None:
        """Dump data as JSON.

        :param rv: The JSON data to dump
        :param path: The file to write to
        """
        with path.open("w", encoding="utf-8") as file:
            json.dump(rv, file, indent=2)
