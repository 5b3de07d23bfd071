# -*- coding: utf-8 -*-

"""Version information for qdiscord."""

__all__ = [
    "VERSION",
    "get_version",
]

VERSION = "0.1.0-dev"


def get_version() -> str:
    """Get the qdiscord version string.

    :returns: The version string, e.g., ``0.1.0-dev``
    """
    return VERSION
