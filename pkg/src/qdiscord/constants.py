# -*- coding: utf-8 -*-

"""qdiscord constants."""

from typing import Any

__all__ = [
    "MODULE_NAME",
    "QDISCORD_HOME_ENVVAR",
    "QDISCORD_NAME_ENVVAR",
    "QDISCORD_NAME_DEFAULT",
    "FORMAT_VERSION",
    "RNG_ALGORITHM",
    "DATASET_COLUMNS",
    "SCHEMA_VERSION",
    "RADICAND_TOLERANCE",
    "NEGATIVE_ESTIMATE_TOLERANCE",
    "DEFAULT_GAMMA",
    "DEFAULT_ETA",
    "DEFAULT_M_Q",
    "DEFAULT_N_BLOCKS",
    "DEFAULT_MC_TRIALS",
    "DEFAULT_GRID_POINTS",
    "DEFAULT_GRID_WIDTH",
    "DEFAULT_R_VALUES",
    "JSON",
]

#: Name used for configuration lookup and the default output folder
MODULE_NAME = "qdiscord"

QDISCORD_HOME_ENVVAR = "QDISCORD_HOME"
QDISCORD_NAME_ENVVAR = "QDISCORD_NAME"
QDISCORD_NAME_DEFAULT = ".data"

#: Version of the dataset CSV + JSON sidecar format
FORMAT_VERSION = "1"
#: Identifier of the bit generator used for simulation and Monte Carlo substreams
RNG_ALGORITHM = "numpy.random.Philox"
DATASET_COLUMNS = ("x0", "x1", "p0", "p1")
#: Version of the sweep tables and manifest
SCHEMA_VERSION = "1"

#: Negative radicands above this magnitude signal an invalid parameter combination
RADICAND_TOLERANCE = 1e-12
#: Inverted photon numbers below this value are inconsistent with the model
NEGATIVE_ESTIMATE_TOLERANCE = 1e-9

# Experimental defaults
DEFAULT_GAMMA = 0.73
DEFAULT_ETA = 0.62
DEFAULT_M_Q = 20_000
DEFAULT_N_BLOCKS = 100
DEFAULT_MC_TRIALS = 1_000_000
DEFAULT_GRID_POINTS = 201
DEFAULT_GRID_WIDTH = 6.0
DEFAULT_R_VALUES = tuple(round(0.05 * i, 2) for i in range(1, 21))

JSON = Any
