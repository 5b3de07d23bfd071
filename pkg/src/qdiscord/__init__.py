# -*- coding: utf-8 -*-

"""qdiscord: Estimate the Gaussian discord of squeezed thermal states from dual-homodyne data."""

from .config_api import get_config, write_config  # noqa
from .estimation import (  # noqa
    EstimateRecord,
    GridSpec,
    Method,
    bayesian_estimate,
    inversion_estimate,
)
from .fisher import InfoKind, crb_discord, noise_ratio_db  # noqa
from .homodyne import (  # noqa
    HomodyneDataset,
    load_dataset,
    save_dataset,
    simulate_dataset,
    simulate_physical,
)
from .model import (  # noqa
    PhysicalParams,
    StsParams,
    discord_physical,
    effective_photons,
    sts_discord,
)
from .sweep import SweepConfig, run_sweep  # noqa
from .version import get_version  # noqa
