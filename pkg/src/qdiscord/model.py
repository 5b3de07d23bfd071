# -*- coding: utf-8 -*-

"""Two-mode squeezed thermal states and their Gaussian quantum discord.

A squeezed thermal state (STS) is identified by the effective number of
squeezing photons :math:`N_s` and thermal photons :math:`N_t`. All
entropies are in nats. The discord is available in three equivalent forms:

1. :func:`discord_closed_form`, the closed form in :math:`(N_s, N_t)` (canonical),
2. :func:`discord_kappa_form`, :math:`h(\\kappa_1/2) - 2h(\\kappa_2) + h(\\kappa_3)`,
3. :func:`cm_discord`, the general formula on the covariance matrix in
   the vacuum-1/2 convention.
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.special import xlogy

from .constants import RADICAND_TOLERANCE
from .utils import DomainError, clamp_radicand

__all__ = [
    # Types
    "StsParams",
    "PhysicalParams",
    "VacuumUnit",
    "CovMatrix2Mode",
    # Functions
    "binary_entropy",
    "discord_closed_form",
    "discord_kappa_form",
    "sts_discord",
    "quadrature_variances",
    "effective_photons",
    "discord_physical",
    "sts_covariance",
    "cm_discord",
]

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

#: Arguments of the binary entropy this far below 1/2 are treated as round-off
ENTROPY_TOLERANCE = 1e-10


@dataclass(frozen=True)
class StsParams:
    """The effective photon numbers of a two-mode squeezed thermal state."""

    #: Effective squeezing photons, :math:`N_s = \\sinh^2 s`
    n_s: float
    #: Effective thermal photons
    n_t: float

    def __post_init__(self):  # noqa:D105
        for name in ("n_s", "n_t"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise DomainError(name, value, f"{name} >= 0 and finite")


@dataclass(frozen=True)
class PhysicalParams:
    """The experimental knobs that determine the state at the detectors."""

    #: Squeezing strength
    r: float
    #: Relative parasite gain, the parasite amplification has strength ``gamma * r``
    gamma: float
    #: Overall homodyne efficiency
    eta: float

    def __post_init__(self):  # noqa:D105
        if not math.isfinite(self.r) or self.r < 0.0:
            raise DomainError("r", self.r, "r >= 0")
        if not math.isfinite(self.gamma) or self.gamma < 0.0:
            raise DomainError("gamma", self.gamma, "gamma >= 0")
        if not math.isfinite(self.eta) or not 0.0 < self.eta <= 1.0:
            raise DomainError("eta", self.eta, "0 < eta <= 1")


class VacuumUnit(enum.Enum):
    """The convention for the variance of the vacuum quadratures."""

    ONE = 1.0
    HALF = 0.5

    @property
    def vacuum_variance(self) -> float:
        """Get the variance of a vacuum quadrature in this convention."""
        return self.value


@dataclass(frozen=True)
class CovMatrix2Mode:
    """A symmetric two-mode covariance matrix with blocks :math:`a 1_2` and :math:`c \\sigma_z`."""

    a: float
    c: float
    vacuum_unit: VacuumUnit = VacuumUnit.ONE

    def __post_init__(self):  # noqa:D105
        v = self.vacuum_unit.vacuum_variance
        if self.c < 0.0:
            raise DomainError("c", self.c, "c >= 0")
        if self.a < v - RADICAND_TOLERANCE:
            raise DomainError("a", self.a, f"a >= {v}")
        if (self.a - self.c) * (self.a + self.c) < v * v - RADICAND_TOLERANCE * max(1.0, self.a**2):
            raise DomainError("a^2 - c^2", self.a**2 - self.c**2, f"a^2 - c^2 >= {v * v}")

    def to_matrix(self) -> np.ndarray:
        """Get the explicit 4x4 matrix in the ``(x0, p0, x1, p1)`` ordering."""
        identity = np.eye(2)
        sigma_z = np.diag([1.0, -1.0])
        return np.block(
            [
                [self.a * identity, self.c * sigma_z],
                [self.c * sigma_z, self.a * identity],
            ]
        )

    def with_unit(self, unit: VacuumUnit) -> "CovMatrix2Mode":
        """Convert to another vacuum-variance convention.

        :param unit: The target convention
        :returns: A covariance matrix with entries rescaled to the target convention
        """
        scale = unit.vacuum_variance / self.vacuum_unit.vacuum_variance
        return CovMatrix2Mode(a=self.a * scale, c=self.c * scale, vacuum_unit=unit)

    def symplectic_eigenvalue(self) -> float:
        """Get the (doubly degenerate) symplectic eigenvalue :math:`\\sqrt{a^2 - c^2}`."""
        return math.sqrt(clamp_radicand((self.a - self.c) * (self.a + self.c), "a^2 - c^2"))


def binary_entropy(x: ArrayLike) -> ArrayLike:
    """Calculate :math:`h(x) = (x + 1/2)\\ln(x + 1/2) - (x - 1/2)\\ln(x - 1/2)`.

    This is the von Neumann entropy of a thermal state whose symplectic
    eigenvalue is ``x`` in the vacuum-1/2 convention. The limit
    :math:`0 \\ln 0 = 0` is used at ``x = 1/2``.

    :param x: A value (or array of values) with ``x >= 1/2``
    :returns: The entropy in nats
    :raises DomainError: if any value is below 1/2 beyond round-off

    >>> round(binary_entropy(1.5), 6)
    1.386294
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.5 - ENTROPY_TOLERANCE) or np.any(np.isnan(arr)):
        bad = arr[(arr < 0.5 - ENTROPY_TOLERANCE) | np.isnan(arr)].flat[0]
        raise DomainError("x", float(bad), "x >= 1/2")
    arr = np.maximum(arr, 0.5)
    rv = xlogy(arr + 0.5, arr + 0.5) - xlogy(arr - 0.5, arr - 0.5)
    if np.ndim(x) == 0:
        return float(rv)
    return rv


def _g(n: ArrayLike) -> ArrayLike:
    """Get the entropy of a thermal state with ``n`` photons, i.e., ``h(n + 1/2)``."""
    return xlogy(1.0 + n, 1.0 + n) - xlogy(n, n)


def discord_closed_form(n_s: ArrayLike, n_t: ArrayLike) -> ArrayLike:
    """Calculate the discord with the closed form in the effective parameters.

    :param n_s: Effective squeezing photons (scalar or array)
    :param n_t: Effective thermal photons (scalar or array, broadcast against ``n_s``)
    :returns: The Gaussian quantum discord in nats
    """
    n_s = np.asarray(n_s, dtype=float)
    n_t = np.asarray(n_t, dtype=float)
    x = n_s + n_t + 2.0 * n_s * n_t
    y = 1.0 + x
    w = n_t * (n_t + 1.0) / y
    z = (n_s + 2.0 * n_s * n_t + (1.0 + n_t) ** 2) / y
    rv = (
        2.0 * xlogy(n_t, n_t)
        - 2.0 * xlogy(n_t + 1.0, n_t + 1.0)
        - xlogy(x, x)
        - xlogy(w, w)
        + xlogy(y, y)
        + xlogy(z, z)
    )
    if rv.ndim == 0:
        return float(rv)
    return rv


def discord_kappa_form(n_s: ArrayLike, n_t: ArrayLike) -> ArrayLike:
    """Calculate the discord as :math:`h(\\kappa_1/2) - 2h(\\kappa_2) + h(\\kappa_3)`.

    :param n_s: Effective squeezing photons (scalar or array)
    :param n_t: Effective thermal photons (scalar or array, broadcast against ``n_s``)
    :returns: The Gaussian quantum discord in nats
    """
    n_s = np.asarray(n_s, dtype=float)
    n_t = np.asarray(n_t, dtype=float)
    kappa_1 = (1.0 + 2.0 * n_s) * (1.0 + 2.0 * n_t)
    kappa_2 = n_t + 0.5
    kappa_3 = (1.0 + n_s + n_t) * (n_t + 0.5) / (1.0 + n_s + n_t + 2.0 * n_s * n_t)
    rv = binary_entropy(kappa_1 / 2.0) - 2.0 * binary_entropy(kappa_2) + binary_entropy(kappa_3)
    if np.ndim(rv) == 0:
        return float(rv)
    return rv


def sts_discord(p: StsParams) -> float:
    """Calculate the Gaussian quantum discord of a squeezed thermal state.

    :param p: The effective photon numbers
    :returns: The discord in nats, zero for :math:`N_s = 0`

    >>> round(sts_discord(StsParams(n_s=1.0, n_t=0.5)), 6)
    0.750257
    """
    return max(0.0, discord_closed_form(p.n_s, p.n_t))


def quadrature_variances(p: StsParams) -> Tuple[float, float]:
    """Calculate the variances of the squeezed and anti-squeezed quadrature combinations.

    Variances are in shot-noise units, i.e., the vacuum has unit variance.

    :param p: The effective photon numbers
    :returns: A pair of the squeezed and the anti-squeezed variance, whose
        product is :math:`(1 + 2N_t)^2`
    """
    root = 2.0 * math.sqrt(p.n_s * (1.0 + p.n_s))
    thermal = 1.0 + 2.0 * p.n_t
    squeezed = 1.0 + 2.0 * p.n_s
    # 1 + 2N_s - root == 1 / (1 + 2N_s + root) avoids the cancellation
    sigma2_asq = (squeezed + root) * thermal
    sigma2_sq = thermal / (squeezed + root)
    return sigma2_sq, sigma2_asq


def _effective_photons(r: float, gamma: float, eta: float) -> Tuple[float, float]:
    """Map the physical parameters to effective photon numbers without validation.

    The expressions are even in ``gamma``, so finite differences may step
    across ``gamma = 0``.
    """
    cosh_r2 = math.cosh(r) ** 2
    sinh_r2 = math.sinh(r) ** 2
    cosh_2rg = math.cosh(2.0 * r * gamma)
    cosh_rg2 = math.cosh(r * gamma) ** 2
    a = 1.0 - eta + eta * cosh_r2 * cosh_2rg + eta * sinh_r2
    b = 1.0 - eta + eta * sinh_r2

    radicand_s = (
        eta**2 * cosh_r2**2 * cosh_2rg**2
        + b**2
        + 2.0 * eta * cosh_r2 * (-2.0 * eta * cosh_rg2**2 * sinh_r2 + cosh_2rg * b)
    )
    if radicand_s <= RADICAND_TOLERANCE:
        raise DomainError("N_s radicand", radicand_s, "radicand > 0")
    n_s = 0.5 * (-1.0 + a / math.sqrt(radicand_s))

    shift = eta * cosh_rg2 * math.sinh(2.0 * r)
    radicand_t = clamp_radicand((a - shift) * (a + shift), "N_t radicand")
    n_t = 0.5 * (-1.0 + math.sqrt(radicand_t))

    return clamp_radicand(n_s, "N_s"), clamp_radicand(n_t, "N_t")


def effective_photons(q: PhysicalParams) -> StsParams:
    """Calculate the effective photon numbers produced by the parametric amplifier.

    :param q: The squeezing strength, the relative parasite gain, and the homodyne efficiency
    :returns: The effective squeezing and thermal photons seen by the detectors
    :raises DomainError: if an intermediate radicand is negative beyond round-off
    """
    n_s, n_t = _effective_photons(q.r, q.gamma, q.eta)
    return StsParams(n_s=n_s, n_t=n_t)


def discord_physical(q: PhysicalParams) -> float:
    """Calculate the discord as a function of the physical parameters.

    :param q: The physical parameters
    :returns: The discord in nats
    """
    return sts_discord(effective_photons(q))


def sts_covariance(p: StsParams, unit: VacuumUnit = VacuumUnit.ONE) -> CovMatrix2Mode:
    """Build the covariance matrix of a squeezed thermal state.

    :param p: The effective photon numbers
    :param unit: The vacuum-variance convention of the result
    :returns: The covariance matrix
    """
    thermal = 1.0 + 2.0 * p.n_t
    a = thermal * (1.0 + 2.0 * p.n_s)
    c = 2.0 * thermal * math.sqrt(p.n_s * (p.n_s + 1.0))
    scale = unit.vacuum_variance
    return CovMatrix2Mode(a=a * scale, c=c * scale, vacuum_unit=unit)


def cm_discord(cm: CovMatrix2Mode) -> float:
    """Calculate the Gaussian discord from the symplectic invariants of a covariance matrix.

    :param cm: A physical covariance matrix in the vacuum-1/2 convention
    :returns: The discord in nats
    :raises DomainError: if the matrix is given in another convention or if
        :math:`\\Delta^2 - 4 I_4` is negative beyond round-off
    """
    if cm.vacuum_unit is not VacuumUnit.HALF:
        raise DomainError("vacuum_unit", cm.vacuum_unit.name, "vacuum_unit = HALF")
    a, b, c = cm.a, cm.a, cm.c  # b = a for the symmetric family
    # I_1 + I_2 + 2 I_3, factored to avoid cancellation
    delta = (a - c) * (a + c) + (b - c) * (b + c)
    i_4 = (a * b - c * c) ** 2
    # Delta^2 - 4 I_4 in factored form, exactly zero for symmetric modes
    discriminant = clamp_radicand(
        (a - b) ** 2 * (a + b - 2.0 * c) * (a + b + 2.0 * c), "Delta^2 - 4 I_4"
    )
    d_minus = math.sqrt(max(0.0, 0.5 * (delta - math.sqrt(discriminant))))
    d_plus = math.sqrt(0.5 * (delta + math.sqrt(discriminant)))
    conditional = (a + 2.0 * math.sqrt(i_4)) / (1.0 + 2.0 * b)
    rv = (
        binary_entropy(b)
        - binary_entropy(d_minus)
        - binary_entropy(d_plus)
        + binary_entropy(conditional)
    )
    return max(0.0, rv)
