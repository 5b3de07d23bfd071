# -*- coding: utf-8 -*-

"""Quantum and classical Fisher information and Cramér-Rao bounds on the discord.

Information matrices are carried through the chain of parametrizations
``{N_s, N_t} -> {r, gamma} -> {D, gamma}``. A transfer matrix ``B`` stores
:math:`B_{\\mu\\nu} = \\partial\\lambda_\\mu / \\partial\\tilde\\lambda_\\nu`, with
rows indexing the old parameters and columns the new ones, so the
information in the new parametrization is :math:`B^T H B`.
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .model import (
    PhysicalParams,
    StsParams,
    _effective_photons,
    discord_closed_form,
    effective_photons,
)
from .utils import (
    BasisMismatchError,
    DomainError,
    MatrixInversionError,
    PoleError,
    SingularJacobianError,
)

__all__ = [
    # Enums
    "Basis",
    "InfoKind",
    "Quadrature",
    # Types
    "InfoMatrix2",
    "Jacobian2",
    "CrbResult",
    # Information matrices
    "qfi_ns_nt",
    "cfi_quadrature",
    "cfi_combined",
    # Change of variables
    "step_size",
    "jacobian_b12",
    "jacobian_b23",
    "reparametrize",
    "invert_info",
    # Bounds
    "crb_discord",
    "crb_single_parameter",
    "noise_ratio_db",
]

logger = logging.getLogger(__name__)

#: Below this many thermal photons, N_t is treated as exactly known in quantum bounds
POLE_THRESHOLD = 1e-9
#: Maximum relative change of a derivative when the step is halved
STEP_HALVING_TOLERANCE = 1e-4
#: Slopes of the discord in r below this make the {D, gamma} parametrization singular
SLOPE_TOLERANCE = 1e-12
#: Determinants below this (absolute) are not inverted
DETERMINANT_FLOOR = 1e-300
#: Determinants below this fraction of the diagonal product are not inverted
CONDITION_FLOOR = 1e-13


class Basis(enum.Enum):
    """Parametrizations of the state family."""

    NS_NT = ("n_s", "n_t")
    R_GAMMA = ("r", "gamma")
    D_GAMMA = ("d", "gamma")


class InfoKind(enum.Enum):
    """Kinds of information matrices."""

    QUANTUM = "quantum"
    CLASSICAL = "classical"


class Quadrature(enum.Enum):
    """The measured quadrature combination."""

    SQ = "sq"
    ASQ = "asq"


@dataclass(frozen=True)
class InfoMatrix2:
    """A symmetric, positive semi-definite 2x2 information matrix."""

    m: np.ndarray
    basis: Basis
    kind: InfoKind

    def __post_init__(self):  # noqa:D105
        m = np.asarray(self.m, dtype=float)
        if m.shape != (2, 2):
            raise ValueError(f"information matrix must be 2x2, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError(f"information matrix has non-finite entries: {m.tolist()}")
        scale = max(1.0, float(np.max(np.abs(m))))
        if abs(m[0, 1] - m[1, 0]) > 1e-12 * scale:
            raise ValueError(f"information matrix is not symmetric: {m.tolist()}")
        if np.min(np.linalg.eigvalsh(m)) < -1e-10 * scale:
            raise ValueError(f"information matrix is not positive semi-definite: {m.tolist()}")
        object.__setattr__(self, "m", m)


@dataclass(frozen=True)
class Jacobian2:
    """A transfer matrix :math:`B_{\\mu\\nu} = \\partial\\lambda_\\mu / \\partial\\tilde\\lambda_\\nu`."""

    j: np.ndarray
    from_basis: Basis
    to_basis: Basis

    def __post_init__(self):  # noqa:D105
        j = np.asarray(self.j, dtype=float)
        if j.shape != (2, 2) or not np.all(np.isfinite(j)):
            raise ValueError(f"transfer matrix must be a finite 2x2 matrix, got {j.tolist()}")
        object.__setattr__(self, "j", j)


@dataclass(frozen=True)
class CrbResult:
    """A Cramér-Rao bound on the variance of the discord, per shot."""

    #: Lower bound on M times the variance of the discord
    var_bound_per_shot: float
    kind: InfoKind
    at_params: PhysicalParams

    def __post_init__(self):  # noqa:D105
        if not self.var_bound_per_shot > 0.0:
            raise ValueError(f"variance bound must be positive, got {self.var_bound_per_shot}")


def qfi_ns_nt(p: StsParams) -> InfoMatrix2:
    """Calculate the quantum Fisher information matrix for ``{N_s, N_t}``.

    :param p: The effective photon numbers, both strictly positive
    :returns: The diagonal QFI matrix
    :raises PoleError: if either photon number vanishes
    """
    if p.n_s <= 0.0:
        raise PoleError("N_s", "N_s(1 + N_s) = 0")
    if p.n_t <= 0.0:
        raise PoleError("N_t", "N_t(1 + N_t) = 0")
    thermal = 1.0 + 2.0 * p.n_t
    h_ss = thermal**2 / (p.n_s * (1.0 + p.n_s) * (1.0 + 2.0 * p.n_t + 2.0 * p.n_t**2))
    h_tt = 1.0 / (p.n_t * (1.0 + p.n_t))
    return InfoMatrix2(m=np.diag([h_ss, h_tt]), basis=Basis.NS_NT, kind=InfoKind.QUANTUM)


def cfi_quadrature(p: StsParams, which: Quadrature) -> InfoMatrix2:
    """Calculate the Fisher information of homodyne detection of one quadrature combination.

    The outcome is zero-mean Gaussian with variance :math:`\\sigma^2`, so
    :math:`F_{\\mu\\nu} = \\partial_\\mu\\sigma^2 \\, \\partial_\\nu\\sigma^2 / (2\\sigma^4)`.

    :param p: The effective photon numbers, with ``n_s > 0``
    :param which: The squeezed or the anti-squeezed combination
    :returns: The (rank one) Fisher information matrix for ``{N_s, N_t}``
    :raises PoleError: if ``n_s`` vanishes
    """
    if p.n_s <= 0.0:
        raise PoleError("N_s", "the variance is not differentiable at N_s = 0")
    root = math.sqrt(p.n_s * (1.0 + p.n_s))
    thermal = 1.0 + 2.0 * p.n_t
    sign = -1.0 if which is Quadrature.SQ else 1.0
    off_diagonal = sign / (root * thermal)
    m = np.array(
        [
            [1.0 / (2.0 * p.n_s + 2.0 * p.n_s**2), off_diagonal],
            [off_diagonal, 2.0 / thermal**2],
        ]
    )
    return InfoMatrix2(m=m, basis=Basis.NS_NT, kind=InfoKind.CLASSICAL)


def cfi_combined(p: StsParams) -> InfoMatrix2:
    """Calculate the Fisher information when half the shots measure each combination.

    :param p: The effective photon numbers, with ``n_s > 0``
    :returns: The diagonal matrix :math:`(F^{sq} + F^{asq}) / 2`
    """
    m = 0.5 * (cfi_quadrature(p, Quadrature.SQ).m + cfi_quadrature(p, Quadrature.ASQ).m)
    m[0, 1] = m[1, 0] = 0.0  # the two off-diagonal terms are exact opposites
    return InfoMatrix2(m=m, basis=Basis.NS_NT, kind=InfoKind.CLASSICAL)


def step_size(x: float) -> float:
    """Get the central finite-difference step for a parameter value.

    :param x: The value of the parameter
    :returns: ``max(1e-6, 1e-6 * |x|)``
    """
    return max(1e-6, 1e-6 * abs(x))


def _central(f: Callable[[float], np.ndarray], x: float, h: float) -> np.ndarray:
    return (np.asarray(f(x + h)) - np.asarray(f(x - h))) / (2.0 * h)


def _derivative(f: Callable[[float], np.ndarray], x: float, h: float, name: str) -> np.ndarray:
    """Differentiate with Richardson extrapolation of the step-halved central difference."""
    coarse = _central(f, x, h)
    fine = _central(f, x, h / 2.0)
    drift = np.abs(coarse - fine)
    reference = np.maximum(np.abs(fine), 1e-12)
    if np.any(drift > STEP_HALVING_TOLERANCE * reference):
        logger.warning(
            "derivative in %s is not converged at %s=%g (relative drift %.2e)",
            name,
            name,
            x,
            float(np.max(drift / reference)),
        )
    return (4.0 * fine - coarse) / 3.0


def jacobian_b12(q: PhysicalParams, step: Optional[float] = None) -> Jacobian2:
    """Calculate the transfer matrix from ``{N_s, N_t}`` to ``{r, gamma}``.

    :param q: The physical parameters, with ``r > 0``
    :param step: The finite-difference step. Defaults to :func:`step_size` of each parameter.
    :returns: The matrix :math:`\\partial\\{N_s, N_t\\} / \\partial\\{r, \\gamma\\}`
    :raises DomainError: if ``r`` is not positive
    """
    if q.r <= 0.0:
        raise DomainError("r", q.r, "r > 0")

    def _along_r(r: float) -> np.ndarray:
        return np.array(_effective_photons(r, q.gamma, q.eta))

    def _along_gamma(gamma: float) -> np.ndarray:
        return np.array(_effective_photons(q.r, gamma, q.eta))

    d_r = _derivative(_along_r, q.r, step or step_size(q.r), "r")
    d_gamma = _derivative(_along_gamma, q.gamma, step or step_size(q.gamma), "gamma")
    return Jacobian2(
        j=np.column_stack([d_r, d_gamma]), from_basis=Basis.NS_NT, to_basis=Basis.R_GAMMA
    )


def _discord_rg(r: float, gamma: float, eta: float) -> float:
    n_s, n_t = _effective_photons(r, gamma, eta)
    return discord_closed_form(n_s, n_t)


def jacobian_b23(q: PhysicalParams, step: Optional[float] = None) -> Jacobian2:
    """Calculate the transfer matrix from ``{r, gamma}`` to ``{D, gamma}``.

    :param q: The physical parameters
    :param step: The finite-difference step. Defaults to :func:`step_size` of each parameter.
    :returns: The matrix :math:`\\partial\\{r, \\gamma\\} / \\partial\\{D, \\gamma\\}`, whose
        second row is always ``(0, 1)``
    :raises SingularJacobianError: if the discord does not change with ``r``
    """
    if q.r <= 0.0:
        raise SingularJacobianError(0.0, f"r={q.r}")
    d_dr = float(
        _derivative(
            lambda r: np.array(_discord_rg(r, q.gamma, q.eta)), q.r, step or step_size(q.r), "r"
        )
    )
    if abs(d_dr) < SLOPE_TOLERANCE:
        raise SingularJacobianError(d_dr, f"r={q.r}, gamma={q.gamma}, eta={q.eta}")
    d_dgamma = float(
        _derivative(
            lambda gamma: np.array(_discord_rg(q.r, gamma, q.eta)),
            q.gamma,
            step or step_size(q.gamma),
            "gamma",
        )
    )
    j = np.array([[1.0 / d_dr, -d_dgamma / d_dr], [0.0, 1.0]])
    return Jacobian2(j=j, from_basis=Basis.R_GAMMA, to_basis=Basis.D_GAMMA)


def reparametrize(m: InfoMatrix2, b: Jacobian2) -> InfoMatrix2:
    """Express an information matrix in a new parametrization.

    :param m: The information matrix in the old parametrization
    :param b: The transfer matrix starting from the basis of ``m``
    :returns: The congruent matrix :math:`B^T M B`, labelled with the new basis
    :raises BasisMismatchError: if ``b`` doesn't start from the basis of ``m``
    """
    if m.basis is not b.from_basis:
        raise BasisMismatchError(b.from_basis.name, m.basis.name)
    rv = b.j.T @ m.m @ b.j
    return InfoMatrix2(m=0.5 * (rv + rv.T), basis=b.to_basis, kind=m.kind)


def invert_info(m: InfoMatrix2) -> np.ndarray:
    """Invert a 2x2 information matrix with the adjugate formula.

    :param m: The information matrix
    :returns: The inverse matrix
    :raises MatrixInversionError: if the determinant vanishes in absolute terms or
        relative to the product of the diagonal entries
    """
    (a, b), (c, d) = m.m
    determinant = a * d - b * c
    scale = abs(a * d)
    if abs(determinant) < DETERMINANT_FLOOR or abs(determinant) < CONDITION_FLOOR * scale:
        raise MatrixInversionError(determinant, scale)
    return np.array([[d, -b], [-c, a]]) / determinant


def _information(p: StsParams, kind: InfoKind) -> InfoMatrix2:
    if kind is InfoKind.QUANTUM:
        return qfi_ns_nt(p)
    return cfi_combined(p)


def _information_d_gamma(q: PhysicalParams, kind: InfoKind) -> InfoMatrix2:
    p = effective_photons(q)
    h_1 = _information(p, kind)
    h_2 = reparametrize(h_1, jacobian_b12(q))
    return reparametrize(h_2, jacobian_b23(q))


def _pole_bound(p: StsParams) -> float:
    """Bound the discord with N_t exactly known, from the remaining N_s block."""
    if p.n_s <= 0.0:
        raise PoleError("N_s", "N_s(1 + N_s) = 0")
    thermal = 1.0 + 2.0 * p.n_t
    h_ss = thermal**2 / (p.n_s * (1.0 + p.n_s) * (1.0 + 2.0 * p.n_t + 2.0 * p.n_t**2))
    h = min(step_size(p.n_s), 0.5 * p.n_s)
    slope = float(
        _derivative(lambda n_s: np.array(discord_closed_form(n_s, p.n_t)), p.n_s, h, "n_s")
    )
    return slope**2 / h_ss


def crb_discord(q: PhysicalParams, kind: InfoKind) -> CrbResult:
    """Calculate the per-shot Cramér-Rao bound on the discord.

    The information matrix for ``{N_s, N_t}`` is carried to ``{D, gamma}`` and
    the ``(D, D)`` element of its inverse is returned.

    :param q: The physical parameters at which the bound is evaluated, with ``r > 0``
    :param kind: Whether to use the quantum Fisher information or the Fisher
        information of the dual homodyne measurement
    :returns: The bound on ``M * Var(D)``
    """
    if kind is InfoKind.QUANTUM:
        p = effective_photons(q)
        if 0.0 < p.n_s and p.n_t <= POLE_THRESHOLD:
            logger.debug("N_t=%g is below the pole threshold, treating it as known", p.n_t)
            return CrbResult(var_bound_per_shot=_pole_bound(p), kind=kind, at_params=q)
    inverse = invert_info(_information_d_gamma(q, kind))
    return CrbResult(var_bound_per_shot=float(inverse[0, 0]), kind=kind, at_params=q)


def crb_single_parameter(q: PhysicalParams, kind: InfoKind) -> CrbResult:
    """Calculate the per-shot bound on the discord when ``gamma`` is known exactly.

    :param q: The physical parameters, with ``r > 0``
    :param kind: The kind of information
    :returns: The bound :math:`1 / H_{DD}`, never larger than :func:`crb_discord`
    """
    h_3 = _information_d_gamma(q, kind)
    return CrbResult(var_bound_per_shot=1.0 / float(h_3.m[0, 0]), kind=kind, at_params=q)


def noise_ratio_db(var_d: float, m: int, bound: CrbResult) -> float:
    """Calculate the noise ratio :math:`K_M = M \\sigma^2(D) / (F^{-1})_{DD}` in dB.

    :param var_d: The variance of the discord estimator
    :param m: The number of resources spent on the estimate
    :param bound: The per-shot bound to compare against
    :returns: :math:`10 \\log_{10} K_M`, zero for an optimal estimator
    :raises DomainError: on a non-positive variance or resource count
    """
    if not var_d > 0.0:
        raise DomainError("var_d", var_d, "var_d > 0")
    if m < 1:
        raise DomainError("m", m, "m >= 1")
    return 10.0 * math.log10(m * var_d / bound.var_bound_per_shot)
