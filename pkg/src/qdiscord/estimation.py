# -*- coding: utf-8 -*-

"""Estimators of the discord from dual-homodyne data.

Two estimators are implemented:

1. :func:`inversion_estimate` inverts the measured squeezed and anti-squeezed
   variances and propagates their uncertainty with a Monte Carlo simulation.
2. :func:`bayesian_estimate` evaluates the posterior of ``(N_s, N_t)`` on a
   grid for each block of shots, with Gaussian priors centered on the
   inversion estimate, and combines the blocks by inverse-variance weighting.

Every estimator is a pure function of the dataset, its parameters, and the
seed. Parallel work units draw from substreams keyed by their index and are
reduced in index order, so results do not depend on the number of workers.
"""

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import logsumexp
from scipy.stats import norm, truncnorm

from .constants import (
    DEFAULT_GRID_POINTS,
    DEFAULT_GRID_WIDTH,
    DEFAULT_MC_TRIALS,
    DEFAULT_N_BLOCKS,
    NEGATIVE_ESTIMATE_TOLERANCE,
)
from .fisher import step_size
from .homodyne import HomodyneDataset, derive_quadratures, pooled_quadratures
from .model import StsParams, discord_closed_form, quadrature_variances
from .utils import (
    DomainError,
    GridCoverageError,
    InconsistentEstimateError,
    RejectionRateError,
    get_rng,
)

__all__ = [
    # Types
    "Method",
    "VarianceEstimate",
    "EstimateRecord",
    "GridSpec",
    "PosteriorGrid",
    "BlockEstimate",
    # Inversion
    "sample_variance",
    "invert_variances",
    "inversion_estimate",
    # Bayes
    "log_likelihood",
    "posterior_grid",
    "bayesian_block_estimate",
    "combine_blocks",
    "bayesian_estimate",
]

logger = logging.getLogger(__name__)

#: Monte Carlo trials per independently seeded substream
MC_CHUNK_SIZE = 65_536
#: Substream identifier of the Monte Carlo trials
MC_STREAM = 2
#: Posterior mass allowed in the outermost cell of a grid axis
COVERAGE_TOLERANCE = 1e-3
#: Prior variances are floored to keep the grid from collapsing to a point
PRIOR_VARIANCE_FLOOR = 1e-20


class Method(enum.Enum):
    """The estimation method."""

    INVERSION = "inversion"
    BAYES = "bayes"


@dataclass(frozen=True)
class VarianceEstimate:
    """An estimated quadrature variance with the variance of the estimate."""

    value: float
    var_of_estimate: float
    n_samples: int

    def __post_init__(self):  # noqa:D105
        expected = 2.0 * self.value**2 / self.n_samples
        if not math.isclose(self.var_of_estimate, expected, rel_tol=1e-12):
            raise ValueError(
                f"var_of_estimate={self.var_of_estimate} but 2 value^2 / n = {expected}"
            )


@dataclass(frozen=True)
class EstimateRecord:
    """The outcome of an estimator."""

    d_hat: float
    var_d: float
    ns_hat: float
    nt_hat: float
    var_ns: float
    var_nt: float
    method: Method
    #: The number of homodyne outcomes spent on the estimate
    resources_m: int

    def __post_init__(self):  # noqa:D105
        for name in ("d_hat", "ns_hat", "nt_hat", "var_ns", "var_nt"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise ValueError(f"{name} must be finite and non-negative, got {value}")
        if not math.isfinite(self.var_d) or self.var_d <= 0.0:
            raise ValueError(f"var_d must be finite and positive, got {self.var_d}")

    def to_json(self) -> Dict[str, Any]:
        """Serialize to a JSON-compatible dictionary."""
        rv = asdict(self)
        rv["method"] = self.method.value
        return rv


def sample_variance(samples: Sequence[float]) -> VarianceEstimate:
    """Estimate the variance of zero-mean quadrature samples.

    The second moment is taken about zero, since the homodyne outcomes of the
    state have zero mean.

    :param samples: At least two samples
    :returns: The mean of the squares, with the variance ``2 value^2 / n`` of the estimate
    :raises DomainError: if fewer than two samples are given or all samples vanish
    """
    arr = np.asarray(samples, dtype=float)
    if arr.size < 2:
        raise DomainError("len(samples)", arr.size, "at least 2 samples")
    value = float(np.mean(arr**2))
    if value <= 0.0:
        raise DomainError("variance", value, "variance > 0, homodyne data can not be noiseless")
    return VarianceEstimate(
        value=value, var_of_estimate=2.0 * value**2 / arr.size, n_samples=arr.size
    )


def _invert(s_sq: np.ndarray, s_asq: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    geometric = np.sqrt(s_sq * s_asq)
    n_t = 0.5 * (geometric - 1.0)
    n_s = 0.5 * ((s_sq + s_asq) / (2.0 * geometric) - 1.0)
    return n_s, n_t


def invert_variances(s_sq: float, s_asq: float) -> StsParams:
    """Invert the squeezed and anti-squeezed variances to effective photon numbers.

    :param s_sq: The squeezed variance
    :param s_asq: The anti-squeezed variance, not smaller than ``s_sq``
    :returns: The photon numbers reproducing both variances
    :raises DomainError: if the variances are not ordered and positive
    :raises InconsistentEstimateError: if a photon number comes out negative
        beyond round-off, i.e., the variances can not come from a squeezed thermal state
    """
    if not 0.0 < s_sq:
        raise DomainError("s_sq", s_sq, "s_sq > 0")
    if s_sq > s_asq:
        raise DomainError("s_sq", s_sq, f"s_sq <= s_asq={s_asq}")
    n_s, n_t = (float(v) for v in _invert(np.asarray(s_sq), np.asarray(s_asq)))
    for name, value in (("N_s", n_s), ("N_t", n_t)):
        if value < -NEGATIVE_ESTIMATE_TOLERANCE:
            raise InconsistentEstimateError(
                f"variances ({s_sq}, {s_asq}) give {name}={value:.3e} < 0, "
                "their product must be at least the vacuum level"
            )
    return StsParams(n_s=max(n_s, 0.0), n_t=max(n_t, 0.0))


def _monte_carlo_chunk(
    index: int,
    size: int,
    seed: int,
    sq: VarianceEstimate,
    asq: VarianceEstimate,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """Draw ``size`` accepted variance pairs from the substream of chunk ``index``."""
    rng = get_rng(seed, MC_STREAM, index)
    sd_sq, sd_asq = math.sqrt(sq.var_of_estimate), math.sqrt(asq.var_of_estimate)
    accepted_sq: List[np.ndarray] = []
    accepted_asq: List[np.ndarray] = []
    rejected = 0
    missing = size
    while missing > 0:
        draw_sq = rng.normal(sq.value, sd_sq, missing)
        draw_asq = rng.normal(asq.value, sd_asq, missing)
        keep = (draw_sq > 0.0) & (draw_asq > 0.0)
        rejected += int(missing - np.count_nonzero(keep))
        accepted_sq.append(draw_sq[keep])
        accepted_asq.append(draw_asq[keep])
        missing -= int(np.count_nonzero(keep))
        if rejected > size:
            break
    return np.concatenate(accepted_sq), np.concatenate(accepted_asq), rejected


def inversion_estimate(
    ds: HomodyneDataset,
    mc_trials: int = DEFAULT_MC_TRIALS,
    seed: int = 0,
    *,
    workers: int = 1,
    max_rejection_rate: float = 0.01,
) -> EstimateRecord:
    """Estimate the discord by inverting the measured variances.

    The squeezed variance is estimated from the ``2 m_q`` samples of
    :math:`Q^{(1)} \\cup Q^{(4)}`, the anti-squeezed from
    :math:`Q^{(2)} \\cup Q^{(3)}`. Uncertainties come from ``mc_trials``
    simulated experiments whose variances are drawn from Gaussians centered
    on the measured ones with variance :math:`2\\sigma^4 / (2 M_q)`.

    A draw whose squeezed variance exceeds the anti-squeezed one is swapped,
    not rejected, because both orderings invert to the same state. Draws with a
    non-positive variance are rejected, and photon numbers below zero are
    projected onto zero.

    :param ds: The dataset
    :param mc_trials: The number of Monte Carlo experiments, at least :math:`10^4`
    :param seed: The seed of the Monte Carlo substreams
    :param workers: The number of threads used for the Monte Carlo chunks
    :param max_rejection_rate: The tolerated fraction of draws with a non-positive variance
    :returns: The means and variances of the simulated estimates, with ``M = 4 m_q``
    :raises DomainError: if ``mc_trials`` is too small
    :raises RejectionRateError: if too many draws had to be rejected
    """
    if mc_trials < 10_000:
        raise DomainError("mc_trials", mc_trials, "mc_trials >= 10^4")
    sq_samples, asq_samples = pooled_quadratures(ds)
    sq, asq = sample_variance(sq_samples), sample_variance(asq_samples)
    if sq.value > asq.value:
        # the inversion is symmetric in the two variances, only the labels swap
        logger.warning(
            "squeezed variance %.6g exceeds anti-squeezed %.6g, swapping", sq.value, asq.value
        )
        sq, asq = asq, sq

    n_chunks = math.ceil(mc_trials / MC_CHUNK_SIZE)
    sizes = [min(MC_CHUNK_SIZE, mc_trials - index * MC_CHUNK_SIZE) for index in range(n_chunks)]

    def _run(index: int):
        return _monte_carlo_chunk(index, sizes[index], seed, sq, asq)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            chunks = list(executor.map(_run, range(n_chunks)))
    else:
        chunks = [_run(index) for index in range(n_chunks)]

    rejected = sum(chunk[2] for chunk in chunks)
    if rejected > max_rejection_rate * mc_trials:
        raise RejectionRateError(rejected, mc_trials, max_rejection_rate)
    draw_a = np.concatenate([chunk[0] for chunk in chunks])
    draw_b = np.concatenate([chunk[1] for chunk in chunks])
    # a misordered draw inverts to the same state as its swapped pair
    n_s, n_t = _invert(np.minimum(draw_a, draw_b), np.maximum(draw_a, draw_b))
    projected = int(np.count_nonzero((n_s < 0.0) | (n_t < 0.0)))
    if projected:
        logger.warning("projected %d of %d Monte Carlo draws onto N >= 0", projected, mc_trials)
    n_s, n_t = np.maximum(n_s, 0.0), np.maximum(n_t, 0.0)
    d = np.maximum(discord_closed_form(n_s, n_t), 0.0)

    rv = EstimateRecord(
        d_hat=float(np.mean(d)),
        var_d=float(np.var(d, ddof=1)),
        ns_hat=float(np.mean(n_s)),
        nt_hat=float(np.mean(n_t)),
        var_ns=float(np.var(n_s, ddof=1)),
        var_nt=float(np.var(n_t, ddof=1)),
        method=Method.INVERSION,
        resources_m=4 * ds.m_q,
    )
    logger.info(
        "inversion estimate D=%.6g +/- %.2g (M=%d)", rv.d_hat, math.sqrt(rv.var_d), rv.resources_m
    )
    return rv


def log_likelihood(channels: Sequence[Sequence[float]], p: StsParams) -> float:
    """Calculate the log-likelihood of quadrature outcomes.

    :param channels: The outcomes of :math:`Q^{(1)}, Q^{(2)}, Q^{(3)}, Q^{(4)}`.
        Channels 1 and 4 are squeezed, channels 2 and 3 anti-squeezed.
    :param p: The effective photon numbers
    :returns: The sum of the Gaussian log-densities of all outcomes
    """
    if len(channels) != 4:
        raise ValueError(f"expected 4 channels, got {len(channels)}")
    sigma2_sq, sigma2_asq = quadrature_variances(p)
    sd_sq, sd_asq = math.sqrt(sigma2_sq), math.sqrt(sigma2_asq)
    return float(
        sum(
            np.sum(norm.logpdf(np.asarray(q, dtype=float), scale=scale))
            for q, scale in zip(channels, (sd_sq, sd_asq, sd_asq, sd_sq))
        )
    )


@dataclass(frozen=True)
class GridSpec:
    """The posterior grid: points per axis and half-width in prior standard deviations."""

    points: int = DEFAULT_GRID_POINTS
    width: float = DEFAULT_GRID_WIDTH

    def widened(self) -> "GridSpec":
        """Get a grid twice as wide with the same number of points."""
        return GridSpec(points=self.points, width=2.0 * self.width)


@dataclass(frozen=True)
class PosteriorGrid:
    """The normalized log-posterior of ``(N_s, N_t)`` on a rectangular grid."""

    ns_axis: np.ndarray
    nt_axis: np.ndarray
    #: Log-density, indexed as ``[n_s, n_t]``
    log_post: np.ndarray
    #: Log of the evidence :math:`\\mathcal{N}`
    normalizer: float

    def density(self) -> np.ndarray:
        """Get the normalized posterior density on the grid."""
        return np.exp(self.log_post)

    def total(self) -> float:
        """Integrate the density over the grid with the trapezoidal rule."""
        return float(trapezoid(trapezoid(self.density(), self.nt_axis, axis=1), self.ns_axis))

    def moments(self) -> Tuple[float, float, float, float, float]:
        """Get the posterior means, variances, and covariance.

        :returns: A tuple of the mean and variance of ``N_s``, the mean and variance of
            ``N_t``, and their covariance
        """
        density = self.density()
        ns, nt = self.ns_axis[:, None], self.nt_axis[None, :]

        def _integrate(values: np.ndarray) -> float:
            return float(trapezoid(trapezoid(values * density, self.nt_axis, axis=1), self.ns_axis))

        mean_s, mean_t = _integrate(ns), _integrate(nt)
        var_s = _integrate((ns - mean_s) ** 2)
        var_t = _integrate((nt - mean_t) ** 2)
        cov = _integrate((ns - mean_s) * (nt - mean_t))
        return mean_s, var_s, mean_t, var_t, cov


@dataclass(frozen=True)
class BlockEstimate:
    """Posterior moments of one block."""

    ns: float
    var_ns: float
    nt: float
    var_nt: float
    cov: float = 0.0


def _axis(mean: float, var: float, grid_spec: GridSpec) -> np.ndarray:
    half_width = grid_spec.width * math.sqrt(var)
    return np.linspace(max(0.0, mean - half_width), mean + half_width, grid_spec.points)


def _trapezoid_log_weights(axis: np.ndarray) -> np.ndarray:
    weights = np.empty_like(axis)
    steps = np.diff(axis)
    weights[0], weights[-1] = steps[0] / 2.0, steps[-1] / 2.0
    weights[1:-1] = (steps[:-1] + steps[1:]) / 2.0
    return np.log(weights)


def _log_prior(axis: np.ndarray, mean: float, var: float) -> np.ndarray:
    scale = math.sqrt(var)
    return truncnorm.logpdf(axis, (0.0 - mean) / scale, np.inf, loc=mean, scale=scale)


def _sufficient_statistics(channels: Sequence[Sequence[float]]) -> Tuple[int, float, int, float]:
    q1, q2, q3, q4 = (np.asarray(q, dtype=float) for q in channels)
    n_sq, n_asq = q1.size + q4.size, q2.size + q3.size
    return n_sq, float(np.sum(q1**2) + np.sum(q4**2)), n_asq, float(np.sum(q2**2) + np.sum(q3**2))


def posterior_grid(
    channels: Sequence[Sequence[float]],
    prior_ns: Tuple[float, float],
    prior_nt: Tuple[float, float],
    grid_spec: GridSpec = GridSpec(),
) -> PosteriorGrid:
    """Evaluate the posterior of ``(N_s, N_t)`` on a grid.

    The prior is a product of Gaussians truncated to non-negative photon
    numbers. The likelihood depends on the data only through the number of
    squeezed and anti-squeezed outcomes and their sums of squares, and the
    whole computation stays in the log domain.

    :param channels: The outcomes of the four quadrature combinations
    :param prior_ns: The mean and variance of the prior on ``N_s``
    :param prior_nt: The mean and variance of the prior on ``N_t``
    :param grid_spec: The grid
    :returns: The normalized posterior
    """
    for name, (_, var) in (("prior_ns", prior_ns), ("prior_nt", prior_nt)):
        if not var > 0.0:
            raise DomainError(f"{name} variance", var, "variance > 0")
    ns_axis = _axis(*prior_ns, grid_spec)
    nt_axis = _axis(*prior_nt, grid_spec)
    n_sq, ss_sq, n_asq, ss_asq = _sufficient_statistics(channels)

    ns, nt = ns_axis[:, None], nt_axis[None, :]
    thermal = 1.0 + 2.0 * nt
    anti = (1.0 + 2.0 * ns + 2.0 * np.sqrt(ns * (1.0 + ns))) * thermal
    squeezed = thermal**2 / anti
    log_likelihood_grid = -0.5 * (
        n_sq * np.log(2.0 * np.pi * squeezed)
        + ss_sq / squeezed
        + n_asq * np.log(2.0 * np.pi * anti)
        + ss_asq / anti
    )
    log_post = (
        log_likelihood_grid
        + _log_prior(ns_axis, *prior_ns)[:, None]
        + _log_prior(nt_axis, *prior_nt)[None, :]
    )
    log_weights = (
        _trapezoid_log_weights(ns_axis)[:, None] + _trapezoid_log_weights(nt_axis)[None, :]
    )
    normalizer = float(logsumexp(log_post + log_weights))
    return PosteriorGrid(
        ns_axis=ns_axis, nt_axis=nt_axis, log_post=log_post - normalizer, normalizer=normalizer
    )


def _check_coverage(grid: PosteriorGrid) -> None:
    density = grid.density()
    marginals = (
        ("n_s", grid.ns_axis, trapezoid(density, grid.nt_axis, axis=1)),
        ("n_t", grid.nt_axis, trapezoid(density, grid.ns_axis, axis=0)),
    )
    for name, axis, marginal in marginals:
        edges = [trapezoid(marginal[-2:], axis[-2:])]
        if axis[0] > 0.0:  # the boundary at zero is physical, not a truncation of the grid
            edges.append(trapezoid(marginal[:2], axis[:2]))
        mass = float(max(edges))
        if mass > COVERAGE_TOLERANCE:
            raise GridCoverageError(name, mass)


def bayesian_block_estimate(
    block: Sequence[Sequence[float]],
    prior_ns: Tuple[float, float],
    prior_nt: Tuple[float, float],
    grid_spec: GridSpec = GridSpec(),
) -> BlockEstimate:
    """Estimate ``(N_s, N_t)`` from one block with the posterior mean.

    :param block: The outcomes of the four quadrature combinations, with equal counts
    :param prior_ns: The mean and variance of the prior on ``N_s``
    :param prior_nt: The mean and variance of the prior on ``N_t``
    :param grid_spec: The grid
    :returns: The posterior means, variances, and covariance
    :raises GridCoverageError: if the posterior reaches the edge of the grid
    """
    sizes = {len(q) for q in block}
    if len(sizes) != 1:
        raise ValueError(f"channels of a block must have equal lengths, got {sorted(sizes)}")
    grid = posterior_grid(block, prior_ns, prior_nt, grid_spec)
    _check_coverage(grid)
    mean_s, var_s, mean_t, var_t, cov = grid.moments()
    return BlockEstimate(ns=mean_s, var_ns=var_s, nt=mean_t, var_nt=var_t, cov=cov)


def combine_blocks(estimates: Sequence[BlockEstimate]) -> BlockEstimate:
    """Combine block estimates weighted by their inverse variances.

    :param estimates: The block estimates, with positive variances
    :returns: The weighted means with variances :math:`1 / \\sum_b \\sigma_b^{-2}`
    :raises DomainError: if a block has a vanishing variance
    """
    if not estimates:
        raise ValueError("no block estimates to combine")
    var_ns = np.array([e.var_ns for e in estimates])
    var_nt = np.array([e.var_nt for e in estimates])
    if np.any(var_ns <= 0.0) or np.any(var_nt <= 0.0):
        raise DomainError("block variance", float(min(var_ns.min(), var_nt.min())), "variance > 0")
    w_s, w_t = 1.0 / var_ns, 1.0 / var_nt
    ns = float(np.sum(w_s * [e.ns for e in estimates]) / np.sum(w_s))
    nt = float(np.sum(w_t * [e.nt for e in estimates]) / np.sum(w_t))
    cov = float(np.sum(w_s * w_t * [e.cov for e in estimates]) / (np.sum(w_s) * np.sum(w_t)))
    return BlockEstimate(
        ns=ns,
        var_ns=float(1.0 / np.sum(w_s)),
        nt=nt,
        var_nt=float(1.0 / np.sum(w_t)),
        cov=cov,
    )


def _discord_gradient(n_s: float, n_t: float) -> Tuple[float, float]:
    """Differentiate the discord, one-sided at the boundary of the physical region."""

    def _partial(f, x: float) -> float:
        h = step_size(x)
        if x - h < 0.0:
            return (f(x + h) - f(x)) / h
        return (f(x + h) - f(x - h)) / (2.0 * h)

    d_s = _partial(lambda v: discord_closed_form(v, n_t), n_s)
    d_t = _partial(lambda v: discord_closed_form(n_s, v), n_t)
    return d_s, d_t


def bayesian_estimate(
    ds: HomodyneDataset,
    n_blocks: int = DEFAULT_N_BLOCKS,
    grid_spec: GridSpec = GridSpec(),
    seed: int = 0,
    *,
    mc_trials: int = DEFAULT_MC_TRIALS,
    workers: int = 1,
    prior: Optional[EstimateRecord] = None,
) -> EstimateRecord:
    """Estimate the discord with block-wise Bayesian inference.

    The priors are Gaussians with the means and variances of the inversion
    estimate on the whole dataset. Each of the ``n_blocks`` blocks is
    estimated with the posterior mean, the blocks are combined with
    inverse-variance weights, and the result is propagated to the discord to
    first order. Since the priors use all data, every block costs the whole
    dataset and ``M = n_blocks * 4 m_q``.

    :param ds: The dataset, with ``m_q`` divisible by ``n_blocks``
    :param n_blocks: The number of blocks
    :param grid_spec: The posterior grid
    :param seed: The seed of the inversion estimate used for the priors
    :param mc_trials: The number of Monte Carlo experiments of the inversion estimate
    :param workers: The number of threads used for the blocks
    :param prior: A precomputed inversion estimate on ``ds`` to use for the priors
    :returns: The combined estimate
    :raises DomainError: if ``m_q`` is not divisible by ``n_blocks``
    :raises GridCoverageError: if a block still escapes the grid after widening it once
    """
    if n_blocks < 1 or ds.m_q % n_blocks:
        raise DomainError("n_blocks", n_blocks, f"n_blocks divides m_q={ds.m_q}")
    if prior is None:
        prior = inversion_estimate(ds, mc_trials=mc_trials, seed=seed, workers=workers)
    prior_ns = (prior.ns_hat, max(prior.var_ns, PRIOR_VARIANCE_FLOOR))
    prior_nt = (prior.nt_hat, max(prior.var_nt, PRIOR_VARIANCE_FLOOR))

    quadratures = derive_quadratures(ds)
    size = ds.m_q // n_blocks

    def _block(index: int) -> BlockEstimate:
        block = [q[index * size : (index + 1) * size] for q in quadratures]
        try:
            return bayesian_block_estimate(block, prior_ns, prior_nt, grid_spec)
        except GridCoverageError as e:
            logger.warning("block %d: %s, widening the grid", index, e)
            return bayesian_block_estimate(block, prior_ns, prior_nt, grid_spec.widened())

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            blocks = list(executor.map(_block, range(n_blocks)))
    else:
        blocks = [_block(index) for index in range(n_blocks)]

    combined = combine_blocks(blocks)
    d_s, d_t = _discord_gradient(combined.ns, combined.nt)
    var_d = d_s**2 * combined.var_ns + d_t**2 * combined.var_nt + 2.0 * d_s * d_t * combined.cov
    rv = EstimateRecord(
        d_hat=max(0.0, discord_closed_form(combined.ns, combined.nt)),
        var_d=float(var_d),
        ns_hat=combined.ns,
        nt_hat=combined.nt,
        var_ns=combined.var_ns,
        var_nt=combined.var_nt,
        method=Method.BAYES,
        resources_m=n_blocks * 4 * ds.m_q,
    )
    logger.info(
        "bayesian estimate D=%.6g +/- %.2g (M=%d)", rv.d_hat, math.sqrt(rv.var_d), rv.resources_m
    )
    return rv
