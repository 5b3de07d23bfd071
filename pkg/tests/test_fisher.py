# -*- coding: utf-8 -*-

"""Tests for Fisher information and Cramér-Rao bounds."""

import math
import unittest

import numpy as np
from scipy import integrate

from qdiscord.fisher import (
    Basis,
    InfoKind,
    InfoMatrix2,
    Quadrature,
    cfi_combined,
    cfi_quadrature,
    crb_discord,
    crb_single_parameter,
    invert_info,
    jacobian_b12,
    jacobian_b23,
    noise_ratio_db,
    qfi_ns_nt,
    reparametrize,
)
from qdiscord.model import (
    PhysicalParams,
    StsParams,
    discord_physical,
    effective_photons,
    quadrature_variances,
)
from qdiscord.utils import (
    BasisMismatchError,
    DomainError,
    MatrixInversionError,
    PoleError,
    QDiscordError,
    SingularJacobianError,
)

GAMMA = 0.73
ETA = 0.62


def _numerical_fisher(p: StsParams, which: Quadrature) -> np.ndarray:
    """Integrate the score products of the homodyne outcome distribution."""
    index = 0 if which is Quadrature.SQ else 1

    def _variance(n_s: float, n_t: float) -> float:
        return quadrature_variances(StsParams(n_s=n_s, n_t=n_t))[index]

    h = 1e-6
    sigma2 = _variance(p.n_s, p.n_t)
    gradient = np.array(
        [
            (_variance(p.n_s + h, p.n_t) - _variance(p.n_s - h, p.n_t)) / (2.0 * h),
            (_variance(p.n_s, p.n_t + h) - _variance(p.n_s, p.n_t - h)) / (2.0 * h),
        ]
    )

    def _integrand(q: float, mu: int, nu: int) -> float:
        density = math.exp(-0.5 * q * q / sigma2) / math.sqrt(2.0 * math.pi * sigma2)
        score = (q * q / sigma2 - 1.0) / (2.0 * sigma2)
        return score**2 * gradient[mu] * gradient[nu] * density

    rv = np.empty((2, 2))
    for mu in range(2):
        for nu in range(2):
            rv[mu, nu], _ = integrate.quad(
                _integrand, -np.inf, np.inf, args=(mu, nu), epsabs=0.0, epsrel=1e-10
            )
    return rv


class TestInformation(unittest.TestCase):
    """Tests for information matrices in the photon number parametrization."""

    def test_qfi_values(self):
        """Test the quantum Fisher information of a reference state."""
        m = qfi_ns_nt(StsParams(n_s=1.0, n_t=0.5)).m
        self.assertAlmostEqual(0.8, m[0, 0], places=12)
        self.assertAlmostEqual(4.0 / 3.0, m[1, 1], places=12)
        self.assertEqual(0.0, m[0, 1])

    def test_qfi_poles(self):
        """Test that the quantum Fisher information diverges at zero photon numbers."""
        with self.assertRaises(PoleError):
            qfi_ns_nt(StsParams(n_s=1.0, n_t=0.0))
        with self.assertRaises(PoleError):
            qfi_ns_nt(StsParams(n_s=0.0, n_t=1.0))

    def test_cfi_numerical(self):
        """Test the Fisher information of each combination against numerical integration."""
        rng = np.random.default_rng(42)
        for n_s, n_t in rng.uniform(0.05, 3.0, size=(20, 2)):
            p = StsParams(n_s=float(n_s), n_t=float(n_t))
            for which in Quadrature:
                with self.subTest(n_s=n_s, n_t=n_t, which=which):
                    np.testing.assert_allclose(
                        _numerical_fisher(p, which),
                        cfi_quadrature(p, which).m,
                        rtol=1e-6,
                    )

    def test_cfi_combined(self):
        """Test that the combined information is diagonal."""
        p = StsParams(n_s=1.0, n_t=0.5)
        m = cfi_combined(p).m
        self.assertEqual(0.0, m[0, 1])
        self.assertEqual(0.0, m[1, 0])
        self.assertAlmostEqual(0.25, m[0, 0], places=12)
        self.assertAlmostEqual(0.5, m[1, 1], places=12)

    def test_quantum_dominates(self):
        """Test that the quantum information exceeds the homodyne information."""
        for n_s in np.logspace(-3, 1, 9):
            for n_t in np.logspace(-3, 1, 9):
                p = StsParams(n_s=float(n_s), n_t=float(n_t))
                with self.subTest(n_s=n_s, n_t=n_t):
                    difference = qfi_ns_nt(p).m - cfi_combined(p).m
                    self.assertGreaterEqual(np.min(np.linalg.eigvalsh(difference)), 0.0)

    def test_invalid_matrix(self):
        """Test that asymmetric or indefinite matrices are rejected."""
        with self.assertRaises(ValueError):
            InfoMatrix2(
                m=np.array([[1.0, 0.5], [0.0, 1.0]]), basis=Basis.NS_NT, kind=InfoKind.QUANTUM
            )
        with self.assertRaises(ValueError):
            InfoMatrix2(
                m=np.array([[1.0, 2.0], [2.0, 1.0]]), basis=Basis.NS_NT, kind=InfoKind.QUANTUM
            )

    def test_invert(self):
        """Test the adjugate inverse."""
        m = InfoMatrix2(
            m=np.array([[2.0, 1.0], [1.0, 3.0]]), basis=Basis.NS_NT, kind=InfoKind.CLASSICAL
        )
        np.testing.assert_allclose(np.linalg.inv(m.m), invert_info(m), rtol=1e-12)
        singular = InfoMatrix2(m=np.ones((2, 2)), basis=Basis.NS_NT, kind=InfoKind.CLASSICAL)
        with self.assertRaises(MatrixInversionError):
            invert_info(singular)


class TestChangeOfVariables(unittest.TestCase):
    """Tests for the transfer matrices."""

    def setUp(self) -> None:
        """Set up the physical parameters."""
        self.q = PhysicalParams(r=0.4, gamma=GAMMA, eta=ETA)

    def test_step_halving(self):
        """Test that the derivatives are stable under halving the step."""
        for jacobian in (jacobian_b12, jacobian_b23):
            with self.subTest(jacobian=jacobian.__name__):
                coarse = jacobian(self.q, step=1e-5).j
                fine = jacobian(self.q, step=5e-6).j
                np.testing.assert_allclose(coarse, fine, rtol=1e-4, atol=1e-12)

    def test_b23_structure(self):
        """Test that gamma is carried through unchanged."""
        j = jacobian_b23(self.q).j
        self.assertEqual(0.0, j[1, 0])
        self.assertEqual(1.0, j[1, 1])
        self.assertGreater(j[0, 0], 0.0)

    def test_b23_singular(self):
        """Test that the discord can not be a coordinate without squeezing."""
        with self.assertRaises(SingularJacobianError):
            jacobian_b23(PhysicalParams(r=0.0, gamma=GAMMA, eta=ETA))
        with self.assertRaises(DomainError):
            jacobian_b12(PhysicalParams(r=0.0, gamma=GAMMA, eta=ETA))

    def test_basis_mismatch(self):
        """Test that transfer matrices must start from the basis of the matrix."""
        h_1 = qfi_ns_nt(StsParams(n_s=0.5, n_t=0.2))
        with self.assertRaises(BasisMismatchError):
            reparametrize(h_1, jacobian_b23(self.q))

    def test_delta_method(self):
        """Test that the discord bound propagates the bound on {r, gamma} to first order."""
        for kind in InfoKind:
            with self.subTest(kind=kind):
                p = effective_photons(self.q)
                h_1 = qfi_ns_nt(p) if kind is InfoKind.QUANTUM else cfi_combined(p)
                h_2 = reparametrize(h_1, jacobian_b12(self.q))
                self.assertIs(Basis.R_GAMMA, h_2.basis)
                j = jacobian_b23(self.q).j
                d_r = 1.0 / j[0, 0]
                gradient = np.array([d_r, -j[0, 1] * d_r])
                expected = float(gradient @ invert_info(h_2) @ gradient)
                self.assertAlmostEqual(
                    1.0, crb_discord(self.q, kind).var_bound_per_shot / expected, places=8
                )


class TestBounds(unittest.TestCase):
    """Tests for the Cramér-Rao bounds on the discord."""

    def test_classical_above_quantum(self):
        """Test that the homodyne bound is never below the quantum bound."""
        for r in np.arange(0.05, 1.0001, 0.05):
            q = PhysicalParams(r=float(r), gamma=GAMMA, eta=ETA)
            with self.subTest(r=r):
                quantum = crb_discord(q, InfoKind.QUANTUM).var_bound_per_shot
                classical = crb_discord(q, InfoKind.CLASSICAL).var_bound_per_shot
                self.assertGreaterEqual(classical, quantum)

    def test_gap_at_small_discord(self):
        """Test that homodyne detection loses about 10 dB at small squeezing."""
        for r in (0.03, 0.04):
            q = PhysicalParams(r=r, gamma=GAMMA, eta=ETA)
            with self.subTest(r=r):
                quantum = crb_discord(q, InfoKind.QUANTUM).var_bound_per_shot
                classical = crb_discord(q, InfoKind.CLASSICAL).var_bound_per_shot
                gap = 10.0 * math.log10(classical / quantum)
                self.assertGreaterEqual(gap, 7.0)
                self.assertLessEqual(gap, 13.0)

    def test_gap_varies_with_discord(self):
        """Test that the gap keeps growing below and shrinks above the window near 10 dB."""
        gaps = {}
        for r in (0.005, 0.1):
            q = PhysicalParams(r=r, gamma=GAMMA, eta=ETA)
            self.assertLess(discord_physical(q), 0.05)
            quantum = crb_discord(q, InfoKind.QUANTUM).var_bound_per_shot
            classical = crb_discord(q, InfoKind.CLASSICAL).var_bound_per_shot
            gaps[r] = 10.0 * math.log10(classical / quantum)
        self.assertGreater(gaps[0.005], 13.0)
        self.assertGreater(gaps[0.1], 4.0)
        self.assertLess(gaps[0.1], 7.0)

    def test_single_parameter(self):
        """Test that knowing gamma can only tighten the bound."""
        q = PhysicalParams(r=0.3, gamma=GAMMA, eta=ETA)
        for kind in InfoKind:
            with self.subTest(kind=kind):
                single = crb_single_parameter(q, kind).var_bound_per_shot
                multi = crb_discord(q, kind).var_bound_per_shot
                self.assertLessEqual(single, multi * (1.0 + 1e-9))

    def test_pole(self):
        """Test that the quantum bound stays finite for a pure state."""
        q = PhysicalParams(r=0.5, gamma=0.0, eta=1.0)
        bound = crb_discord(q, InfoKind.QUANTUM)
        self.assertTrue(math.isfinite(bound.var_bound_per_shot))
        self.assertGreater(bound.var_bound_per_shot, 0.0)
        self.assertIs(InfoKind.QUANTUM, bound.kind)

    def test_no_squeezing(self):
        """Test that the bounds are singular without squeezing."""
        q = PhysicalParams(r=0.0, gamma=GAMMA, eta=ETA)
        for kind in InfoKind:
            with self.subTest(kind=kind), self.assertRaises(QDiscordError):
                crb_discord(q, kind)

    def test_noise_ratio(self):
        """Test the noise ratio in dB."""
        bound = crb_discord(PhysicalParams(r=0.3, gamma=GAMMA, eta=ETA), InfoKind.CLASSICAL)
        m = 80_000
        var = bound.var_bound_per_shot / m
        self.assertAlmostEqual(0.0, noise_ratio_db(var, m, bound), places=10)
        self.assertAlmostEqual(10.0, noise_ratio_db(10.0 * var, m, bound), places=10)
        with self.assertRaises(DomainError):
            noise_ratio_db(0.0, m, bound)
        with self.assertRaises(DomainError):
            noise_ratio_db(1.0, 0, bound)
