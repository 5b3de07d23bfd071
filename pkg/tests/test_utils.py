# -*- coding: utf-8 -*-

"""Tests for utilities."""

import os
import tempfile
import unittest
from pathlib import Path

import numpy as np

from qdiscord.constants import QDISCORD_HOME_ENVVAR
from qdiscord.utils import (
    DomainError,
    GridCoverageError,
    MalformedRowError,
    QDiscordError,
    RejectionRateError,
    clamp_radicand,
    get_base,
    get_home,
    get_rng,
    getenv_path,
    mkdir,
    mock_envvar,
    mock_home,
    n,
)


class TestUtils(unittest.TestCase):
    """Test utility functions."""

    def test_mkdir(self):
        """Test for ensuring a directory."""
        with tempfile.TemporaryDirectory() as directory:
            directory = Path(directory)
            subdirectory = directory / "sd1"
            self.assertFalse(subdirectory.exists())

            mkdir(subdirectory, ensure_exists=False)
            self.assertFalse(subdirectory.exists())

            mkdir(subdirectory, ensure_exists=True)
            self.assertTrue(subdirectory.exists())

    def test_mock_envvar(self):
        """Test that environment variables can be mocked properly."""
        name, value = n(), n()

        self.assertNotIn(name, os.environ)
        with mock_envvar(name, value):
            self.assertIn(name, os.environ)
            self.assertEqual(value, os.getenv(name))
        self.assertNotIn(name, os.environ)

    def test_getenv_path(self):
        """Test that :func:`getenv_path` works properly."""
        envvar = n()

        with tempfile.TemporaryDirectory() as directory:
            directory = Path(directory)
            value = directory / n()
            default = directory / n()

            self.assertEqual(default, getenv_path(envvar, default))
            with mock_envvar(envvar, value.as_posix()):
                self.assertEqual(value, getenv_path(envvar, default))
            # Check that it goes back
            self.assertEqual(default, getenv_path(envvar, default))

    def test_home(self):
        """Test the output directories below the home directory."""
        with mock_home() as directory:
            self.assertEqual(directory, get_home())
            self.assertEqual(directory.as_posix(), os.getenv(QDISCORD_HOME_ENVVAR))
            base = get_base("sweep", "default")
            self.assertEqual(directory / "sweep" / "default", base)
            self.assertTrue(base.is_dir())
            with self.assertRaises(ValueError):
                get_base("sweep.csv")

    def test_rng(self):
        """Test that substreams are reproducible and distinct."""
        a = get_rng(7, 0, 1).standard_normal(5)
        np.testing.assert_array_equal(a, get_rng(7, 0, 1).standard_normal(5))
        self.assertFalse(np.array_equal(a, get_rng(7, 1, 1).standard_normal(5)))
        self.assertFalse(np.array_equal(a, get_rng(7, 0, 2).standard_normal(5)))
        self.assertFalse(np.array_equal(a, get_rng(8, 0, 1).standard_normal(5)))

    def test_clamp_radicand(self):
        """Test that only round-off is clamped."""
        self.assertEqual(2.0, clamp_radicand(2.0, "x"))
        self.assertEqual(0.0, clamp_radicand(-1e-14, "x"))
        with self.assertRaises(DomainError) as context:
            clamp_radicand(-1e-3, "x")
        self.assertIn("x=-0.001", str(context.exception))

    def test_exceptions(self):
        """Test the hierarchy and messages of the exceptions."""
        e = MalformedRowError(Path("data.csv"), 3, "non-numeric cell")
        self.assertIsInstance(e, QDiscordError)
        self.assertIsInstance(e, ValueError)
        self.assertEqual("malformed row 3 in data.csv: non-numeric cell", str(e))
        self.assertIn("2.00%", str(RejectionRateError(200, 10_000, 0.01)))
        self.assertIn("n_s", str(GridCoverageError("n_s", 0.1)))
