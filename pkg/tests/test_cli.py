# -*- coding: utf-8 -*-

"""Tests for the command line interface."""

import json
import tempfile
import unittest
from pathlib import Path

import pandas as pd
from click.testing import CliRunner

from qdiscord.cli import RangeGridType, main
from qdiscord.sweep import BOUNDS_COLUMNS, validate_manifest, validate_table
from qdiscord.version import get_version


class TestCLI(unittest.TestCase):
    """Tests for the ``qdiscord`` command."""

    def setUp(self) -> None:
        """Set up the test case with a temporary directory and a runner."""
        self.tmpdir = tempfile.TemporaryDirectory()
        self.directory = Path(self.tmpdir.name)
        self.runner = CliRunner()

    def tearDown(self) -> None:
        """Tear down the test case's temporary directory."""
        self.tmpdir.cleanup()

    def _invoke(self, *args: str, exit_code: int = 0):
        result = self.runner.invoke(main, list(args))
        self.assertEqual(exit_code, result.exit_code, msg=result.output)
        return result

    def _simulate(self, *args: str) -> dict:
        result = self._invoke("simulate", "--out", str(self.directory), *args)
        return json.loads(result.stdout)

    def test_version(self):
        """Test the version flag."""
        self.assertIn(get_version(), self._invoke("--version").output)

    def test_range_grid(self):
        """Test that grids include their end point."""
        grid = RangeGridType().convert("0.05:1:0.05", None, None)
        self.assertEqual(20, len(grid))
        self.assertEqual(0.05, grid[0])
        self.assertEqual(1.0, grid[-1])

    def test_simulate_vacuum(self):
        """Test that no squeezing gives no discord."""
        data = self._simulate("--r", "0", "--mq", "100")
        self.assertEqual(0.0, data["d_true"])
        self.assertTrue(Path(data["path"]).is_file())
        self.assertTrue(Path(data["meta_path"]).is_file())
        self.assertEqual("physical", data["meta"]["generator"]["kind"])

    def test_simulate_photons(self):
        """Test simulating from photon numbers."""
        data = self._simulate("--ns", "1", "--nt", "0.5", "--mq", "100", "--name", "reference")
        self.assertAlmostEqual(0.7502573, data["d_true"], delta=1e-6)
        self.assertEqual("reference.csv", Path(data["path"]).name)

    def test_simulate_usage(self):
        """Test invalid flag combinations."""
        self._invoke("simulate", "--r", "0.1", exit_code=2)
        out = str(self.directory)
        self._invoke("simulate", "--out", out, "--r", "0.1", "--ns", "1", "--nt", "1", exit_code=2)
        self._invoke("simulate", "--out", out, "--ns", "1", exit_code=2)
        self._invoke("simulate", "--out", out, exit_code=2)
        self._invoke("simulate", "--out", out, "--r=-1", exit_code=1)

    def test_estimate(self):
        """Test both estimators on a simulated dataset."""
        path = self._simulate("--ns", "1", "--nt", "0.5", "--mq", "1000")["path"]
        out = self.directory / "bayes.json"
        self._invoke(
            "estimate",
            "--method",
            "bayes",
            "--in",
            path,
            "--blocks",
            "10",
            "--mc-trials",
            "10000",
            "--out",
            str(out),
        )
        with out.open() as file:
            record = json.load(file)
        self.assertEqual("bayes", record["method"])
        self.assertEqual(10 * 4 * 1000, record["resources_m"])
        self.assertGreater(record["var_d"], 0.0)

        out = self.directory / "inversion.json"
        inversion = ["estimate", "--method", "inversion", "--in", path]
        self._invoke(*inversion, "--mc-trials", "10000", "--out", str(out))
        with out.open() as file:
            record = json.load(file)
        self.assertEqual("inversion", record["method"])
        self.assertEqual(4 * 1000, record["resources_m"])

    def test_estimate_errors(self):
        """Test failing estimates."""
        path = self._simulate("--ns", "1", "--nt", "0.5", "--mq", "100")["path"]
        inversion = ["estimate", "--method", "inversion", "--in", path]
        self._invoke(*inversion, "--mc-trials", "100", exit_code=1)
        self._invoke("estimate", "--method", "bayes", "--in", path, "--blocks", "7", exit_code=1)
        self._invoke("estimate", "--method", "guess", "--in", path, exit_code=2)
        missing = str(self.directory / "missing.csv")
        self._invoke("estimate", "--method", "inversion", "--in", missing, exit_code=2)

        lines = Path(path).read_text().splitlines()
        lines[4] = "0.1,abc,0.3,0.4"
        Path(path).write_text("\n".join(lines) + "\n")
        result = self._invoke(*inversion, exit_code=1)
        self.assertIn("row 4", result.output)

    def test_bounds(self):
        """Test tabulating the bounds to a file and to stdout."""
        out = self.directory / "bounds.csv"
        self._invoke("bounds", "--r-grid", "0:0.2:0.1", "--out", str(out))
        df = pd.read_csv(out)
        validate_table(df, "bounds")
        self.assertEqual([0.1, 0.2], df["r"].tolist())
        self.assertTrue((df["crb_classical"] >= df["crb_quantum"]).all())

        result = self._invoke("bounds", "--r-grid", "0.1:0.3:0.1")
        self.assertEqual(",".join(BOUNDS_COLUMNS), result.stdout.splitlines()[0])
        self.assertEqual(4, len(result.stdout.splitlines()))

    def test_bounds_usage(self):
        """Test invalid grids and physical parameters."""
        self._invoke("bounds", "--r-grid", "0:1", exit_code=2)
        self._invoke("bounds", "--r-grid", "1:0:0.1", exit_code=2)
        self._invoke("bounds", "--r-grid", "0:1:0", exit_code=2)
        self._invoke("bounds", exit_code=2)
        r_grid = ["bounds", "--r-grid", "0.1:0.3:0.1"]
        self._invoke(*r_grid, "--eta", "1.5", exit_code=2)
        self._invoke(*r_grid, "--gamma=-1", exit_code=2)
        self._invoke("bounds", "--r-grid=-0.2:0.2:0.1", exit_code=2)

    def test_sweep(self):
        """Test that a rerun with other workers reproduces the tables."""
        out = self.directory / "sweep"
        args = [
            "sweep",
            "--r-grid",
            "0.3:0.6:0.3",
            "--mq",
            "1000",
            "--blocks",
            "10",
            "--mc-trials",
            "10000",
            "--seed",
            "0",
            "--seed",
            "1",
            "--out",
            str(out),
            "--no-progress",
        ]
        self._invoke(*args)
        first = (out / "sweep.csv").read_text()
        self._invoke(*args, "--force", "--workers", "2")
        self.assertEqual(first, (out / "sweep.csv").read_text())
        with (out / "manifest.json").open() as file:
            manifest = json.load(file)
        validate_manifest(manifest)
        self.assertEqual([0, 1], manifest["config"]["seeds"])
        self.assertEqual(2, manifest["timings"]["workers"])

    def test_sweep_usage(self):
        """Test invalid sweep configurations."""
        sweep = ["sweep", "--out", str(self.directory / "sweep"), "--no-progress"]
        self._invoke(*sweep, "--mq", "1000", "--blocks", "3", exit_code=2)
        self._invoke(*sweep, "--seed", "1", "--seed", "1", exit_code=2)
