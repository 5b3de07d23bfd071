# -*- coding: utf-8 -*-

"""Tests for sweeps and the tables they produce."""

import json
import math
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import numpy as np
import pandas as pd

from qdiscord.constants import SCHEMA_VERSION
from qdiscord.sweep import (
    BOUNDS_COLUMNS,
    CELL_ERRORS,
    FIG3_SERIES,
    SWEEP_COLUMNS,
    SweepConfig,
    SweepRow,
    aggregate_cells,
    bounds_table,
    fig2_table,
    fig3_table,
    run_sweep,
    sweep_table,
    validate_manifest,
    validate_table,
    write_table,
)
from qdiscord.utils import DomainError, SchemaError, mock_envvar

GAMMA = 0.73
ETA = 0.62


def _cell(r: float, seed: int, d_inv: float, var_inv: float) -> dict:
    return {
        "r": r,
        "seed": seed,
        "n_s": 0.1,
        "n_t": 0.05,
        "d_true": 0.08,
        "d_inv": d_inv,
        "var_inv": var_inv,
        "d_bay": d_inv,
        "var_bay": var_inv,
        "crb_quantum": 0.01,
        "crb_classical": 0.1,
        "k_m_inv_db": 1.0 + seed,
        "k_m_bay_db": 0.5,
        "k_m_quantum_inv_db": 11.0,
        "k_m_quantum_bay_db": 10.5,
        "resources_inv": 4_000,
        "resources_bay": 40_000,
        "elapsed_seconds": 0.1,
    }


class TestConfig(unittest.TestCase):
    """Tests for the sweep configuration."""

    def test_defaults(self):
        """Test the default grid of squeezing strengths."""
        cfg = SweepConfig()
        self.assertEqual(20, len(cfg.r_values))
        self.assertAlmostEqual(0.05, cfg.r_values[0])
        self.assertAlmostEqual(1.0, cfg.r_values[-1])
        self.assertEqual((0,), cfg.seeds)

    def test_invalid(self):
        """Test that inconsistent configurations are rejected."""
        for kwargs in [
            dict(r_values=()),
            dict(r_values=(0.0, 0.1)),
            dict(r_values=(0.2, 0.1)),
            dict(seeds=()),
            dict(seeds=(1, 1)),
            dict(m_q=1000, n_blocks=3),
            dict(mc_trials=100),
            dict(eta=1.5),
        ]:
            with self.subTest(**{key: str(value) for key, value in kwargs.items()}):
                with self.assertRaises(ValueError):
                    SweepConfig(**kwargs)

    def test_from_config(self):
        """Test that unset values come from the environment."""
        with mock_envvar("QDISCORD_M_Q", "1000"), mock_envvar("QDISCORD_N_BLOCKS", "10"):
            cfg = SweepConfig.from_config(r_values=(0.1, 0.2), m_q=None, eta=0.5)
        self.assertEqual(1000, cfg.m_q)
        self.assertEqual(10, cfg.n_blocks)
        self.assertEqual(0.5, cfg.eta)
        self.assertEqual((0.1, 0.2), cfg.r_values)

    def test_to_json(self):
        """Test that the output directory does not enter the serialization."""
        a = SweepConfig(r_values=(0.1,), output_dir=Path("a"))
        b = SweepConfig(r_values=(0.1,), output_dir=Path("b"))
        self.assertEqual(a.to_json(), b.to_json())
        self.assertEqual([0.1], json.loads(json.dumps(a.to_json()))["r_values"])


class TestTables(unittest.TestCase):
    """Tests for aggregation and tables."""

    def test_aggregate(self):
        """Test averaging over the seeds."""
        cells = [
            _cell(0.2, 0, d_inv=1.0, var_inv=1.0),
            _cell(0.1, 0, d_inv=0.5, var_inv=0.04),
            _cell(0.2, 1, d_inv=3.0, var_inv=9.0),
        ]
        rows = aggregate_cells(cells)
        self.assertEqual([0.1, 0.2], [row.r for row in rows])
        first, second = rows
        self.assertEqual(1, first.n_seeds)
        self.assertEqual(0.0, first.spread_inv)
        self.assertAlmostEqual(0.2, first.sigma_inv)
        self.assertEqual(2, second.n_seeds)
        self.assertAlmostEqual(2.0, second.d_inv)
        self.assertAlmostEqual(math.sqrt(5.0), second.sigma_inv)
        self.assertAlmostEqual(math.sqrt(2.0), second.spread_inv)
        self.assertAlmostEqual(1.5, second.k_m_inv_db)
        self.assertEqual(40_000, second.resources_bay)
        self.assertEqual([], aggregate_cells([]))

    def test_tables(self):
        """Test the shapes of the derived tables."""
        rows = aggregate_cells([_cell(0.1, 0, 0.5, 0.04), _cell(0.2, 0, 1.0, 1.0)])
        df = sweep_table(rows)
        self.assertEqual(SWEEP_COLUMNS, tuple(df.columns))
        validate_table(df, "sweep")
        validate_table(fig2_table(rows), "fig2")
        fig3 = fig3_table(rows)
        validate_table(fig3, "fig3")
        self.assertEqual(len(FIG3_SERIES) * len(rows), len(fig3.index))
        self.assertEqual(set(FIG3_SERIES), set(fig3["series"]))
        validate_table(sweep_table([]), "sweep")

    def test_row_finite(self):
        """Test that rows can not hold non-finite values."""
        values = {name: 1.0 for name in SWEEP_COLUMNS}
        SweepRow(**values)
        with self.assertRaises(ValueError):
            SweepRow(**{**values, "sigma_bay": math.nan})

    def test_validate_table(self):
        """Test the schema errors."""
        rows = aggregate_cells([_cell(0.1, 0, 0.5, 0.04)])
        df = fig2_table(rows)
        with self.assertRaises(SchemaError):
            validate_table(df[list(reversed(df.columns))], "fig2")
        with self.assertRaises(SchemaError):
            validate_table(df.assign(d_bay=np.inf), "fig2")
        with self.assertRaises(SchemaError):
            validate_table(df.assign(d_bay="n/a"), "fig2")

    def test_bounds(self):
        """Test that singular squeezing strengths are skipped."""
        df = bounds_table([0.0, 0.1, 0.5], gamma=GAMMA, eta=ETA)
        self.assertEqual(BOUNDS_COLUMNS, tuple(df.columns))
        self.assertEqual([0.1, 0.5], df["r"].tolist())
        self.assertTrue((df["crb_classical"] >= df["crb_quantum"]).all())
        self.assertTrue((df["ratio_db"] >= 0.0).all())
        self.assertTrue((df["crb_single_quantum"] <= df["crb_quantum"] * (1.0 + 1e-9)).all())
        validate_table(df, "bounds")

    def test_bounds_domain(self):
        """Test that parameters outside of their domain are not skipped as singular rows."""
        for gamma, eta in [(GAMMA, 1.5), (GAMMA, 0.0), (-1.0, ETA)]:
            with self.subTest(gamma=gamma, eta=eta), self.assertRaises(DomainError):
                bounds_table([0.1, 0.2], gamma=gamma, eta=eta)
        with self.assertRaises(DomainError):
            bounds_table([0.1, -0.2], gamma=GAMMA, eta=ETA)

    def test_write_table(self):
        """Test that written tables are read back with the same schema."""
        df = bounds_table([0.1, 0.2], gamma=GAMMA, eta=ETA)
        with tempfile.TemporaryDirectory() as directory:
            path = write_table(df, Path(directory) / "bounds.csv", "bounds")
            pd.testing.assert_frame_equal(df, pd.read_csv(path), rtol=1e-14)

    def test_manifest(self):
        """Test the manifest checks."""
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "format_version": "1",
            "config": {},
            "config_hash": "",
            "versions": {},
            "rng": "",
            "timings": {},
            "failures": [],
            "tables": {},
            "notes": [],
        }
        validate_manifest(manifest)
        with self.assertRaises(SchemaError):
            validate_manifest({key: value for key, value in manifest.items() if key != "rng"})
        with self.assertRaises(SchemaError):
            validate_manifest({**manifest, "schema_version": "0"})


class TestRun(unittest.TestCase):
    """Tests for running a small sweep."""

    def setUp(self) -> None:
        """Set up the test case with a temporary directory."""
        self.tmpdir = tempfile.TemporaryDirectory()
        self.directory = Path(self.tmpdir.name)
        self.cfg = SweepConfig(
            r_values=(0.3, 0.6),
            m_q=1_000,
            n_blocks=10,
            mc_trials=10_000,
            seeds=(0, 1),
            output_dir=self.directory,
        )

    def tearDown(self) -> None:
        """Tear down the test case's temporary directory."""
        self.tmpdir.cleanup()

    def test_run(self):
        """Test the files of a sweep and that cached cells give the same tables."""
        result = run_sweep(self.cfg, progress=False)
        self.assertEqual([], result.failures)
        self.assertEqual([0.3, 0.6], [row.r for row in result.rows])
        self.assertTrue(all(row.n_seeds == 2 for row in result.rows))
        for name in ("sweep.csv", "sweep.json", "fig2.csv", "fig3.csv", "manifest.json"):
            self.assertTrue((self.directory / name).is_file(), msg=name)
        with (self.directory / "manifest.json").open() as file:
            manifest = json.load(file)
        validate_manifest(manifest)
        self.assertEqual(4, len(manifest["timings"]["cells"]))
        self.assertFalse(any(cell["cached"] for cell in manifest["timings"]["cells"]))
        first = (self.directory / "sweep.csv").read_text()

        cached = run_sweep(self.cfg, workers=2, progress=False)
        self.assertTrue(all(cell["cached"] for cell in cached.manifest["timings"]["cells"]))
        self.assertEqual(first, (self.directory / "sweep.csv").read_text())

        forced = run_sweep(self.cfg, workers=2, force=True, progress=False)
        self.assertFalse(any(cell["cached"] for cell in forced.manifest["timings"]["cells"]))
        self.assertEqual(first, (self.directory / "sweep.csv").read_text())

    def test_failures(self):
        """Test that failing cells are recorded instead of aborting the sweep."""
        cfg = SweepConfig(
            r_values=(0.3,),
            m_q=2,
            n_blocks=1,
            mc_trials=10_000,
            output_dir=self.directory,
        )
        result = run_sweep(cfg, progress=False)
        self.assertEqual([], result.rows)
        self.assertEqual(1, len(result.failures))
        self.assertEqual("RejectionRateError", result.failures[0]["error"])
        validate_table(pd.read_csv(self.directory / "sweep.csv"), "sweep")

    def test_unexpected_error(self):
        """Test that errors outside of the numerics abort the sweep instead of failing a cell."""
        for error in (ValueError, TypeError, KeyError):
            self.assertFalse(issubclass(error, CELL_ERRORS), msg=error.__name__)
            with self.subTest(error=error.__name__), mock.patch(
                "qdiscord.sweep.run_cell", side_effect=error("bug")
            ):
                with self.assertRaises(error):
                    run_sweep(self.cfg, progress=False)
