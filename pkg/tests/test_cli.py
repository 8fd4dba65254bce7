import argparse
import contextlib
import csv
import io
import json
import os
import tempfile
import unittest
from collections import Counter
from pathlib import Path
from unittest.mock import patch

from ddt import data, ddt, unpack
from jsonschema import validate

from wheelbounds.cell_verifier import read_report, report_schema
from wheelbounds.cli import (
    EXIT_OK,
    EXIT_VALIDATION,
    EXIT_VERIFICATION,
    RunConfig,
    build_parser,
    load_yaml_config,
    main,
    resolve_config,
)
from wheelbounds.errors import ValidationError
from wheelbounds.wheel_geometry import read_pgm

MATERIALS = ["--k1", "1", "--k2", "2"]


def run(*argv: str) -> tuple[int, str]:
    """Run the command line and capture stdout."""
    out = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(io.StringIO()):
        code = main(list(argv))
    return code, out.getvalue()


def run_json(*argv: str) -> tuple[int, dict]:
    code, text = run(*argv, "--json")
    return code, json.loads(text) if text else {}


@ddt
class TestCommands(unittest.TestCase):
    """Tests for the wheelbounds subcommands."""

    @data((0.3, "B1", 23.0 / 7.0), (0.14, "B2", 39.0 / 7.0), (0.1, "B3", 62.0 / 9.0))
    @unpack
    def test_bounds(self, m1, regime, value):
        """Test the closed-form bound at the reference points."""
        code, payload = run_json("bounds", *MATERIALS, "--m1", str(m1), "--m2", "0.25")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(payload["problem"], "conductivity")
        self.assertEqual(payload["regime"], regime)
        self.assertAlmostEqual(payload["B"], value, places=9)
        self.assertEqual([spec["phase"] for spec in payload["fields"]], [1, 2, 3])

    def test_bounds_text(self):
        """Test the key = value text report."""
        code, text = run("bounds", *MATERIALS, "--m1", "0.14", "--m2", "0.25")
        self.assertEqual(code, EXIT_OK)
        self.assertIn('regime = "B2"', text.splitlines())

    def test_bounds_resistivity(self):
        """Test that resistors give the dual bound."""
        code, payload = run_json("bounds", "--rho1", "1", "--rho2", "2", "--m1", "0.14", "--m2", "0.25")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(payload["problem"], "resistivity")
        self.assertAlmostEqual(payload["B"], 39.0 / 7.0, places=9)

    @data(
        ["bounds", "--k1", "1", "--k2", "2", "--m1", "0.7", "--m2", "0.4"],
        ["bounds", "--k1", "2", "--k2", "1", "--m1", "0.1", "--m2", "0.25"],
        ["bounds", "--k1", "1", "--k2", "2", "--m1", "0.1"],
        ["bounds", "--k1", "1", "--k2", "2", "--m1", "x", "--m2", "0.25"],
        ["frobnicate"],
        [],
    )
    def test_invalid_input(self, argv):
        """Test that invalid input exits with code 2."""
        code, _ = run(*argv)
        self.assertEqual(code, EXIT_VALIDATION)

    def test_help(self):
        """Test that --help exits cleanly."""
        code, _ = run("--help")
        self.assertEqual(code, EXIT_OK)

    @data((0.3, "W2_13_1"), (0.14, "W2_13"), (0.1, "W2_123"))
    @unpack
    def test_wheel(self, m1, kind):
        """Test that the radial conductivity of each wheel attains the bound."""
        code, payload = run_json("wheel", *MATERIALS, "--m1", str(m1), "--m2", "0.25")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(payload["kind"], kind)
        self.assertLess(payload["gap"], 1e-9)
        self.assertIn("b11", payload)

    def test_wheel_reference_geometry(self):
        """Test the hub and envelope of the reference wheels."""
        _, payload = run_json("wheel", *MATERIALS, "--m1", "0.3", "--m2", "0.25")
        self.assertAlmostEqual(payload["c_env"], 0.16142, delta=1e-4)
        _, payload = run_json("wheel", *MATERIALS, "--m1", "0.1", "--m2", "0.25")
        self.assertAlmostEqual(payload["r0"], 0.45, places=9)
        _, payload = run_json("wheel", *MATERIALS, "--m1", "0.14", "--m2", "0.25")
        self.assertAlmostEqual(payload["hub_field"], 2.0, places=8)
        self.assertAlmostEqual(payload["r0"], 0.5, places=12)

    def test_wheel_pgm(self):
        """Test that --pgm-out writes a rasterization with the right fractions."""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "wheel.pgm")
            code, payload = run_json(
                "wheel", *MATERIALS, "--m1", "0.14", "--m2", "0.25",
                "--nr", "64", "--ntheta", "256", "--n-spikes", "8", "--pgm-out", path,
            )  # fmt: skip
            self.assertEqual(code, EXIT_OK)
            phase_map = read_pgm(path)
            self.assertEqual((phase_map.nr, phase_map.ntheta), (64, 256))
            for measured, expected in zip(payload["raster_fractions"], (0.14, 0.25, 0.61)):
                self.assertAlmostEqual(measured, expected, delta=2e-3)

    def test_sweep(self):
        """Test the bound curve at m2 = 0.25 with the radial attainment column."""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "sweep.csv")
            code, _ = run(
                "sweep", *MATERIALS, "--m2", "0.25", "--m1-range", "0:0.4:0.01", "--with-radial", "--output", path
            )
            self.assertEqual(code, EXIT_OK)
            with open(path, newline="", encoding="utf-8") as f:
                rows = list(csv.DictReader(f))
        self.assertEqual(len(rows), 41)
        self.assertEqual(list(rows[0]), ["m1", "m2", "regime", "B", "t_opt", "k_radial"])
        self.assertEqual(Counter(row["regime"] for row in rows), {"B3": 13, "B2": 4, "B1": 24})
        for row in rows:
            b, k = float(row["B"]), float(row["k_radial"])
            self.assertLess(abs(k - b) / b, 1e-9, msg=row["m1"])
        values = [float(row["B"]) for row in rows]
        self.assertTrue(all(b <= a for a, b in zip(values, values[1:])))

    def test_sweep_fd(self):
        """Test the finite-difference column on a short sweep."""
        code, text = run(
            "sweep", *MATERIALS, "--m2", "0.25", "--m1-range", "0.1:0.3:0.1", "--with-fd", "--fd-points", "256"
        )
        self.assertEqual(code, EXIT_OK)
        rows = list(csv.DictReader(io.StringIO(text)))
        self.assertEqual(len(rows), 3)
        for row in rows:
            self.assertLess(abs(float(row["k_fd"]) - float(row["B"])) / float(row["B"]), 1e-2)

    def test_sweep_dilute_hub(self):
        """Test the radial column on a small hub where the envelope is thick."""
        code, text = run("sweep", *MATERIALS, "--m2", "0.05", "--m1-range", "0:0.9:0.05", "--with-radial")
        self.assertEqual(code, EXIT_OK)
        rows = list(csv.DictReader(io.StringIO(text)))
        self.assertEqual(len(rows), 19)
        for row in rows:
            b, k = float(row["B"]), float(row["k_radial"])
            self.assertLess(abs(k - b) / b, 1e-9, msg=row["m1"])

    def test_sweep_edge(self):
        """Test that points without material 2 leave the radial column empty."""
        code, text = run("sweep", *MATERIALS, "--m1", "0.3", "--m2-range", "0:0.2:0.1", "--with-radial")
        self.assertEqual(code, EXIT_OK)
        rows = list(csv.DictReader(io.StringIO(text)))
        self.assertEqual([row["k_radial"] == "" for row in rows], [True, False, False])

    @data("0.4:0:0.01", "0:0.4:0", "0:0.4", "a:b:c")
    def test_sweep_bad_range(self, text):
        """Test that malformed or empty ranges are rejected."""
        code, _ = run("sweep", *MATERIALS, "--m2", "0.25", "--m1-range", text)
        self.assertEqual(code, EXIT_VALIDATION)

    def test_sweep_outside_simplex(self):
        """Test that a sweep with no point in the simplex is rejected."""
        code, _ = run("sweep", *MATERIALS, "--m2", "0.9", "--m1-range", "0.2:0.4:0.1")
        self.assertEqual(code, EXIT_VALIDATION)

    def test_oracle(self):
        """Test that the numerical translation bound matches the closed form."""
        code, payload = run_json("oracle", *MATERIALS, "--m1", "0.14", "--m2", "0.25")
        self.assertEqual(code, EXIT_OK)
        self.assertLess(payload["rel_diff"], 1e-8)
        self.assertAlmostEqual(payload["t_opt"], 11.0 / 7.0, delta=1e-6)
        self.assertFalse(payload["classical"])

    def test_oracle_classical(self):
        """Test that the classical translation bound lies below the closed form."""
        code, payload = run_json("oracle", *MATERIALS, "--m1", "0.14", "--m2", "0.25", "--classical")
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(payload["classical"])
        self.assertLessEqual(payload["B"], payload["analytic_B"] + 1e-8)

    def test_elastic(self):
        """Test the intermediate elastic bound and its commonly printed form."""
        code, payload = run_json(
            "elastic", "--kappa1", "0.5", "--kappa2", "2", "--eta1", "0.5", "--eta2", "1",
            "--m1", "0.09", "--m2", "0.16",
        )  # fmt: skip
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(payload["problem"], "void")
        self.assertAlmostEqual(payload["B"], 6.0, places=8)
        self.assertAlmostEqual(payload["printed_B2"], 8.6667, places=4)
        self.assertTrue(payload["corrected_b2"])

    def test_elastic_engineering(self):
        """Test that Young's modulus and Poisson's ratio give the same bound."""
        code, payload = run_json(
            "elastic", "--young1", "1", "--poisson1", "0", "--young2", str(1 / 3), "--poisson2", str(-1 / 3),
            "--m1", "0.09", "--m2", "0.16",
        )  # fmt: skip
        self.assertEqual(code, EXIT_OK)
        self.assertAlmostEqual(payload["B"], 6.0, places=8)

    def test_elastic_dual(self):
        """Test the rigid third phase."""
        code, payload = run_json(
            "elastic", "--dual", "--bulk1", "0.5", "--bulk2", "2", "--shear1", "0.5", "--shear2", "1",
            "--m1", "0.09", "--m2", "0.16",
        )  # fmt: skip
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(payload["problem"], "rigid")
        self.assertAlmostEqual(payload["B"], 6.0, places=8)

    @data(
        ["--dual", "--kappa1", "0.5", "--kappa2", "2", "--eta1", "0.5", "--eta2", "1"],
        ["--kappa1", "0.5", "--kappa2", "2", "--eta1", "0.5"],
        ["--young1", "1", "--kappa2", "2", "--eta2", "1"],
        ["--young1", "1", "--poisson1", "1.5", "--kappa2", "2", "--eta2", "1"],
    )
    def test_elastic_bad_moduli(self, flags):
        """Test that incomplete or invalid moduli exit with code 2."""
        code, _ = run("elastic", *flags, "--m1", "0.09", "--m2", "0.16")
        self.assertEqual(code, EXIT_VALIDATION)

    def test_verify_homogeneous(self):
        """Test the sanity run and that its report satisfies the schema."""
        code, payload = run_json("verify", *MATERIALS, "--homogeneous", "--nr", "16", "--ntheta", "64")
        self.assertEqual(code, EXIT_OK)
        self.assertLess(payload["rel_err"], 1e-6)
        validate(payload, report_schema())

    def test_verify_report_file(self):
        """Test that --output writes a report that reads back as a verification report."""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "report.json")
            code, text = run(
                "verify", *MATERIALS, "--homogeneous", "--nr", "16", "--ntheta", "64", "--json", "--output", path
            )
            self.assertEqual(code, EXIT_OK)
            self.assertEqual(text, "")
            report = read_report(path)
        self.assertEqual(report.kind, "homogeneous")
        self.assertEqual(report.grid, (16, 64))
        self.assertLess(report.rel_err, 1e-6)

    def test_verify_fails_tolerance(self):
        """Test that a coarse run above the tolerance exits with code 3 after writing its report."""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "report.json")
            code, _ = run(
                "verify", *MATERIALS, "--m1", "0.14", "--m2", "0.25",
                "--nr", "32", "--ntheta", "256", "--n-spikes", "16", "--contrast", "1e3",
                "--tolerance", "1e-9", "--json", "--output", path,
            )  # fmt: skip
            self.assertEqual(code, EXIT_VERIFICATION)
            report = json.loads(Path(path).read_text(encoding="utf-8"))
            self.assertEqual(read_report(path).grid, (32, 256))
        validate(report, report_schema())
        self.assertEqual(report["grid"], [32, 256])
        self.assertGreater(report["rel_err"], 1e-9)


@ddt
class TestConfiguration(unittest.TestCase):
    """Tests for resolving configuration from flags, environment, .env and YAML."""

    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.env_path = Path(self.tmp.name) / ".env"
        self.config_path = Path(self.tmp.name) / "config.yaml"
        self.config_path.write_text("solver:\n  nr: 99\noutput:\n  digits: 6\n", encoding="utf-8")

    def resolve(self, *argv: str) -> RunConfig:
        args = build_parser().parse_args(["verify", *MATERIALS, *argv])
        return resolve_config(args, env_path=self.env_path, config_path=self.config_path)

    @data(
        (["--nr", "55"], {"WHEELS_NR": "77"}, True, 55),
        ([], {"WHEELS_NR": "77"}, True, 77),
        ([], {}, True, 99),
        ([], {}, False, 256),
    )
    @unpack
    def test_priority(self, argv, env, with_yaml, expected):
        """Test that flags beat the environment, which beats YAML, which beats the defaults."""
        if not with_yaml:
            self.config_path.unlink()
        with patch.dict(os.environ, env, clear=True):
            self.assertEqual(self.resolve(*argv).nr, expected)

    def test_dotenv(self):
        """Test that WHEELS_* values are read from a .env file and lose to the process environment."""
        self.env_path.write_text("WHEELS_DIGITS=5\nWHEELS_NTHETA=512\nOTHER=1\n", encoding="utf-8")
        with patch.dict(os.environ, {"WHEELS_NTHETA": "2048"}, clear=True):
            cfg = self.resolve()
        self.assertEqual(cfg.digits, 5)
        self.assertEqual(cfg.ntheta, 2048)

    def test_flags(self):
        """Test that --json forces JSON output and booleans default to False."""
        with patch.dict(os.environ, {}, clear=True):
            cfg = self.resolve("--json", "--m1", "0.1", "--m2", "0.25")
        self.assertEqual(cfg.output_format, "json")
        self.assertEqual((cfg.m1, cfg.m2), (0.1, 0.25))
        self.assertFalse(cfg.homogeneous)
        self.assertEqual(cfg.series, [])

    @data({"WHEELS_NR": "many"}, {"WHEELS_FORMAT": "xml"})
    def test_bad_values(self, env):
        """Test that unusable configuration values are rejected."""
        with patch.dict(os.environ, env, clear=True):
            with self.assertRaises(ValidationError):
                self.resolve()

    def test_unreadable_yaml(self):
        """Test that a YAML file without a top-level mapping is ignored with a warning."""
        self.config_path.write_text("- just\n- a list\n", encoding="utf-8")
        with self.assertLogs("wheelbounds", "WARNING"):
            self.assertEqual(load_yaml_config(self.config_path), {})
        self.assertEqual(load_yaml_config(Path(self.tmp.name) / "missing.yaml"), {})

    def test_parser(self):
        """Test that every subcommand is registered."""
        parser = build_parser()
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        self.assertEqual(set(subparsers.choices), {"bounds", "wheel", "verify", "sweep", "oracle", "elastic"})


if __name__ == "__main__":
    unittest.main()
