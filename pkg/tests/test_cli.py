"""
Tests for the CLI functionality.
"""

import argparse
import io
import json
import logging
import unittest
from fractions import Fraction
from typing import Any
from unittest.mock import patch

from tasep_ldp.cli import (
    SCHEMA_VERSION,
    RunConfig,
    TasepLdpCLI,
    configure_logging,
    render_csv,
    render_json,
)
from tasep_ldp.core import UsageError, logger
from tasep_ldp.sim import InitialCondition


def parse(argv: list) -> RunConfig:
    return RunConfig.from_namespace(TasepLdpCLI().build_parser().parse_args(argv))


class TestRunConfig(unittest.TestCase):
    """Test building run configurations from arguments."""

    def test_cgf_arguments(self) -> None:
        """Test rationals, grid and finite-n parsing."""
        config = parse(
            ["cgf", "--alpha", "0.7", "--rho", "3/5", "--steps", "5",
             "--finite-n", "10,20"]
        )
        self.assertEqual(config.command, "cgf")
        self.assertEqual(config.alpha, Fraction(7, 10))
        self.assertEqual(config.rho, Fraction(3, 5))
        self.assertEqual(config.finite_n, (10, 20))
        self.assertEqual(config.theta_grid(), [-3.0, -1.5, 0.0, 1.5, 3.0])
        self.assertEqual(config.params().regime.value, "CaseC")

    def test_defaults(self) -> None:
        """Test the default grids and output format."""
        config = parse(["rate", "--alpha", "7/10", "--rho", "3/5"])
        self.assertEqual(config.fmt, "csv")
        self.assertIsNone(config.output)
        grid = config.z_grid()
        self.assertEqual(len(grid), 99)
        self.assertAlmostEqual(grid[0], 0.01)

    def test_explicit_z_range(self) -> None:
        """Test --z-min/--z-max with --z-steps."""
        config = parse(
            ["rate", "--alpha", "7/10", "--rho", "3/5", "--z-min", "0.1", "--z-max",
             "0.3", "--z-steps", "3"]
        )
        grid = config.z_grid()
        self.assertEqual(len(grid), 3)
        self.assertAlmostEqual(grid[1], 0.2)

    def test_simulate_arguments(self) -> None:
        """Test simulation options."""
        config = parse(
            ["simulate", "--alpha", "7/10", "--rho", "3/5", "--n", "8", "--init",
             "Empty", "--burn-in", "100", "--replicas", "2"]
        )
        self.assertIs(config.init, InitialCondition.EMPTY)
        self.assertEqual(config.burn_in, 100.0)
        self.assertEqual(config.replicas, 2)
        self.assertIsNone(config.L)

    def test_dist_float_flag(self) -> None:
        """Test that --float switches to truncated arithmetic."""
        config = parse(
            ["dist", "--alpha", "7/10", "--rho", "3/5", "--n", "4", "--float"]
        )
        self.assertFalse(config.exact)

    def test_bad_grids(self) -> None:
        """Test grid validation."""
        with self.assertRaises(UsageError):
            parse(["cgf", "--alpha", "7/10", "--rho", "3/5", "--steps", "1"])
        with self.assertRaises(UsageError):
            parse(
                ["cgf", "--alpha", "7/10", "--rho", "3/5", "--theta-min", "1",
                 "--theta-max", "0"]
            )

    def test_parser_errors_raise(self) -> None:
        """Test that argparse errors become UsageError."""
        with self.assertRaises(UsageError):
            parse(["cgf", "--alpha", "7/10"])
        with self.assertRaises(UsageError):
            parse(["nonsense"])
        with self.assertRaises(UsageError):
            parse(["cgf", "--alpha", "seven", "--rho", "3/5"])
        with self.assertRaises(UsageError):
            parse(["cgf", "--alpha", "7/10", "--rho", "3/5", "--finite-n", "0,5"])

    def test_missing_params(self) -> None:
        """Test params() on a command without alpha and rho."""
        config = RunConfig.from_namespace(argparse.Namespace(command="coeffs", n=3))
        with self.assertRaises(UsageError):
            config.params()


class TestRendering(unittest.TestCase):
    """Test CSV and JSON rendering."""

    def test_render_csv(self) -> None:
        """Test header, number formatting and LF line endings."""
        rows = [
            {"z": 0.1, "ok": True, "p": Fraction(23, 35), "piece": "P1"},
            {"z": 2 / 3, "ok": False, "p": Fraction(2), "piece": None},
        ]
        text = render_csv(rows, ["z", "ok", "p", "piece"])
        self.assertEqual(
            text,
            "z,ok,p,piece\n"
            "0.1,true,23/35,P1\n"
            "0.666666666666667,false,2,\n",
        )

    def test_render_json(self) -> None:
        """Test that schema_version comes first and rationals become strings."""
        text = render_json({"command": "dist", "value": Fraction(1, 3)})
        data = json.loads(text)
        self.assertEqual(list(data)[0], "schema_version")
        self.assertEqual(data["schema_version"], SCHEMA_VERSION)
        self.assertEqual(data["value"], "1/3")
        self.assertTrue(text.endswith("\n"))


class TestTasepLdpCLI(unittest.TestCase):
    """Test cases for the command dispatch."""

    def setUp(self) -> None:
        """Set up test fixtures."""
        self.stdout = io.StringIO()
        self.stderr = io.StringIO()
        self.cli = TasepLdpCLI(stdout=self.stdout, stderr=self.stderr)

    def test_cli_initialization(self) -> None:
        """Test CLI initializes correctly."""
        for name in ("verify", "coeffs", "cgf", "rate", "dist", "simulate", "compare"):
            self.assertIn(name, self.cli.commands)

    def test_coeffs_command(self) -> None:
        """Test the coefficient table for n = 2."""
        code = self.cli.run(["coeffs", "--n", "2"])
        self.assertEqual(code, 0)
        lines = self.stdout.getvalue().splitlines()
        self.assertEqual(lines[0], "p,j,power,coeff")
        self.assertEqual(
            lines[1:], ["1,0,1,1", "1,1,1,1", "2,0,0,1", "2,1,1,1", "2,2,2,1"]
        )

    def test_coeffs_recursions_agree(self) -> None:
        """Test that rec1 and rec2 print the same table."""
        self.cli.run(["coeffs", "--n", "5"])
        first = self.stdout.getvalue()
        other = io.StringIO()
        TasepLdpCLI(stdout=other).run(["coeffs", "--n", "5", "--recursion", "rec2"])
        self.assertEqual(first, other.getvalue())

    def test_dist_command(self) -> None:
        """Test the exact law for n = 1."""
        code = self.cli.run(["dist", "--alpha", "7/10", "--rho", "3/5", "--n", "1"])
        self.assertEqual(code, 0)
        self.assertEqual(
            self.stdout.getvalue(),
            "m,prob,prob_exact\n0,0.342857142857143,12/35\n1,0.657142857142857,23/35\n",
        )

    def test_uncovered_regime_exit_code(self) -> None:
        """Test exit code 2 and the stderr line."""
        code = self.cli.run(["cgf", "--alpha", "0.4", "--rho", "0.7"])
        self.assertEqual(code, 2)
        self.assertTrue(self.stderr.getvalue().startswith("error=UNCOVERED_REGIME "))
        self.assertEqual(self.stdout.getvalue(), "")

    def test_usage_error_exit_code(self) -> None:
        """Test exit code 1 for bad arguments."""
        code = self.cli.run(["rate", "--alpha", "7/10"])
        self.assertEqual(code, 1)
        self.assertIn("error=USAGE_ERROR", self.stderr.getvalue())

    def test_out_of_range_exit_code(self) -> None:
        """Test exit code 1 for a density outside [0, 1]."""
        code = self.cli.run(
            ["rate", "--alpha", "7/10", "--rho", "3/5", "--z-min", "0.5",
             "--z-max", "1.5"]
        )
        self.assertEqual(code, 1)
        self.assertIn("error=OUT_OF_RANGE", self.stderr.getvalue())

    def test_block_too_long(self) -> None:
        """Test that n > L/8 is a usage error of simulate."""
        code = self.cli.run(
            ["simulate", "--alpha", "7/10", "--rho", "3/5", "--n", "20", "--L", "100"]
        )
        self.assertEqual(code, 1)
        self.assertIn("error=INVALID_ARGUMENT", self.stderr.getvalue())

    def test_numerical_error_exit_code(self) -> None:
        """Test exit code 3 when a computation fails."""
        with patch("tasep_ldp.cli.cgf_closed", side_effect=ArithmeticError("boom")):
            code = self.cli.run(["cgf", "--alpha", "7/10", "--rho", "3/5"])
        self.assertEqual(code, 3)
        self.assertIn("error=NUMERICAL message=boom", self.stderr.getvalue())

    @patch("tasep_ldp.cli.AcceptanceRunner")
    def test_compare_failure_exit_code(self, mock_runner: Any) -> None:
        """Test exit code 4 when a suite fails."""
        mock_runner.return_value.passed = False
        mock_runner.return_value.generate_report.return_value = "SOME CHECKS FAILED"
        code = self.cli.run(["compare", "--alpha", "7/10", "--rho", "3/5"])
        self.assertEqual(code, 4)
        self.assertIn("error=CHECK_FAILED", self.stderr.getvalue())
        mock_runner.assert_called_once_with("desk", False)

    def test_help_exits_cleanly(self) -> None:
        """Test that --help returns 0."""
        with patch("sys.stdout", new_callable=io.StringIO) as fake:
            code = self.cli.run(["--help"])
        self.assertEqual(code, 0)
        self.assertIn("tasep-ldp", fake.getvalue())


class TestConfigureLogging(unittest.TestCase):
    """Test verbosity levels."""

    def tearDown(self) -> None:
        """Restore the default level."""
        logger.setLevel(logging.WARNING)

    def test_levels(self) -> None:
        """Test WARNING, INFO and DEBUG."""
        configure_logging(0)
        self.assertEqual(logger.level, logging.WARNING)
        configure_logging(1)
        self.assertEqual(logger.level, logging.INFO)
        configure_logging(3)
        self.assertEqual(logger.level, logging.DEBUG)
        self.assertTrue(logger.handlers)
