"""
Tests for the acceptance suites and their runner.
"""

import unittest

import pytest

from tasep_ldp.acceptance import (
    SCALES,
    AcceptanceRunner,
    SuiteResult,
    algebra_suite,
    cgf_suite,
    coefficient_suite,
    expansion_suite,
    finite_n_suite,
    rate_suite,
    simulation_suite,
    variational_suite,
)
from tasep_ldp.params import make_params
from tasep_ldp.reports import CheckReport

CASE_A = make_params("3/10", "1/5")
CASE_B = make_params("7/10", "0")
CASE_C = make_params("7/10", "3/5")


class TestSuiteResult(unittest.TestCase):
    """Test the SuiteResult dataclass."""

    def test_suite_result_creation(self) -> None:
        """Test SuiteResult initialization and serialisation."""
        report = CheckReport("demo")
        report.new_check("x").record(True)
        result = SuiteResult(
            suite_name="demo",
            params_label="alpha=7/10 rho=3/5",
            report=report,
            iterations=2,
            mean_time=0.5,
            std_dev=0.1,
            min_time=0.4,
            max_time=0.6,
        )

        self.assertTrue(result.passed)
        data = result.to_dict()
        self.assertEqual(data["suite"], "demo")
        self.assertEqual(data["params"], "alpha=7/10 rho=3/5")
        self.assertEqual(len(data["checks"]), 1)


class TestSuites(unittest.TestCase):
    """Run the individual suites at small sizes."""

    def test_algebra_suite(self) -> None:
        """Test the exact relations for all three regimes."""
        for p in (CASE_A, CASE_B, CASE_C):
            report = algebra_suite(p, K=16, liggett_n=5, sum_n=6)
            self.assertTrue(report.passed, report.failures())

    def test_coefficient_suite(self) -> None:
        """Test recursions, closed forms and the binomial identity."""
        report = coefficient_suite(max_n=7, identity_n=12)
        self.assertTrue(report.passed, report.failures())
        self.assertEqual(len(report.checks), 5)

    def test_expansion_suite(self) -> None:
        """Test the normal-ordered reconstruction."""
        for p in (CASE_A, CASE_C):
            self.assertTrue(expansion_suite(p, 5).passed)

    def test_cgf_suite(self) -> None:
        """Test the sandwich and breakpoint checks."""
        for p in (CASE_A, CASE_B, CASE_C):
            report = cgf_suite(p, 61)
            self.assertTrue(report.passed, report.failures())
        self.assertEqual(len(cgf_suite(CASE_A, 11).checks), 2)

    def test_rate_suite(self) -> None:
        """Test closed against numeric rate function and kinks."""
        for p in (CASE_A, CASE_B, CASE_C):
            report = rate_suite(p, 25)
            self.assertTrue(report.passed, report.failures())

    def test_rate_suite_with_kinks_near_zero(self) -> None:
        """Test strongly curved kinks at 1/100 and 1/50."""
        report = rate_suite(make_params("99/100", "49/50"), 99)
        self.assertTrue(report.passed, report.failures())

    def test_variational_suite(self) -> None:
        """Test the grid maximisation at a coarse grid."""
        for p in (CASE_A, CASE_C):
            report = variational_suite(p, 200)
            self.assertTrue(report.passed, report.failures())


class TestAcceptanceRunner(unittest.TestCase):
    """Test the runner."""

    def setUp(self) -> None:
        """Set up test fixtures."""
        self.runner = AcceptanceRunner()

    def test_runner_initialization(self) -> None:
        """Test runner initializes correctly."""
        self.assertEqual(self.runner.scale, "desk")
        self.assertIs(self.runner.settings, SCALES["desk"])
        self.assertEqual(len(self.runner.results), 0)

    def test_unknown_scale(self) -> None:
        """Test that unknown scales are rejected."""
        with self.assertRaises(ValueError):
            AcceptanceRunner("huge")

    def test_time_suite(self) -> None:
        """Test timing a single suite."""
        result = self.runner.time_suite(
            "coefficients", "-", coefficient_suite, 4, 6, iterations=3
        )
        self.assertEqual(result.iterations, 3)
        self.assertGreater(result.mean_time, 0)
        self.assertGreaterEqual(result.std_dev, 0)
        self.assertLessEqual(result.min_time, result.max_time)
        self.assertEqual(len(self.runner.results), 1)

    def test_generate_report_empty(self) -> None:
        """Test report generation with no results."""
        self.assertEqual(
            self.runner.generate_report(), "No acceptance results available."
        )

    def test_generate_report(self) -> None:
        """Test the text report of a passing suite."""
        self.runner.time_suite("coefficients", "-", coefficient_suite, 4, 6)
        report = self.runner.generate_report()
        self.assertIn("=== tasep-ldp acceptance report (desk) ===", report)
        self.assertIn("[PASS] coefficients (-)", report)
        self.assertTrue(report.endswith("ALL PASSED"))
        self.assertTrue(self.runner.passed)
        self.assertTrue(self.runner.to_dict()["passed"])

    def test_failed_suite_is_reported(self) -> None:
        """Test the report of a failing suite."""

        def failing() -> CheckReport:
            report = CheckReport("broken")
            report.new_check("never").record(False, "k=0")
            return report

        self.runner.time_suite("broken", "-", failing)
        text = self.runner.generate_report()
        self.assertIn("[FAIL] broken (-)", text)
        self.assertIn("first failure at k=0", text)
        self.assertTrue(text.endswith("SOME CHECKS FAILED"))
        self.assertFalse(self.runner.passed)


@pytest.mark.slow
class TestDeskScale:
    """Run the desk-scale acceptance for each regime."""

    @pytest.mark.parametrize(
        "alpha, rho", [("3/10", "1/5"), ("7/10", "0"), ("7/10", "3/5")]
    )
    def test_run_all(self, alpha: str, rho: str) -> None:
        """Test that every desk suite passes."""
        runner = AcceptanceRunner("desk")
        results = runner.run_all([make_params(alpha, rho)])
        assert len(results) == 7
        assert runner.passed, runner.generate_report()

    def test_finite_n_suite(self) -> None:
        """Test the O(log n / n) convergence bound."""
        assert finite_n_suite(CASE_C, (100, 200, 400)).passed

    def test_simulation_suite(self) -> None:
        """Test histogram and current against the exact values."""
        assert simulation_suite(CASE_C, 20_000).passed


@pytest.mark.slow
class TestFullScale:
    """Run the full-scale acceptance sizes."""

    @pytest.mark.parametrize(
        "alpha, rho", [("3/10", "1/5"), ("7/10", "0"), ("7/10", "3/5")]
    )
    def test_run_all(self, alpha: str, rho: str) -> None:
        """Test that every full-scale suite passes without simulation."""
        runner = AcceptanceRunner("full")
        results = runner.run_all([make_params(alpha, rho)])
        assert len(results) == 7
        assert runner.passed, runner.generate_report()

    def test_simulation_suite(self) -> None:
        """Test the simulation suite at 10^5 samples, where TV must be <= 0.02."""
        samples = SCALES["full"]["sim_samples"]
        assert samples == 100_000
        report = simulation_suite(CASE_C, samples)
        assert report.passed, report.failures()
