"""
Timed acceptance suites for tasep-ldp.

Each suite checks one family of identities or convergence properties and
returns a CheckReport; AcceptanceRunner times the suites and renders a plain
text report. Two scales are provided: ``desk`` finishes in seconds and is what
the ``compare`` command runs by default, ``full`` uses the sizes of the
release acceptance run.
"""

import math
import statistics
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, List, Sequence

from .cgf import (
    cgf_closed,
    cgf_finite_n,
    cgf_lower,
    cgf_upper,
    growth_lambda,
    lb1_objective,
    lb1_optimizer,
    lb2_objective,
    lb2_optimizer,
    variational_argmax,
)
from .core import logger
from .ldp import phase_points, rate_closed, rate_numeric, second_kink
from .mpa import (
    block_density_distribution,
    configuration_probabilities,
    liggett_relations_check,
    moment_power,
    verify_mpa_relations,
)
from .normalorder import (
    binom_identity_sides,
    check_symmetry,
    coeff_table_rec1,
    coeff_table_rec2,
    entry_mass,
    f_p0_closed,
    f_pp_closed,
    poly_coefficients,
    reconstruct_moment_sum,
    table_mass,
)
from .params import Params, theta_breakpoints
from .reports import CheckReport

SCALES: Dict[str, Dict[str, Any]] = {
    "desk": {
        "K": 32,
        "liggett_n": 6,
        "sum_n": 8,
        "coeff_n": 8,
        "identity_n": 16,
        "expansion_n": 6,
        "cgf_points": 61,
        "finite_ns": (100, 200, 400),
        "rate_steps": 49,
        "grid": 400,
        "sim_samples": 20_000,
    },
    "full": {
        "K": 64,
        "liggett_n": 8,
        "sum_n": 12,
        "coeff_n": 12,
        "identity_n": 30,
        "expansion_n": 10,
        "cgf_points": 61,
        "finite_ns": (250, 500, 1000),
        "rate_steps": 99,
        "grid": 2000,
        "sim_samples": 100_000,
    },
}

EXPANSION_THETAS = (-3.0, -1.0, 0.0, 1.0, 3.0)
FINITE_N_THETAS = (-2.0, -1.0, 0.0, 1.0)


@dataclass
class SuiteResult:
    """Container for one timed suite."""

    suite_name: str
    params_label: str
    report: CheckReport
    iterations: int
    mean_time: float
    std_dev: float
    min_time: float
    max_time: float

    @property
    def passed(self) -> bool:
        return self.report.passed

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite_name,
            "params": self.params_label,
            "passed": self.passed,
            "mean_time": self.mean_time,
            "checks": self.report.to_rows(),
        }


def algebra_suite(p: Params, K: int, liggett_n: int, sum_n: int) -> CheckReport:
    """Matrix relations, Liggett relations and normalisation, all exact."""
    report = CheckReport("algebra")
    report.extend(verify_mpa_relations(p, K))
    for n in range(3, liggett_n + 1):
        report.extend(liggett_relations_check(p, n))
    total = report.new_check("sum of P(eta) over {0,1}^n = 1", detail=f"n <= {sum_n}")
    for n in range(1, sum_n + 1):
        probs = configuration_probabilities(p, n)
        total.record(sum(probs.values(), Fraction(0)) == 1, f"n={n}")
    return report


def coefficient_suite(max_n: int, identity_n: int) -> CheckReport:
    """Both recursions, closed columns, symmetry and the binomial identity."""
    report = CheckReport("coefficients")
    agree = report.new_check("rec1 = rec2")
    columns = report.new_check("closed forms of f[p][p] and f[p][0]")
    symmetry = report.new_check("x^n f[p][p-j](1/x) = f[p][j]")
    mass = report.new_check("table mass is Catalan, entry mass is ballot")
    for n in range(1, max_n + 1):
        table = coeff_table_rec1(n)
        agree.record(table == coeff_table_rec2(n), f"n={n}")
        symmetry.record(check_symmetry(n), f"n={n}")
        mass.record(table.mass() == table_mass(n), f"n={n}")
        for order in range(1, n + 1):
            columns.record(
                table.f(order, order) == f_pp_closed(n, order)
                and table.f(order, 0) == f_p0_closed(n, order),
                f"n={n} p={order}",
            )
            expected = entry_mass(n, order)
            for j in range(order + 1):
                poly = table.f(order, j)
                mass.record(
                    sum(poly_coefficients(poly).values()) == expected,
                    f"n={n} p={order} j={j}",
                )

    identity = report.new_check("binomial identity", detail=f"n <= {identity_n}")
    for n in range(2, identity_n + 1):
        for order in range(1, n):
            for r in range(order, n):
                left, right = binom_identity_sides(n, order, r)
                identity.record(left == right, f"n={n} p={order} r={r}")
    return report


def expansion_suite(p: Params, max_n: int, rtol: float = 1e-10) -> CheckReport:
    """Normal-ordered reconstruction against the direct power."""
    report = CheckReport("expansion")
    check = report.new_check("normal-ordered sum = w^T (e^theta D + E)^n v")
    for n in range(1, max_n + 1):
        for theta in EXPANSION_THETAS:
            direct = moment_power(p, theta, n, normalized=True)
            rebuilt = reconstruct_moment_sum(p, theta, n, normalized=True)
            check.record(
                abs(rebuilt - direct) <= rtol * abs(direct), f"n={n} theta={theta:g}"
            )
    return report


def cgf_suite(p: Params, points: int, tol: float = 1e-12) -> CheckReport:
    """Sandwich, Lambda(0) = 0, breakpoint values and slopes."""
    report = CheckReport("cgf sandwich")
    sandwich = report.new_check("lower <= closed <= upper, gap <= 1e-12")
    for k in range(points):
        theta = -3.0 + 6.0 * k / (points - 1)
        lower = cgf_lower(p, theta).value
        upper = cgf_upper(p, theta).value
        closed = cgf_closed(p, theta).value
        slack = tol * max(1.0, abs(closed))
        sandwich.record(
            lower <= closed + slack
            and closed <= upper + slack
            and abs(upper - lower) <= slack,
            f"theta={theta:.3f}",
        )

    report.new_check("Lambda(0) = 0").record(abs(cgf_closed(p, 0.0).value) <= tol)
    if p.is_product:
        return report

    breaks = theta_breakpoints(p)
    log_c = math.log(p.c)
    values = report.new_check("breakpoint values")
    values.record(
        abs(cgf_closed(p, breaks.theta1).value - (-2.0 * math.log(p.alpha) + log_c))
        <= tol,
        "theta1",
    )
    values.record(
        abs(
            cgf_closed(p, breaks.theta2).value
            - (2.0 * math.log1p(1.0 / float(p.lambda1)) + log_c)
        )
        <= tol,
        "theta2",
    )
    slopes = report.new_check("finite-difference slopes at breakpoints")
    h = 1e-6
    for label, theta, expected in (
        ("theta1", breaks.theta1, float(1 - p.alpha)),
        ("theta2", breaks.theta2, second_kink(p)),
    ):
        slope = (
            cgf_closed(p, theta + h).value - cgf_closed(p, theta - h).value
        ) / (2.0 * h)
        slopes.record(abs(slope - expected) <= 1e-5, label)
    return report


def finite_n_suite(p: Params, ns: Sequence[int]) -> CheckReport:
    """|Lambda_n - Lambda| <= 5 log(n)/n and decreasing in n away from theta = 0."""
    report = CheckReport("finite-n convergence")
    bound = report.new_check("|Lambda_n - Lambda| <= 5 log(n)/n")
    decrease = report.new_check("error at largest n below error at smallest n")
    for theta in FINITE_N_THETAS:
        target = cgf_closed(p, theta).value
        errors = []
        for n in ns:
            error = abs(cgf_finite_n(p, theta, n).value - target)
            errors.append(error)
            bound.record(error <= 5.0 * math.log(n) / n, f"n={n} theta={theta:g}")
        if theta != 0.0 and not p.is_product:
            decrease.record(errors[-1] < errors[0], f"theta={theta:g}")
    return report


def rate_suite(p: Params, steps: int) -> CheckReport:
    """Closed form against the numeric transform, zero, convexity and kinks."""
    report = CheckReport("rate function")
    agree = report.new_check("closed = numeric Legendre transform within 1e-6")
    zs = [0.05 + 0.9 * k / (steps - 1) for k in range(steps)]
    values = []
    for z in zs:
        closed = rate_closed(p, z).value
        values.append(closed)
        agree.record(abs(closed - rate_numeric(p, z).value) <= 1e-6, f"z={z:.4f}")

    zero = report.new_check("I(typical density) = 0")
    zero.record(abs(rate_closed(p, float(p.typical_density)).value) <= 1e-10)

    convex = report.new_check("second differences non-negative")
    for k in range(1, len(values) - 1):
        convex.record(
            values[k - 1] - 2.0 * values[k] + values[k + 1] >= -1e-9, f"z={zs[k]:.4f}"
        )

    phases = phase_points(p)
    kinks = report.new_check("C^1 kinks with a curvature jump")
    for diagnostic in phases.diagnostics:
        kinks.record(diagnostic.is_kink, f"z={diagnostic.z:.6f}")
    return report


def variational_suite(p: Params, grid: int, tol: float = 5e-3) -> CheckReport:
    """Grid maximisation of both objectives against the closed lower bound."""
    report = CheckReport("variational")
    agree = report.new_check("grid lower bound = closed lower bound within 5e-3")
    optimum = report.new_check("analytic optimizers reach the grid maximum")
    thetas = [-2.0, 0.0, 1.0]
    if not p.is_product:
        thetas.insert(1, theta_breakpoints(p).theta1)
    lam = growth_lambda(p)
    alpha = float(p.alpha)
    for theta in thetas:
        first = variational_argmax(p, theta, grid, "lb1")
        second = variational_argmax(p, theta, grid, "lb2")
        numeric = max(first.value, second.value) + math.log(p.c)
        agree.record(
            abs(numeric - cgf_lower(p, theta).value) <= tol, f"theta={theta:g}"
        )

        eps, delta = lb1_optimizer(p, theta)
        analytic = float(lb1_objective(eps, delta, theta, lam))
        optimum.record(
            first.value <= analytic + 1e-9 and analytic - first.value <= tol,
            f"lb1 theta={theta:g}",
        )
        eps, delta = lb2_optimizer(p, theta)
        analytic = float(lb2_objective(eps, delta, theta, alpha))
        optimum.record(
            second.value <= analytic + 1e-9 and analytic - second.value <= tol,
            f"lb2 theta={theta:g}",
        )
    return report


def simulation_suite(p: Params, samples: int, n: int = 8, seed: int = 0) -> CheckReport:
    """Kinetic Monte Carlo histogram and current against the exact values."""
    from .sim import SimConfig, sample_block_density

    report = CheckReport("simulation")
    cfg = SimConfig.for_params(p, n, seed=seed, samples=samples)
    dist = sample_block_density(cfg, n)
    exact = block_density_distribution(p, n, exact=False)
    tolerance = 0.02 * math.sqrt(100_000 / max(samples, 1))
    report.new_check("TV(empirical, exact)", detail=f"<= {tolerance:.3g}").record(
        dist.tv_distance(exact.probs) <= tolerance
    )
    margin = 3.0 * dist.current_stderr + 0.01 * float(p.c)
    report.new_check("current within 3 standard errors of c").record(
        abs(dist.current_estimate - float(p.c)) <= margin
    )
    return report


class AcceptanceRunner:
    """Run and time the acceptance suites for one parameter set."""

    def __init__(self, scale: str = "desk", include_simulation: bool = False):
        if scale not in SCALES:
            raise ValueError(f"unknown scale {scale!r}; choose from {sorted(SCALES)}")
        self.scale = scale
        self.settings = SCALES[scale]
        self.include_simulation = include_simulation
        self.results: List[SuiteResult] = []
        self._log = logger.getChild(self.__class__.__name__)

    def time_suite(
        self,
        name: str,
        label: str,
        func: Callable[..., CheckReport],
        *args: Any,
        iterations: int = 1,
        **kwargs: Any,
    ) -> SuiteResult:
        """
        Run a suite ``iterations`` times and keep the last report.

        Args:
            name: Suite name used in the report
            label: Parameter label, e.g. "alpha=7/10 rho=3/5"
            func: Suite function returning a CheckReport
            iterations: Number of timed repetitions

        Returns:
            SuiteResult with timing statistics
        """
        times = []
        report = CheckReport(name)
        for _ in range(iterations):
            start_time = time.perf_counter()
            report = func(*args, **kwargs)
            times.append(time.perf_counter() - start_time)

        result = SuiteResult(
            suite_name=name,
            params_label=label,
            report=report,
            iterations=iterations,
            mean_time=statistics.mean(times),
            std_dev=statistics.stdev(times) if len(times) > 1 else 0.0,
            min_time=min(times),
            max_time=max(times),
        )
        self._log.info(
            "%s [%s]: %s in %.3fs",
            name,
            label,
            "passed" if result.passed else "FAILED",
            result.mean_time,
        )
        self.results.append(result)
        return result

    def run_all(self, params: Sequence[Params]) -> List[SuiteResult]:
        """Run every suite for each parameter set (the coefficient suite once)."""
        s = self.settings
        results = [
            self.time_suite(
                "coefficients", "-", coefficient_suite, s["coeff_n"], s["identity_n"]
            )
        ]
        for p in params:
            label = f"alpha={p.alpha} rho={p.rho}"
            results.append(
                self.time_suite(
                    "algebra",
                    label,
                    algebra_suite,
                    p,
                    s["K"],
                    s["liggett_n"],
                    s["sum_n"],
                )
            )
            results.append(
                self.time_suite(
                    "expansion", label, expansion_suite, p, s["expansion_n"]
                )
            )
            results.append(self.time_suite("cgf", label, cgf_suite, p, s["cgf_points"]))
            results.append(
                self.time_suite("finite-n", label, finite_n_suite, p, s["finite_ns"])
            )
            results.append(
                self.time_suite("rate", label, rate_suite, p, s["rate_steps"])
            )
            results.append(
                self.time_suite("variational", label, variational_suite, p, s["grid"])
            )
            if self.include_simulation:
                results.append(
                    self.time_suite(
                        "simulation", label, simulation_suite, p, s["sim_samples"]
                    )
                )
        return results

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)

    def generate_report(self) -> str:
        """
        Generate a plain-text acceptance report.

        Returns:
            Formatted report, one block per suite and parameter set
        """
        if not self.results:
            return "No acceptance results available."

        report = [f"=== tasep-ldp acceptance report ({self.scale}) ===\n"]
        for result in self.results:
            status = "PASS" if result.passed else "FAIL"
            report.append(f"[{status}] {result.suite_name} ({result.params_label})")
            report.append("-" * 40)
            for check in result.report.checks:
                line = f"  {'ok ' if check.passed else 'BAD'} {check.name}"
                line += f" ({check.checked} instances)"
                if check.first_failure is not None:
                    line += f" first failure at {check.first_failure}"
                report.append(line)
            report.append(f"  Time: {result.mean_time:.3f}s")
            report.append("")
        report.append("ALL PASSED" if self.passed else "SOME CHECKS FAILED")
        return "\n".join(report)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scale": self.scale,
            "passed": self.passed,
            "suites": [result.to_dict() for result in self.results],
        }


__all__ = [
    "SCALES",
    "SuiteResult",
    "algebra_suite",
    "coefficient_suite",
    "expansion_suite",
    "cgf_suite",
    "finite_n_suite",
    "rate_suite",
    "variational_suite",
    "simulation_suite",
    "AcceptanceRunner",
]
