"""
Command line interface for tasep-ldp.

Every subcommand parses (alpha, rho) as exact rationals, computes one table and
writes it as CSV (default) or as a single JSON object. Errors are reported on
stderr as one ``error=CODE message=...`` line and mapped to exit codes:
0 success, 1 usage, 2 uncovered regime, 3 numerical failure, 4 failed checks.
"""

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Any, Callable, Dict, List, NoReturn, Optional, Sequence, Tuple

from .acceptance import SCALES, AcceptanceRunner, algebra_suite, coefficient_suite
from .cgf import cgf_closed, cgf_finite_n, cgf_lower, cgf_upper
from .core import (
    CheckFailed,
    TasepError,
    UsageError,
    as_rational,
    format_decimal,
    format_rational,
    logger,
)
from .ldp import default_z_grid, rate_closed, rate_numeric
from .mpa import block_density_distribution
from .normalorder import coeff_table_rec1, coeff_table_rec2, coeff_table_rows
from .params import Params, make_params
from .reports import CheckReport
from .sim import InitialCondition, SimConfig, run_replicas

SCHEMA_VERSION = "1"
EXACT_TV_LIMIT = 14

Row = Dict[str, Any]


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


def _rational(text: str) -> Fraction:
    return as_rational(text)


def _int_list(text: str) -> Tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected N1,N2,..., got {text!r}") from exc
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("block lengths must be positive integers")
    return values


@dataclass
class RunConfig:
    """Everything one invocation needs, built from the parsed arguments."""

    command: str
    alpha: Optional[Fraction] = None
    rho: Optional[Fraction] = None
    theta_min: float = -3.0
    theta_max: float = 3.0
    theta_steps: int = 61
    finite_n: Tuple[int, ...] = ()
    z_min: Optional[float] = None
    z_max: Optional[float] = None
    z_steps: int = 99
    n: int = 8
    K: int = 64
    exact: bool = True
    recursion: str = "rec1"
    L: Optional[int] = None
    beta: Optional[float] = None
    seed: int = 0
    samples: int = 100_000
    burn_in: Optional[float] = None
    sample_gap: float = 1.0
    init: InitialCondition = InitialCondition.PRODUCT_STATIONARY
    replicas: int = 1
    workers: Optional[int] = None
    scale: str = "desk"
    with_simulation: bool = False
    output: Optional[str] = None
    summary: Optional[str] = None
    fmt: str = "csv"
    verbose: int = 0

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "RunConfig":
        """
        Build a RunConfig from parsed arguments.

        Raises:
            UsageError: If a grid has fewer than two points
        """
        values = {
            f.name: getattr(ns, f.name)
            for f in fields(cls)
            if getattr(ns, f.name, None) is not None
        }
        config = cls(**values)
        if config.theta_steps < 2 or config.z_steps < 2:
            raise UsageError("grids need at least 2 steps")
        if config.theta_max <= config.theta_min:
            raise UsageError("theta-max must exceed theta-min")
        return config

    def params(self) -> Params:
        if self.alpha is None or self.rho is None:
            raise UsageError("--alpha and --rho are required")
        return make_params(self.alpha, self.rho)

    def theta_grid(self) -> List[float]:
        span = self.theta_max - self.theta_min
        steps = self.theta_steps
        return [self.theta_min + span * k / (steps - 1) for k in range(steps)]

    def z_grid(self) -> List[float]:
        if self.z_min is None and self.z_max is None:
            return default_z_grid(self.z_steps)
        low = 0.05 if self.z_min is None else self.z_min
        high = 0.95 if self.z_max is None else self.z_max
        steps = self.z_steps
        return [low + (high - low) * k / (steps - 1) for k in range(steps)]


def _cell(value: Any) -> Any:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, float):
        return format_decimal(value)
    if value is None:
        return ""
    return value


def _json_value(value: Any) -> Any:
    if isinstance(value, Fraction):
        return format_rational(value)
    return value


def render_csv(rows: Sequence[Row], columns: Sequence[str]) -> str:
    """CSV with a header row, comma separator and LF line endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(column)) for column in columns])
    return buffer.getvalue()


def render_json(payload: Dict[str, Any]) -> str:
    body = {"schema_version": SCHEMA_VERSION}
    body.update(payload)
    return json.dumps(body, indent=2, default=_json_value) + "\n"


def configure_logging(verbosity: int) -> None:
    """WARNING by default, INFO with -v, DEBUG with -vv; always on stderr."""
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logger.setLevel(level)
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)


class TasepLdpCLI:
    """Dispatch table from subcommand names to handlers."""

    def __init__(self, stdout: Optional[Any] = None, stderr: Optional[Any] = None):
        self.stdout = stdout if stdout is not None else sys.stdout
        self.stderr = stderr if stderr is not None else sys.stderr
        self.commands: Dict[str, Callable[[RunConfig], int]] = {
            "verify": self._verify,
            "coeffs": self._coeffs,
            "cgf": self._cgf,
            "rate": self._rate,
            "dist": self._dist,
            "simulate": self._simulate,
            "compare": self._compare,
        }
        self._log = logger.getChild(self.__class__.__name__)

    def build_parser(self) -> argparse.ArgumentParser:
        parser = _Parser(
            prog="tasep-ldp",
            description="Block-density large deviations of the semi-infinite TASEP",
        )
        sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

        def command(name: str, help_text: str, needs_params: bool = True) -> Any:
            cmd = sub.add_parser(name, help=help_text)
            if needs_params:
                cmd.add_argument("--alpha", type=_rational, required=True)
                cmd.add_argument("--rho", type=_rational, required=True)
            cmd.add_argument("--output", help="write the table here (default stdout)")
            cmd.add_argument(
                "--format", dest="fmt", choices=("csv", "json"), default="csv"
            )
            cmd.add_argument("-v", "--verbose", action="count", default=0)
            return cmd

        verify = command("verify", "exact relation and coefficient checks")
        verify.add_argument("--n", type=int, default=8)
        verify.add_argument("--K", type=int, default=64)

        coeffs = command("coeffs", "normal-ordering coefficient table", False)
        coeffs.add_argument("--n", type=int, required=True)
        coeffs.add_argument("--recursion", choices=("rec1", "rec2"), default="rec1")

        cgf = command("cgf", "closed form, bounds and finite-n values of Lambda")
        cgf.add_argument("--theta-min", type=float, default=-3.0)
        cgf.add_argument("--theta-max", type=float, default=3.0)
        cgf.add_argument("--steps", dest="theta_steps", type=int, default=61)
        cgf.add_argument("--finite-n", type=_int_list, default=())
        cgf.add_argument("--workers", type=int)

        rate = command("rate", "rate function, closed form and numeric")
        rate.add_argument("--z-min", type=float)
        rate.add_argument("--z-max", type=float)
        rate.add_argument("--z-steps", type=int, default=99)
        rate.add_argument("--workers", type=int)

        dist = command("dist", "exact law of the particle count on sites 1..n")
        dist.add_argument("--n", type=int, required=True)
        dist.add_argument("--float", dest="exact", action="store_false")

        simulate = command("simulate", "kinetic Monte Carlo histogram and current")
        simulate.add_argument("--n", type=int, required=True)
        simulate.add_argument("--L", type=int)
        simulate.add_argument("--beta", type=float)
        simulate.add_argument("--seed", type=int, default=0)
        simulate.add_argument("--samples", type=int, default=100_000)
        simulate.add_argument("--burn-in", type=float)
        simulate.add_argument("--sample-gap", type=float, default=1.0)
        simulate.add_argument(
            "--init",
            type=InitialCondition,
            choices=list(InitialCondition),
            default=InitialCondition.PRODUCT_STATIONARY,
        )
        simulate.add_argument("--replicas", type=int, default=1)
        simulate.add_argument("--workers", type=int)
        simulate.add_argument("--summary", help="write the JSON summary here")

        compare = command("compare", "timed acceptance suites")
        compare.add_argument("--scale", choices=sorted(SCALES), default="desk")
        compare.add_argument("--with-simulation", action="store_true")
        return parser

    def run(self, argv: Sequence[str]) -> int:
        """Parse argv, run the subcommand and return the exit code."""
        try:
            ns = self.build_parser().parse_args(list(argv))
            config = RunConfig.from_namespace(ns)
            configure_logging(config.verbose)
            return self.commands[config.command](config)
        except SystemExit as exc:
            # --help
            return int(exc.code or 0)
        except TasepError as exc:
            print(exc.one_line(), file=self.stderr)
            return exc.exit_code
        except ValueError as exc:
            print(f"error=INVALID_ARGUMENT message={exc}", file=self.stderr)
            return 1
        except ArithmeticError as exc:
            print(f"error=NUMERICAL message={exc}", file=self.stderr)
            return 3

    def _emit(self, text: str, path: Optional[str]) -> None:
        if path is None:
            self.stdout.write(text)
            return
        with open(path, "w", newline="") as handle:
            handle.write(text)
        self._log.info("wrote %s", path)

    def _table(
        self,
        config: RunConfig,
        rows: Sequence[Row],
        columns: Sequence[str],
        meta: Optional[Dict[str, Any]] = None,
    ) -> None:
        if config.fmt == "json":
            payload = {"command": config.command}
            payload.update(meta or {})
            payload["rows"] = [
                {c: _json_value(r.get(c)) for c in columns} for r in rows
            ]
            self._emit(render_json(payload), config.output)
        else:
            self._emit(render_csv(rows, columns), config.output)

    def _sweep(
        self, config: RunConfig, func: Callable[[float], Row], grid: Sequence[float]
    ) -> List[Row]:
        # Executor.map yields in submission order.
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(func, grid))

    def _verify(self, config: RunConfig) -> int:
        p = config.params()
        report = CheckReport(f"verify alpha={p.alpha} rho={p.rho}")
        report.extend(algebra_suite(p, config.K, config.n, min(config.n, 12)))
        report.extend(coefficient_suite(config.n, config.n))
        columns = ["check", "passed", "checked", "first_failure", "detail"]
        self._table(
            config,
            report.to_rows(),
            columns,
            {"params": p.to_dict(), "passed": report.passed},
        )
        if not report.passed:
            failed = ", ".join(check.name for check in report.failures())
            raise CheckFailed(f"failing checks: {failed}")
        return 0

    def _coeffs(self, config: RunConfig) -> int:
        build = coeff_table_rec2 if config.recursion == "rec2" else coeff_table_rec1
        rows = [
            {"p": order, "j": j, "power": power, "coeff": coeff}
            for order, j, power, coeff in coeff_table_rows(build(config.n))
        ]
        self._table(config, rows, ["p", "j", "power", "coeff"], {"n": config.n})
        return 0

    def _cgf(self, config: RunConfig) -> int:
        p = config.params()
        finite = config.finite_n

        def row(theta: float) -> Row:
            closed = cgf_closed(p, theta)
            result: Row = {
                "theta": theta,
                "lambda_closed": closed.value,
                "lambda_upper": cgf_upper(p, theta).value,
                "lambda_lower": cgf_lower(p, theta).value,
                "branch": closed.branch.value,
            }
            for n in finite:
                result[f"lambda_n_{n}"] = cgf_finite_n(p, theta, n).value
            return result

        columns = ["theta", "lambda_closed", "lambda_upper", "lambda_lower", "branch"]
        columns += [f"lambda_n_{n}" for n in finite]
        rows = self._sweep(config, row, config.theta_grid())
        self._table(config, rows, columns, {"params": p.to_dict()})
        return 0

    def _rate(self, config: RunConfig) -> int:
        p = config.params()

        def row(z: float) -> Row:
            closed = rate_closed(p, z)
            return {
                "z": z,
                "rate_closed": closed.value,
                "rate_numeric": rate_numeric(p, z).value,
                "piece": closed.piece.value,
                "theta_star": closed.theta_star,
            }

        columns = ["z", "rate_closed", "rate_numeric", "piece", "theta_star"]
        rows = self._sweep(config, row, config.z_grid())
        self._table(config, rows, columns, {"params": p.to_dict()})
        return 0

    def _dist(self, config: RunConfig) -> int:
        p = config.params()
        dist = block_density_distribution(p, config.n, exact=config.exact)
        if config.exact:
            rows = [
                {"m": m, "prob": float(prob), "prob_exact": prob}
                for m, prob in enumerate(dist.probs)
            ]
            columns = ["m", "prob", "prob_exact"]
        else:
            rows = [{"m": m, "prob": prob} for m, prob in enumerate(dist.probs)]
            columns = ["m", "prob"]
        self._table(config, rows, columns, {"params": p.to_dict(), "n": config.n})
        return 0

    def _simulate(self, config: RunConfig) -> int:
        p = config.params()
        n = config.n
        sim = SimConfig.for_params(
            p,
            n,
            seed=config.seed,
            samples=config.samples,
            L=config.L,
            beta=config.beta,
            burn_in=config.burn_in,
            sample_gap=config.sample_gap,
            init=config.init,
        )
        sim.validate_block(n)
        dist = run_replicas(sim, n, config.replicas, workers=config.workers)

        exact: Optional[List[float]] = None
        if n <= EXACT_TV_LIMIT:
            exact = [float(x) for x in block_density_distribution(p, n).probs]
        frequencies = dist.frequencies()
        rows = []
        for m, count in enumerate(dist.counts):
            row: Row = {"m": m, "count": count, "frequency": float(frequencies[m])}
            if exact is not None:
                row["exact_prob"] = exact[m]
            rows.append(row)
        columns = ["m", "count", "frequency"]
        if exact is not None:
            columns.append("exact_prob")

        summary: Dict[str, Any] = {
            "params": p.to_dict(),
            "n": n,
            "L": sim.L,
            "beta": sim.beta,
            "seed": sim.seed,
            "replicas": config.replicas,
            "samples": dist.total,
            "c": float(p.c),
            "current_estimate": dist.current_estimate,
            "current_stderr": dist.current_stderr,
        }
        if exact is not None:
            summary["tv_distance"] = dist.tv_distance(exact)

        if config.fmt == "json":
            self._table(config, rows, columns, {"summary": summary})
        else:
            self._emit(render_csv(rows, columns), config.output)
        if config.summary is not None:
            self._emit(render_json({"command": "simulate", **summary}), config.summary)
        elif config.fmt == "csv":
            # stdout stays pure CSV; the summary goes to stderr as one JSON line
            line = {"schema_version": SCHEMA_VERSION, "command": "simulate", **summary}
            print(json.dumps(line, default=_json_value), file=self.stderr)
        return 0

    def _compare(self, config: RunConfig) -> int:
        p = config.params()
        runner = AcceptanceRunner(config.scale, config.with_simulation)
        runner.run_all([p])
        if config.fmt == "json":
            payload = {"command": "compare", "params": p.to_dict()}
            payload.update(runner.to_dict())
            self._emit(render_json(payload), config.output)
        else:
            self._emit(runner.generate_report() + "\n", config.output)
        if not runner.passed:
            raise CheckFailed("at least one acceptance suite failed")
        return 0


def run_cli(argv: Sequence[str]) -> int:
    """Run the command line on argv (without the program name)."""
    return TasepLdpCLI().run(argv)


def main() -> int:
    """Entry point for the ``tasep-ldp`` script."""
    return run_cli(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
