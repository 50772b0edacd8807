#!/usr/bin/env python3
"""
Command-line front end: verify, sweep and list

Exit codes: 0 all checks pass, 1 a check failed or a geometry error
occurred, 2 invalid usage.
"""

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .analysis import EigenStructure, ProperStatus, a_condition_residual, eigen_from_matrices, properness_certificate
from .cache import log_cache_stats
from .chart import metric_at
from .config import RunConfig, parse_tolerance
from .curvature import riemann
from .errors import GeometryError, UsageError
from .logger import get_logger, monitor_performance, set_level
from .report import CheckReport, VerificationReport, apply_expectation, make_check, new_report
from .suites import EXAMPLES, SUITE_ALIASES, SUITES, SuiteContext, build_example, check_requirements, resolve_suite

logger = get_logger("atensor.cli")

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

SWEEP_TOLERANCE = 1e-7
SWEEP_COLUMNS = (
    "c",
    "lambda_measured",
    "lambda_formula",
    "mu_measured",
    "mu_formula",
    "tau_measured",
    "a_residual",
    "proper_flag",
)
CHECK_COLUMNS = ("suite", "check", "paper_anchor", "residual", "tolerance", "pass", "n_samples", "note")


def _run_suite(suite, example, ctx: SuiteContext) -> List[CheckReport]:
    """Checks of one suite, each anchored to the result it certifies"""
    try:
        with monitor_performance(f"suite {suite.name}", example=example.name, samples=ctx.n_samples):
            checks = suite.runner(example, ctx)
        return [replace(c, paper_anchor=f"{suite.paper_anchor}: {c.paper_anchor}") for c in checks]
    except GeometryError as e:
        logger.error("Suite raised a geometry error", exception=e, suite=suite.name, example=example.name)
        return [
            make_check(
                suite.name,
                "error",
                suite.paper_anchor,
                math.inf,
                ctx.tolerance,
                ctx.n_samples,
                invertible=False,
                note=f"{type(e).__name__}: {e}",
            )
        ]


def run(config: RunConfig) -> Tuple[int, VerificationReport]:
    """Run every requested suite; writes the report when an output path is set"""
    config.validate()
    example = build_example(config.example, config.params)
    suites = [resolve_suite(name) for name in config.suites]
    for suite in suites:
        check_requirements(suite, example)

    points = example.patch.sample_points(config.samples, config.seed)
    checks: List[CheckReport] = []
    for suite in suites:
        ctx = SuiteContext(
            points=points,
            tolerance=config.tolerance_for(suite.name),
            seed=config.seed,
            geodesics=config.geodesics,
            t_end=config.t_end,
            integrator_tol=config.integrator_tol,
            energy_tol=config.energy_tol,
        )
        checks.extend(apply_expectation(_run_suite(suite, example, ctx), config.expect, config.rejection))

    report = new_report(config.to_dict(), checks)
    if config.output:
        write_report(report, Path(config.output), config.format)
    log_cache_stats()
    failures = report.failures()
    if failures:
        logger.warning("Checks failed", count=len(failures), checks=[f"{c.suite}/{c.check}" for c in failures])
    return (EXIT_PASS if report.passed else EXIT_FAIL), report


def checks_csv(checks: Sequence[CheckReport]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CHECK_COLUMNS)
    for c in checks:
        writer.writerow(
            [c.suite, c.check, c.paper_anchor, repr(c.residual), repr(c.tolerance), c.passed, c.n_samples, c.note]
        )
    return buffer.getvalue()


def write_report(report: VerificationReport, path: Path, fmt: str = "json") -> Path:
    if fmt == "json":
        return report.write(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(checks_csv(report.checks))
    return path


# -- sweep ---------------------------------------------------------------------


@dataclass
class SweepResult:
    rows: List[Dict[str, Any]] = field(default_factory=list)
    max_discrepancy: float = 0.0
    max_a_residual: float = 0.0

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in self.rows:
            writer.writerow([row[col] if isinstance(row[col], bool) else repr(row[col]) for col in SWEEP_COLUMNS])
        writer.writerow(["max_discrepancy", repr(self.max_discrepancy)] + [""] * (len(SWEEP_COLUMNS) - 2))
        return buffer.getvalue()


def _horizontal_eigenvalue(structure: EigenStructure, lam: float) -> float:
    """Eigenvalue of the largest cluster other than the one holding lam"""
    if structure.count == 1:
        return structure.eigenvalues[0]
    vertical = int(np.argmin([abs(e - lam) for e in structure.eigenvalues]))
    others = [i for i in range(structure.count) if i != vertical]
    return structure.eigenvalues[max(others, key=lambda i: structure.multiplicities[i])]


def _sweep_point(config: RunConfig, c: float) -> Dict[str, Any]:
    example = build_example("berger", {**config.params, "c": c})
    spec = example.bundle
    patch = spec.patch
    points = patch.sample_points(config.samples, config.seed)
    lam, mu, tau = [], [], []
    for x in points:
        data = riemann(patch, x)
        S = data.ricci_endomorphism
        v = spec.xi.at(x)
        G = metric_at(patch, x, 0).value
        lam_x = float(v @ G @ S @ v)
        lam.append(lam_x)
        mu.append(_horizontal_eigenvalue(eigen_from_matrices(x, G, S), lam_x))
        tau.append(data.scalar)
    tolerance = config.tolerance_for("a-condition")
    a_report = a_condition_residual(patch, example.S, points, tolerance)
    try:
        proper = properness_certificate(patch, example.S, points, xi=spec.xi).status == ProperStatus.PROPER
    except GeometryError:
        # a single eigenvalue leaves nothing to be proper
        proper = False
    return {
        "c": c,
        "lambda_measured": float(np.median(lam)),
        "lambda_formula": spec.predicted_lambda,
        "mu_measured": float(np.median(mu)),
        "mu_formula": spec.predicted_mu,
        "tau_measured": float(np.median(tau)),
        "a_residual": a_report.max_cyclic_residual,
        "proper_flag": proper,
        "_lambda_error": float(np.max(np.abs(np.array(lam) - spec.predicted_lambda))),
        "_mu_error": float(np.max(np.abs(np.array(mu) - spec.predicted_mu))),
    }


def sweep(config: RunConfig, c_min: float, c_max: float, steps: int) -> SweepResult:
    """Ricci eigenvalues of the bundle metric over a grid of fiber scales"""
    if config.example != "berger":
        raise UsageError("sweep needs the berger example")
    if not 0 < c_min < c_max:
        raise UsageError(f"Need 0 < c_min < c_max, got {c_min}, {c_max}")
    if steps < 2:
        raise UsageError(f"Need at least 2 steps, got {steps}")
    config.validate()

    result = SweepResult()
    for c in np.linspace(c_min, c_max, steps):
        with monitor_performance("sweep point", c=float(c)):
            row = _sweep_point(config, float(c))
        result.max_discrepancy = max(result.max_discrepancy, row.pop("_lambda_error"), row.pop("_mu_error"))
        result.max_a_residual = max(result.max_a_residual, row["a_residual"])
        result.rows.append(row)
    logger.info("Sweep finished", steps=steps, max_discrepancy=result.max_discrepancy)
    return result


# -- listing -------------------------------------------------------------------


def list_examples_and_suites(name: Optional[str] = None) -> str:
    """Examples with their parameters and suites with what they certify"""
    if name is not None:
        if name in EXAMPLES:
            return _example_line(name)
        if name in SUITES or name in SUITE_ALIASES:
            return _suite_line(resolve_suite(name).name)
        raise UsageError(f"Unknown example or suite {name!r}")
    lines = ["Examples:"]
    lines += ["  " + _example_line(n) for n in EXAMPLES]
    lines.append("Suites:")
    lines += ["  " + _suite_line(n) for n in SUITES]
    return "\n".join(lines)


def _example_line(name: str) -> str:
    schema = EXAMPLES[name]
    params = ", ".join(f"{k}={v}" for k, v in schema.defaults.items())
    return f"{name}({params}): {schema.description}"


def _suite_line(name: str) -> str:
    suite = SUITES[name]
    aliases = f" (alias: {', '.join(suite.aliases)})" if suite.aliases else ""
    needs = f" [needs {suite.requires}]" if suite.requires else ""
    return f"{name} → {suite.paper_anchor}: {suite.description}{aliases}{needs}"


# -- argument parsing ----------------------------------------------------------


PARAM_FLAGS = ("K", "c", "n", "r", "eps", "base", "tensor", "lam", "mu")


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--example", choices=list(EXAMPLES), help="Example geometry")
    parser.add_argument("--K", type=float, help="Base surface curvature")
    parser.add_argument("--c", type=float, help="Fiber scale")
    parser.add_argument("--n", type=int, help="Dimension parameter")
    parser.add_argument("--r", type=float, help="Sphere radius")
    parser.add_argument("--eps", type=float, help="Sphere perturbation")
    parser.add_argument("--base", choices=["surface", "fubini"], help="Bundle base")
    parser.add_argument("--tensor", choices=["ricci", "killing"], help="Tensor under test")
    parser.add_argument("--lam", type=float, help="Eigenvalue on the Killing direction")
    parser.add_argument("--mu", type=float, help="Eigenvalue orthogonal to the Killing direction")
    parser.add_argument("--samples", type=int, help="Sample points (default 200)")
    parser.add_argument("--seed", type=int, help="Sampling seed (default 42)")
    parser.add_argument("--tol", action="append", default=[], metavar="SUITE=VALUE", help="Tolerance override")
    parser.add_argument("--out", help="Output file")
    parser.add_argument("--format", choices=["json", "csv"], help="Output format")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(Path(args.config)) if args.config else RunConfig()
    if args.example:
        if args.example != config.example:
            config.params = {}
        config.example = args.example
    for flag in PARAM_FLAGS:
        value = getattr(args, flag, None)
        if value is not None:
            config.params[flag] = value
    overrides = {
        "suites": getattr(args, "suite", None),
        "samples": args.samples,
        "seed": args.seed,
        "geodesics": getattr(args, "geodesics", None),
        "t_end": getattr(args, "t_end", None),
        "output": args.out,
        "format": args.format,
        "expect": getattr(args, "expect", None),
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)
    for spec in args.tol:
        config.tolerances.update(parse_tolerance(spec))
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atensor", description="A-tensor and circle-bundle verification engine")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="Run verification suites on an example")
    _add_run_arguments(verify)
    verify.add_argument("--suite", action="append", help="Suite to run (repeatable)")
    verify.add_argument("--expect", choices=["pass", "fail"], help="Expected outcome")
    verify.add_argument("--geodesics", type=int, help="Geodesics for the geodesics suite (default 50)")
    verify.add_argument("--t-end", dest="t_end", type=float, help="Geodesic parameter length (default 10)")

    sweep_parser = sub.add_parser("sweep", help="Bundle Ricci eigenvalues over a range of fiber scales")
    _add_run_arguments(sweep_parser)
    sweep_parser.add_argument("--c-min", type=float, default=0.2)
    sweep_parser.add_argument("--c-max", type=float, default=1.4)
    sweep_parser.add_argument("--steps", type=int, default=13)

    listing = sub.add_parser("list", help="List examples and suites")
    listing.add_argument("name", nargs="?", help="Show a single example or suite")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "verbose", False):
        set_level("DEBUG")

    try:
        if args.command == "list":
            print(list_examples_and_suites(args.name))
            return EXIT_PASS

        config = config_from_args(args)
        if args.command == "sweep":
            result = sweep(config, args.c_min, args.c_max, args.steps)
            text = result.to_csv()
            if config.output:
                out = Path(config.output)
                out.parent.mkdir(parents=True, exist_ok=True)
                out.write_text(text, encoding="utf-8")
            else:
                sys.stdout.write(text)
            ok = result.max_discrepancy <= config.tolerances.get("theorem-3-3", SWEEP_TOLERANCE)
            ok = ok and result.max_a_residual <= config.tolerance_for("a-condition")
            return EXIT_PASS if ok else EXIT_FAIL

        code, report = run(config)
        if not config.output:
            sys.stdout.write(report.to_json() if config.format == "json" else checks_csv(report.checks))
            sys.stdout.write("\n")
        return code
    except UsageError as e:
        logger.error("Invalid usage", reason=str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except GeometryError as e:
        logger.error("Geometry error", exception=e)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
