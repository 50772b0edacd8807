#!/usr/bin/env python3
"""
Example geometries and verification suites addressable by name
"""

from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .analysis import (
    ProperStatus,
    a_condition_residual,
    construct_S_from_killing,
    distribution_checks,
    eigen_identity_residuals,
    eigenstructure,
    eigenvalue_constancy,
    killing_and_T,
    killing_curvature_check,
    mixed_derivative_residual,
    properness_certificate,
)
from .chart import ChartPatch, TensorField, metric_at, tensor_norm
from .constructions import (
    BergerBundleSpec,
    KaehlerBaseSpec,
    berger_bundle,
    bundle_certificate,
    coordinate_field,
    flat_patch,
    fubini_study_base,
    oneill_a_check,
    perturbed_sphere_patch,
    round_sphere_patch,
    submersion_curvature_check,
    surface_base,
)
from .curvature import (
    bianchi_residual,
    christoffel,
    covariant_derivative,
    finite_difference_christoffel,
    finite_difference_metric_partials,
    finite_difference_riemann,
    metric_compatibility_residual,
    ricci_endomorphism,
    riemann,
)
from .errors import PreconditionViolation, UsageError
from .geodesics import (
    energy,
    integrate_batch,
    killing_momentum_drift,
    momentum_drift,
    conserved_quantity_drift,
    quadratic_form,
    sample_geodesic_starts,
)
from .logger import get_logger
from .report import CheckReport, make_check

logger = get_logger("atensor.suites")

ORACLE_POINTS = 100
ORACLE_TOL = 1e-6
NEGATIVE_DRIFT = 1e-3


# -- examples ------------------------------------------------------------------


@dataclass
class ExampleSchema:
    description: str
    defaults: Dict[str, Any]


EXAMPLES: Dict[str, ExampleSchema] = {
    "berger": ExampleSchema(
        "circle bundle metric c^2 theta-bar^2 + g_* over a surface (K) or Fubini-Study (n) base",
        {"base": "surface", "K": 1.0, "n": 1, "c": 0.8, "tensor": "ricci", "lam": 3.0, "mu": 7.0},
    ),
    "sphere": ExampleSchema("round sphere S^n of radius r", {"n": 2, "r": 1.0}),
    "perturbed": ExampleSchema(
        "surface diag(1, (1 + eps sin theta)^2 sin^2 theta) of non-constant curvature", {"eps": 0.3}
    ),
    "fubini": ExampleSchema("Fubini-Study metric on an affine chart of CP^n", {"n": 1}),
    "flat": ExampleSchema(
        "Euclidean box with unit Killing field d/dx1", {"n": 3, "tensor": "ricci", "lam": 3.0, "mu": 7.0}
    ),
}

PARAM_TYPES = {"K": float, "c": float, "r": float, "eps": float, "lam": float, "mu": float, "n": int, "base": str, "tensor": str}


@dataclass
class Example:
    name: str
    params: Dict[str, Any]
    patch: ChartPatch
    S: TensorField
    xi: Optional[TensorField] = None
    bundle: Optional[BergerBundleSpec] = None
    base: Optional[KaehlerBaseSpec] = None


def example_params(name: str, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Schema defaults updated with overrides, type-coerced; unknown keys are usage errors"""
    if name not in EXAMPLES:
        raise UsageError(f"Unknown example {name!r}; choose from {', '.join(EXAMPLES)}")
    params = dict(EXAMPLES[name].defaults)
    for key, value in (overrides or {}).items():
        if key not in params:
            raise UsageError(f"Example {name!r} has no parameter {key!r}")
        try:
            params[key] = PARAM_TYPES[key](value)
        except (TypeError, ValueError) as e:
            raise UsageError(f"Invalid value {value!r} for parameter {key!r}") from e
    return params


def build_example(name: str, overrides: Optional[Dict[str, Any]] = None) -> Example:
    params = example_params(name, overrides)
    xi = None
    bundle = None
    base = None
    try:
        if name == "berger":
            if params["base"] == "surface":
                base = surface_base(params["K"])
            elif params["base"] == "fubini":
                base = fubini_study_base(params["n"])
            else:
                raise UsageError(f"Unknown bundle base {params['base']!r}; choose surface or fubini")
            bundle = berger_bundle(base, params["c"])
            patch, xi = bundle.patch, bundle.xi
        elif name == "sphere":
            patch = round_sphere_patch(params["n"], params["r"])
        elif name == "perturbed":
            patch = perturbed_sphere_patch(params["eps"])
        elif name == "fubini":
            base = fubini_study_base(params["n"])
            patch = base.patch
        else:
            patch = flat_patch(params["n"])
            xi = coordinate_field(params["n"], 0, name="d1")
    except PreconditionViolation as e:
        raise UsageError(f"Invalid parameters for {name}: {e}") from e

    tensor = params.get("tensor", "ricci")
    if tensor == "ricci":
        S = ricci_endomorphism(patch)
    elif tensor == "killing":
        if xi is None:
            raise UsageError(f"Example {name!r} has no unit Killing field for --tensor killing")
        S = construct_S_from_killing(patch, xi, params["lam"], params["mu"])
    else:
        raise UsageError(f"Unknown tensor {tensor!r}; choose ricci or killing")
    logger.debug("Example built", example=name, patch=patch.name, tensor=S.name)
    return Example(name, params, patch, S, xi, bundle, base)


# -- suites --------------------------------------------------------------------


@dataclass
class SuiteContext:
    points: np.ndarray
    tolerance: float
    seed: int = 42
    geodesics: int = 50
    t_end: float = 10.0
    integrator_tol: float = 1e-10
    energy_tol: float = 1e-8

    @property
    def n_samples(self) -> int:
        return len(self.points)


Runner = Callable[[Example, SuiteContext], List[CheckReport]]


@dataclass
class Suite:
    name: str
    paper_anchor: str
    runner: Runner
    requires: str = ""
    default_tolerance: float = 1e-8
    description: str = ""
    aliases: Tuple[str, ...] = ()


def _a_condition(ex: Example, ctx: SuiteContext) -> List[CheckReport]:
    report = a_condition_residual(ex.patch, ex.S, ctx.points, ctx.tolerance)
    return [
        make_check(
            "a-condition",
            "cyclic-residual",
            "cyclic sum of nabla Phi vanishes",
            report.max_cyclic_residual,
            ctx.tolerance,
            ctx.n_samples,
            details={"worst": report.worst(5)},
        )
    ]


def _eigenstructure(ex: Example, ctx: SuiteContext) -> List[CheckReport]:
    report = eigenvalue_constancy(ex.patch, ex.S, ctx.points)
    details = report.to_dict()
    return [
        make_check(
            "eigenstructure",
            "eigenvalue-constancy",
            "eigenvalues constant over the samples",
            max(report.max_deviation),
            ctx.tolerance,
            ctx.n_samples,
            details=details,
        ),
        make_check(
            "eigenstructure",
            "directional-derivative",
            "each eigenvalue is constant along its own eigenspace",
            max(report.max_directional_derivative),
            ctx.tolerance,
            ctx.n_samples,
        ),
        make_check(
            "eigenstructure",
            "eigenvalue-count",
            "number of distinct eigenvalues constant over the samples",
            len(report.partitions) - 1,
            0.0,
            ctx.n_samples,
            details={"partitions": report.partitions},
            invertible=False,
        ),
    ]


def _eigen_identities(ex: Example, ctx: SuiteContext) -> List[CheckReport]:
    report = eigen_identity_residuals(ex.patch, ex.S, ctx.points, tolerance=ctx.tolerance)
    details = {"checked_pairs": report.checked_pairs, "skipped_pairs": report.skipped_pairs}
    return [
        make_check(
            "theorem-1-2",
            "gradient-identity",
            "nabla S(X, X) = -1/2 grad(lambda_i) |X|^2 on D_i",
            report.gradient_identity_residual,
            ctx.tolerance,
            ctx.n_samples,
            details=details,
        ),
        make_check(
            "theorem-1-2",
            "eigenfield-identity",
            "<nabla_X X, Y> = 1/2 Y(lambda_i) |X|^2 / (lambda_j - lambda_i)",
            report.eigenfield_identity_residual,
            ctx.tolerance,
            ctx.n_samples,
            details=details,
            note="near-degenerate pairs skipped" if report.skipped_pairs else "",
        ),
    ]


def _distributions(ex: Example, ctx: SuiteContext) -> List[CheckReport]:
    count = eigenstructure(ex.patch, ex.S, ctx.points[0]).count
    checks = []
    for index in range(count):
        report = distribution_checks(ex.patch, ex.S, index, ctx.points)
        residuals = [report.integrability_residual, report.autoparallel_residual, report.nablaS_residual]
        # all three vanish or none does
        together = max(residuals) if min(residuals) <= ctx.tolerance else 0.0
        checks.append(
            make_check(
                "distributions",
                f"D{index}-vanish-together",
                "integrable and constant, autoparallel and nabla S(D_i, D_i) = 0 are equivalent",
                together,
                ctx.tolerance,
                ctx.n_samples,
                details=report.to_dict(),
                invertible=False,
            )
        )
    mixed = mixed_derivative_residual(ex.patch, ex.S, ctx.points)
    if mixed is not None:
        checks.append(
            make_check(
                "distributions",
                "mixed-derivative",
                "nabla S(X, Y) = 0 for X in the simple eigenspace, Y in the other",
                mixed,
                ctx.tolerance,
                ctx.n_samples,
            )
        )
    return checks


def _lambda_of(ex: Example, ctx: SuiteContext) -> np.ndarray:
    out = []
    for x in ctx.points:
        G = metric_at(ex.patch, x, 0).value
        v = ex.xi.at(x)
        out.append(float(v @ G @ (ex.S.at(x) @ v)))
    return np.array(out)


def _killing(ex: Example, ctx: SuiteContext) -> List[CheckReport]:
    report = killing_and_T(ex.patch, ex.xi, ctx.points)
    suite, n = "killing", ctx.n_samples
    checks = [
        make_check(suite, "killing-residual", "L_xi g = 0", report.killing_residual, ctx.tolerance, n),
        make_check(suite, "T-antisymmetry", "<TX, Y> = -<X, TY>", report.T_antisymmetry, ctx.tolerance, n),
        make_check(suite, "T-xi", "T xi = nabla_xi xi = 0", report.T_xi_zero, ctx.tolerance, n),
        make_check(
            suite,
            "lie-preserves-orthogonal",
            "[xi, X] stays orthogonal to xi for X orthogonal to xi",
            report.lie_preserves_Dmu,
            ctx.tolerance,
            n,
        ),
        make_check(
            suite, "trace-nabla-T", "tr nabla T = -|T|^2 xi", report.trace_nabla_T_residual, ctx.tolerance, n
        ),
        make_check(
            suite,
            "norm-T-constant",
            "|T|^2 constant over the samples",
            report.norm_T_squared_spread,
            ctx.tolerance,
            n,
            details={"norm_T_squared": report.norm_T_squared},
        ),
    ]
    if ex.params.get("tensor", "ricci") == "ricci":
        lam = _lambda_of(ex, ctx)
        checks.append(
            make_check(
                suite,
                "lambda-equals-norm-T",
                "rho(xi, xi) = |T|^2",
                float(np.max(np.abs(lam - report.norm_T_squared))),
                ctx.tolerance,
                n,
                details={"lambda": float(np.median(lam)), "norm_T_squared": report.norm_T_squared},
            )
        )
    return checks


def _killing_curvature(ex: Example, ctx: SuiteContext) -> List[CheckReport]:
    report = killing_curvature_check(ex.patch, ex.xi, ctx.points)
    suite, n = "lemma-2-5", ctx.n_samples
    return [
        make_check(suite, "curvature-identity", "R(X, xi)Y = nabla T(X, Y)", report.curvature_residual, ctx.tolerance, n),
        make_check(suite, "nabla-T-xi", "nabla T(X, xi) = -T^2 X", report.nabla_T_xi_residual, ctx.tolerance, n),
        make_check(suite, "jacobi", "<R(X, xi)xi, Y> = <TX, TY>", report.jacobi_residual, ctx.tolerance, n),
    ]


def _oneill(ex: Example, ctx: SuiteContext) -> List[CheckReport]:
    spec = ex.bundle
    report = oneill_a_check(spec, ctx.points)
    suite, n = "oneill", ctx.n_samples
    expected = 0.25 * spec.c**2 * spec.base.alpha**2
    return [
        make_check(suite, "formula", "A_E F = <E, TF> xi + <xi, F> TE", report.formula_residual, ctx.tolerance, n),
        make_check(suite, "norm-identity", "|A_U V|^2 = <V, TU>^2", report.norm_identity_residual, ctx.tolerance, n),
        make_check(suite, "curvature-form", "A_U V = -1/2 d theta(U, V) xi", report.omega_residual, ctx.tolerance, n),
        make_check(
            suite,
            "horizontal-norm",
            "|A_U V|^2 = c^2 alpha^2 / 4 for orthonormal horizontal U, V",
            abs(report.a_uv_norm_squared - expected),
            ctx.tolerance,
            n,
            details={"measured": report.a_uv_norm_squared, "formula": expected},
        ),
        make_check(suite, "vertical-arguments", "A_xi xi = 0", report.a_xi_xi, ctx.tolerance, n),
        make_check(suite, "geodesic-fibers", "nabla_xi xi = 0", report.nabla_xi_xi, ctx.tolerance, n),
    ]


def _bundle_certificate(ex: Example, ctx: SuiteContext) -> List[CheckReport]:
    return bundle_certificate(ex.bundle, ctx.points, ctx.tolerance, eigen_tolerance=max(ctx.tolerance, 1e-7))


def _curvature(ex: Example, ctx: SuiteContext) -> List[CheckReport]:
    report = submersion_curvature_check(ex.bundle, ctx.points)
    suite, n = "curvature", ctx.n_samples
    details = report.to_dict()
    return [
        make_check(
            suite,
            "horizontal-sectional",
            "K(U^V) = K_*(U^V) - 3 <U, TV>^2",
            report.horizontal_sectional_residual,
            ctx.tolerance,
            n,
            details={"median": report.horizontal_sectional},
        ),
        make_check(
            suite,
            "vertical-sectional",
            "K(U^xi) = |TU|^2",
            report.vertical_sectional_residual,
            ctx.tolerance,
            n,
            details={"median": report.vertical_sectional},
        ),
        make_check(
            suite,
            "horizontal-ricci",
            "rho(U, U) = rho_*(U, U) - 2 |TU|^2",
            report.horizontal_ricci_residual,
            ctx.tolerance,
            n,
        ),
        make_check(suite, "scalar", "tau = tau_* - |T|^2", report.scalar_residual, ctx.tolerance, n, details=details),
    ]


def _geodesics(ex: Example, ctx: SuiteContext) -> List[CheckReport]:
    starts = sample_geodesic_starts(ex.patch, ctx.geodesics, ctx.seed)
    trajectories = integrate_batch(ex.patch, starts, ctx.t_end, ctx.integrator_tol)
    if not trajectories:
        raise PreconditionViolation(f"No geodesic could be integrated on {ex.patch.name}")
    suite, n = "geodesics", len(trajectories)
    g_quantity = energy(ex.patch)
    phi_quantity = quadratic_form(ex.patch, ex.S)
    energy_drift = [conserved_quantity_drift(ex.patch, t, g_quantity).relative_drift for t in trajectories]
    phi_drift = [conserved_quantity_drift(ex.patch, t, phi_quantity).relative_drift for t in trajectories]
    details = {
        "requested": ctx.geodesics,
        "integrated": n,
        "exited": sum(t.exited for t in trajectories),
        "above_negative_threshold": sum(d > NEGATIVE_DRIFT for d in phi_drift),
        "median_phi_drift": float(np.median(phi_drift)),
        "t_end": ctx.t_end,
    }
    checks = [
        make_check(
            suite,
            "phi-drift",
            "Phi(gamma', gamma') constant along geodesics",
            max(phi_drift),
            ctx.tolerance,
            n,
            details=details,
        ),
        make_check(
            suite,
            "energy-drift",
            "g(gamma', gamma') constant along geodesics",
            max(energy_drift),
            ctx.energy_tol,
            n,
            invertible=False,
        ),
    ]
    if ex.xi is not None:
        if ex.bundle is not None:
            drift = [killing_momentum_drift(ex.bundle, t).max_drift for t in trajectories]
        else:
            drift = [momentum_drift(ex.patch, ex.xi, t).max_drift for t in trajectories]
        checks.append(
            make_check(
                suite,
                "killing-momentum",
                "g(xi, gamma') constant along geodesics",
                max(drift),
                ctx.energy_tol,
                n,
                invertible=False,
            )
        )
    return checks


def _properness(ex: Example, ctx: SuiteContext) -> List[CheckReport]:
    suite, n = "properness", ctx.n_samples
    try:
        report = properness_certificate(ex.patch, ex.S, ctx.points, xi=ex.xi)
    except PreconditionViolation as e:
        # without a simple eigenvalue only parallelism can be decided
        nabla = max(
            tensor_norm(covariant_derivative(ex.patch, x, ex.S), metric_at(ex.patch, x, 0).value, "dud")
            for x in ctx.points
        )
        return [
            make_check(suite, "parallel", "nabla S = 0", nabla, ctx.tolerance, n, invertible=False, note=str(e))
        ]
    details = report.to_dict()
    return [
        make_check(
            suite,
            "consistency",
            "nabla S and d theta vanish together",
            0.0 if report.consistent else 1.0,
            0.0,
            n,
            details=details,
            invertible=False,
        ),
        make_check(
            suite,
            "decided",
            "status is parallel or proper",
            0.0 if report.status != ProperStatus.INCONCLUSIVE else 1.0,
            0.0,
            n,
            details={"status": report.status.value},
            invertible=False,
        ),
        make_check(
            suite,
            "theta-coclosed",
            "delta theta = 0",
            report.codifferential_theta,
            ctx.tolerance,
            n,
        ),
    ]


def _oracle(ex: Example, ctx: SuiteContext) -> List[CheckReport]:
    points = ctx.points[:ORACLE_POINTS]
    suite, n = "oracle", len(points)
    tol = ctx.tolerance
    metric_res = christoffel_res = riemann_res = bianchi = compat = 0.0
    for x in points:
        jet_dG = metric_at(ex.patch, x, 1).grad
        fd_dG = finite_difference_metric_partials(ex.patch, x)
        metric_res = max(metric_res, _relative(jet_dG, fd_dG))
        gamma = christoffel(ex.patch, x).gamma
        christoffel_res = max(christoffel_res, _relative(gamma, finite_difference_christoffel(ex.patch, x)))
        data = riemann(ex.patch, x)
        riemann_res = max(riemann_res, _relative(data.riemann, finite_difference_riemann(ex.patch, x)))
        bianchi = max(bianchi, bianchi_residual(data))
        compat = max(compat, metric_compatibility_residual(ex.patch, x))
    return [
        make_check(suite, "metric-partials", "jet metric partials match central differences", metric_res, tol, n, invertible=False),
        make_check(suite, "christoffel", "jet Christoffel symbols match central differences", christoffel_res, tol, n, invertible=False),
        make_check(suite, "riemann", "jet Riemann tensor matches central differences", riemann_res, tol, n, invertible=False),
        make_check(suite, "first-bianchi", "cyclic sum of R vanishes", bianchi, tol, n, invertible=False),
        make_check(suite, "metric-compatibility", "nabla g = 0", compat, tol, n, invertible=False),
    ]


def _relative(exact: np.ndarray, approx: np.ndarray) -> float:
    scale = float(np.max(np.abs(exact)))
    diff = float(np.max(np.abs(exact - approx)))
    return diff / scale if scale > 1e-12 else diff


SUITES: Dict[str, Suite] = {
    s.name: s
    for s in [
        Suite("a-condition", "Prop 1.1 (c)", _a_condition, description="cyclic condition on nabla Phi"),
        Suite(
            "eigenstructure",
            "Thm 1.2, Thm 2.1",
            _eigenstructure,
            description="eigenvalue count and constancy",
        ),
        Suite(
            "theorem-1-2",
            "Thm 1.2",
            _eigen_identities,
            description="eigenvalue gradient and eigenfield identities",
            aliases=("eigen-identities",),
        ),
        Suite(
            "distributions",
            "Cor 1.4",
            _distributions,
            description="integrability and autoparallelism of eigen-distributions",
        ),
        Suite("killing", "Lemma 2.4", _killing, requires="xi", description="unit Killing field and T = nabla xi"),
        Suite(
            "lemma-2-5",
            "Lemma 2.5",
            _killing_curvature,
            requires="xi",
            description="curvature identities of a unit Killing field",
            aliases=("killing-curvature",),
        ),
        Suite(
            "oneill",
            "Eqs. 3.1-3.2",
            _oneill,
            requires="bundle",
            description="O'Neill A-tensor of the circle bundle",
        ),
        Suite(
            "theorem-3-3",
            "Thm 3.3",
            _bundle_certificate,
            requires="bundle",
            description="closed-form Ricci spectrum of the bundle metric",
            aliases=("bundle-certificate",),
        ),
        Suite(
            "curvature",
            "Eqs. 3.3-3.4",
            _curvature,
            requires="bundle",
            description="submersion curvature relations",
        ),
        Suite(
            "geodesics",
            "Prop 1.1 (b)",
            _geodesics,
            default_tolerance=1e-6,
            description="Phi(gamma', gamma') conserved along geodesics",
        ),
        Suite("properness", "Thm 2.8", _properness, description="nabla S against d theta"),
        Suite(
            "oracle",
            "Levi-Civita formulas",
            _oracle,
            default_tolerance=ORACLE_TOL,
            description="jets against finite differences",
        ),
    ]
}

SUITE_ALIASES: Dict[str, str] = {alias: s.name for s in SUITES.values() for alias in s.aliases}


def resolve_suite(name: str) -> Suite:
    """Suite by name or alias"""
    canonical = SUITE_ALIASES.get(name, name)
    if canonical not in SUITES:
        raise UsageError(f"Unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[canonical]


def check_requirements(suite: Suite, example: Example) -> None:
    if suite.requires == "xi" and example.xi is None:
        raise UsageError(f"Suite {suite.name} needs an example with a unit Killing field (berger, flat)")
    if suite.requires == "bundle" and example.bundle is None:
        raise UsageError(f"Suite {suite.name} needs the berger example")
