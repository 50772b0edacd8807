#!/usr/bin/env python3
"""
Built-in geometries: flat boxes, round and perturbed spheres, Kaehler-Einstein
surface and Fubini-Study bases, and Berger-type circle-bundle metrics

Bundle metrics live on a local trivialization U x S^1 with fiber coordinate t:
    g_c = c^2 (dt + a) (x) (dt + a) + g_*,   da = -alpha omega,
with omega(X, Y) = <JX, Y> on the base.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

import numpy as np

from . import jet
from .analysis import (
    FLOOR,
    PROPER_THRESHOLD,
    a_condition_residual,
    normalized,
    properness_certificate,
)
from .chart import (
    ChartPatch,
    EndoField,
    OneFormField,
    TwoFormField,
    VectorField,
    gram_schmidt_frame,
    metric_at,
    norm,
    tensor_norm,
)
from .curvature import (
    codifferential_2form,
    covariant_derivative,
    christoffel,
    deformation_tensor_jet,
    exterior_derivative,
    frame_ricci,
    ricci_endomorphism,
    riemann,
    sectional_from_data,
)
from .errors import ConstructionError, PreconditionViolation
from .logger import get_logger
from .report import CheckReport, make_check
from .workers import parallel_map

logger = get_logger("atensor.constructions")

SPHERE_POLE_GAP = 0.2
VALIDATION_SAMPLES = 50


def coordinate_field(dim: int, index: int, scale: float = 1.0, name: str = "") -> VectorField:
    """scale * d/dx^index"""

    def evaluator(x):
        return [scale if i == index else 0.0 for i in range(dim)]

    return VectorField(dim, evaluator, name=name or f"d{index}")


# -- simple patches -----------------------------------------------------------


def flat_patch(n: int, lower: float = 0.0, upper: float = 1.0) -> ChartPatch:
    """Euclidean metric on the box [lower, upper]^n"""
    if n < 1:
        raise PreconditionViolation(f"Dimension must be positive, got {n}")

    def metric_eval(x):
        return [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]

    return ChartPatch(
        dim=n,
        lower=(lower,) * n,
        upper=(upper,) * n,
        metric_eval=metric_eval,
        coordinate_names=tuple(f"x{i + 1}" for i in range(n)),
        name=f"flat({n})",
        invariant_axes=tuple(range(n)),
    )


def round_sphere_patch(n: int, r: float = 1.0) -> ChartPatch:
    """Hyperspherical chart (theta_1 .. theta_{n-1}, phi) on S^n(r)"""
    if n < 2:
        raise PreconditionViolation(f"Sphere dimension must be at least 2, got {n}")
    if r <= 0:
        raise PreconditionViolation(f"Radius must be positive, got {r}")

    def metric_eval(x):
        g = [[0.0] * n for _ in range(n)]
        factor = r * r
        for k in range(n):
            g[k][k] = factor
            if k < n - 1:
                factor = factor * jet.sin(x[k]) ** 2
        return g

    return ChartPatch(
        dim=n,
        lower=(SPHERE_POLE_GAP,) * (n - 1) + (0.0,),
        upper=(math.pi - SPHERE_POLE_GAP,) * (n - 1) + (2 * math.pi,),
        metric_eval=metric_eval,
        coordinate_names=tuple(f"theta{i + 1}" for i in range(n - 1)) + ("phi",),
        name=f"sphere({n},{r})",
        invariant_axes=(n - 1,),
    )


def perturbed_sphere_patch(epsilon: float) -> ChartPatch:
    """diag(1, (1 + eps sin theta)^2 sin^2 theta), a surface of non-constant curvature"""
    if abs(epsilon) >= 0.5:
        raise PreconditionViolation(f"|epsilon| must be below 0.5, got {epsilon}")

    def metric_eval(x):
        s = jet.sin(x[0])
        return [[1.0, 0.0], [0.0, ((1.0 + epsilon * s) * s) ** 2]]

    return ChartPatch(
        dim=2,
        lower=(SPHERE_POLE_GAP, 0.0),
        upper=(math.pi - SPHERE_POLE_GAP, 2 * math.pi),
        metric_eval=metric_eval,
        coordinate_names=("theta", "phi"),
        name=f"perturbed({epsilon})",
        invariant_axes=(1,),
    )


# -- Kaehler-Einstein bases ---------------------------------------------------


@dataclass
class KaehlerBaseSpec:
    complex_dim: int
    patch: ChartPatch
    J: EndoField
    omega: TwoFormField
    unit_potential: OneFormField
    scalar_curvature: float
    alpha: float
    invariants: Dict[str, float] = field(default_factory=dict)
    name: str = ""


def _kaehler_form(patch: ChartPatch, J: EndoField) -> TwoFormField:
    """omega_ij = <J e_i, e_j> = J^a_i g_aj"""
    n = patch.dim

    def evaluator(x):
        g = patch.metric_eval(x)
        Jx = J.evaluator(x)
        return [[sum(Jx[a][i] * g[a][j] for a in range(n)) for j in range(n)] for i in range(n)]

    return TwoFormField(n, evaluator, name=f"omega({patch.name})")


def _base_point_invariants(patch: ChartPatch, J: EndoField, x: np.ndarray):
    data = riemann(patch, x)
    G = data.metric
    Jm = J.at(x)
    j_square = float(np.max(np.abs(Jm @ Jm + np.eye(patch.dim))))
    hermitian = float(np.max(np.abs(Jm.T @ G @ Jm - G))) / float(np.max(np.abs(G)))
    parallel = tensor_norm(covariant_derivative(patch, x, J), G, "dud")
    return data.scalar, data.ricci, G, j_square, hermitian, parallel


def validate_kaehler_base(
    patch: ChartPatch, J: EndoField, complex_dim: int, samples: Sequence[Sequence[float]]
) -> Dict[str, float]:
    """Measure alpha = tau/2n and the J, Hermitian, Kaehler and Einstein residuals"""
    points = [np.asarray(x, dtype=float) for x in samples]
    results = parallel_map(lambda x: _base_point_invariants(patch, J, x), points)
    taus = np.array([r[0] for r in results])
    alpha = float(np.mean(taus)) / (2 * complex_dim)
    einstein = max(
        float(np.linalg.norm(r[1] - alpha * r[2])) / float(np.linalg.norm(r[2])) for r in results
    )
    return {
        "alpha": alpha,
        "scalar_curvature": float(np.mean(taus)),
        "scalar_spread": float(np.max(taus) - np.min(taus)),
        "j_square": max(r[3] for r in results),
        "hermitian": max(r[4] for r in results),
        "kaehler": max(r[5] for r in results),
        "einstein": einstein,
    }


def _finish_base(
    complex_dim: int,
    patch: ChartPatch,
    J: EndoField,
    unit_potential: OneFormField,
    name: str,
    validation_samples: int,
) -> KaehlerBaseSpec:
    invariants = validate_kaehler_base(patch, J, complex_dim, patch.sample_points(validation_samples))
    limits = {"j_square": 1e-10, "hermitian": 1e-10, "kaehler": 1e-8, "einstein": 1e-8}
    for key, limit in limits.items():
        if invariants[key] > limit:
            raise ConstructionError(f"Base {name} fails its {key} invariant ({invariants[key]:.3e} > {limit:.0e})")
    if abs(invariants["alpha"]) < FLOOR:
        raise ConstructionError(f"Base {name} has vanishing scalar curvature")
    logger.debug("Kaehler base constructed", base=name, alpha=invariants["alpha"], einstein=invariants["einstein"])
    return KaehlerBaseSpec(
        complex_dim=complex_dim,
        patch=patch,
        J=J,
        omega=_kaehler_form(patch, J),
        unit_potential=unit_potential,
        scalar_curvature=invariants["scalar_curvature"],
        alpha=invariants["alpha"],
        invariants=invariants,
        name=name,
    )


def surface_base(K: float, validation_samples: int = VALIDATION_SAMPLES) -> KaehlerBaseSpec:
    """Round sphere of curvature K > 0 or hyperbolic plane of curvature K < 0"""
    if K == 0:
        raise PreconditionViolation("Surface base needs non-zero curvature")

    if K > 0:

        def metric_eval(x):
            return [[1.0 / K, 0.0], [0.0, jet.sin(x[0]) ** 2 / K]]

        def j_eval(x):
            s = jet.sin(x[0])
            return [[0.0, -s], [1.0 / s, 0.0]]

        def eta_eval(x):
            return [0.0, jet.cos(x[0]) / K]

        patch = ChartPatch(
            dim=2,
            lower=(SPHERE_POLE_GAP, 0.0),
            upper=(math.pi - SPHERE_POLE_GAP, 2 * math.pi),
            metric_eval=metric_eval,
            coordinate_names=("theta", "phi"),
            name=f"surface({K})",
            invariant_axes=(1,),
        )
    else:
        scale = 1.0 / abs(K)

        def metric_eval(x):
            h = scale / x[1] ** 2
            return [[h, 0.0], [0.0, h]]

        def j_eval(x):
            return [[0.0, -1.0], [1.0, 0.0]]

        def eta_eval(x):
            return [1.0 / (K * x[1]), 0.0]

        patch = ChartPatch(
            dim=2,
            lower=(-1.0, 0.5),
            upper=(1.0, 2.0),
            metric_eval=metric_eval,
            coordinate_names=("x", "y"),
            name=f"surface({K})",
            invariant_axes=(0,),
        )

    J = EndoField(2, j_eval, name=f"J({patch.name})")
    eta = OneFormField(2, eta_eval, name=f"eta({patch.name})")
    return _finish_base(1, patch, J, eta, patch.name, validation_samples)


def fubini_study_base(n: int, validation_samples: int = VALIDATION_SAMPLES) -> KaehlerBaseSpec:
    """Fubini-Study metric on the affine chart [-1, 1]^{2n} of CP^n

    Coordinates (x_1, y_1, ..., x_n, y_n) with z_j = x_j + i y_j and J d/dx_j = d/dy_j.
    """
    if n < 1:
        raise PreconditionViolation(f"Complex dimension must be positive, got {n}")
    m = 2 * n

    def metric_eval(x):
        xs, ys = x[0::2], x[1::2]
        D = 1.0 + sum(xs[j] * xs[j] + ys[j] * ys[j] for j in range(n))
        D2 = D * D
        g: List[List[Any]] = [[0.0] * m for _ in range(m)]
        for j in range(n):
            for k in range(j, n):
                A = ((D if j == k else 0.0) - (xs[j] * xs[k] + ys[j] * ys[k])) / D2
                B = -(xs[j] * ys[k] - ys[j] * xs[k]) / D2
                a, b, c, d = 2 * j, 2 * j + 1, 2 * k, 2 * k + 1
                g[a][c] = g[c][a] = A
                g[b][d] = g[d][b] = A
                g[a][d] = g[d][a] = B
                g[b][c] = g[c][b] = -B
        return g

    def j_eval(x):
        J = [[0.0] * m for _ in range(m)]
        for j in range(n):
            J[2 * j + 1][2 * j] = 1.0
            J[2 * j][2 * j + 1] = -1.0
        return J

    def eta_eval(x):
        xs, ys = x[0::2], x[1::2]
        D = 1.0 + sum(xs[j] * xs[j] + ys[j] * ys[j] for j in range(n))
        out: List[Any] = []
        for j in range(n):
            out.append(0.5 * ys[j] / D)
            out.append(-0.5 * xs[j] / D)
        return out

    names = []
    for j in range(n):
        names += [f"x{j + 1}", f"y{j + 1}"]
    patch = ChartPatch(
        dim=m,
        lower=(-1.0,) * m,
        upper=(1.0,) * m,
        metric_eval=metric_eval,
        coordinate_names=tuple(names),
        name=f"fubini({n})",
    )
    J = EndoField(m, j_eval, name=f"J({patch.name})")
    eta = OneFormField(m, eta_eval, name=f"eta({patch.name})")
    return _finish_base(n, patch, J, eta, patch.name, validation_samples)


# -- Berger-type bundles -------------------------------------------------------


@dataclass
class BergerBundleSpec:
    base: KaehlerBaseSpec
    c: float
    patch: ChartPatch
    xi: VectorField
    theta: OneFormField
    connection_form: OneFormField
    potential: OneFormField
    invariants: Dict[str, float] = field(default_factory=dict)

    @property
    def fiber_index(self) -> int:
        return self.base.patch.dim

    @property
    def predicted_lambda(self) -> float:
        """1/2 n c^2 alpha^2"""
        return 0.5 * self.base.complex_dim * self.c**2 * self.base.alpha**2

    @property
    def predicted_mu(self) -> float:
        """alpha (1 - 1/2 alpha c^2)"""
        a = self.base.alpha
        return a * (1.0 - 0.5 * a * self.c**2)

    @property
    def einstein(self) -> bool:
        return abs(self.predicted_lambda - self.predicted_mu) <= 1e-9 * max(1.0, abs(self.predicted_mu))

    def project(self, x: Sequence[float]) -> np.ndarray:
        return np.asarray(x, dtype=float)[: self.fiber_index]

    def horizontal_lift(self, x: Sequence[float], v_base: Sequence[float]) -> np.ndarray:
        """Lift with theta-bar(lift) = 0"""
        a = self.potential.at(self.project(x))
        v = np.asarray(v_base, dtype=float)
        return np.append(v, -float(a @ v))

    def horizontal_frame(self, x: Sequence[float]) -> List[np.ndarray]:
        frame = gram_schmidt_frame(self.patch, x, [self.xi.at(x)])
        return [e.components for e in frame[1:]]


def berger_bundle(
    base: KaehlerBaseSpec, c: float, validation_samples: int = VALIDATION_SAMPLES
) -> BergerBundleSpec:
    """g_c = c^2 theta-bar (x) theta-bar + p* g_* with theta-bar = dt + alpha eta"""
    if c <= 0:
        raise PreconditionViolation(f"Fiber scale must be positive, got {c}")
    m = base.patch.dim
    dim = m + 1
    alpha = base.alpha
    c2 = c * c

    def potential_eval(xb):
        return [alpha * e for e in base.unit_potential.evaluator(xb)]

    def metric_eval(x):
        xb = x[:m]
        gs = base.patch.metric_eval(xb)
        a = potential_eval(xb)
        g = [[gs[i][j] + c2 * a[i] * a[j] for j in range(m)] + [c2 * a[i]] for i in range(m)]
        g.append([c2 * a[j] for j in range(m)] + [c2])
        return g

    def xi_eval(x):
        return [0.0] * m + [1.0 / c]

    def theta_eval(x):
        return [c * ai for ai in potential_eval(x[:m])] + [c]

    def connection_eval(x):
        return potential_eval(x[:m]) + [1.0]

    bp = base.patch
    patch = ChartPatch(
        dim=dim,
        lower=tuple(bp.lower) + (0.0,),
        upper=tuple(bp.upper) + (1.0,),
        metric_eval=metric_eval,
        coordinate_names=tuple(bp.coordinate_names) + ("t",),
        name=f"berger({base.name},{c})",
        margin=bp.margin,
        invariant_axes=tuple(bp.invariant_axes) + (m,),
    )
    spec = BergerBundleSpec(
        base=base,
        c=c,
        patch=patch,
        xi=VectorField(dim, xi_eval, name="xi"),
        theta=OneFormField(dim, theta_eval, name="theta"),
        connection_form=OneFormField(dim, connection_eval, name="theta_bar"),
        potential=OneFormField(m, potential_eval, name="a"),
    )
    spec.invariants = validate_bundle(spec, patch.sample_points(validation_samples))
    if spec.invariants["curvature_form"] > 1e-9:
        raise ConstructionError(
            f"Connection potential fails d a = -alpha omega ({spec.invariants['curvature_form']:.3e})"
        )
    for key in ("unit_xi", "theta_xi", "formula"):
        if spec.invariants[key] > 1e-12:
            raise ConstructionError(f"Bundle {patch.name} fails its {key} invariant ({spec.invariants[key]:.3e})")
    return spec


def _block_metric(spec: BergerBundleSpec, x: np.ndarray) -> np.ndarray:
    """c^2 theta-bar (x) theta-bar + pullback of g_*"""
    m = spec.fiber_index
    tb = spec.connection_form.at(x)
    out = spec.c**2 * np.outer(tb, tb)
    out[:m, :m] += spec.base.patch.metric(spec.project(x))
    return out


def validate_bundle(spec: BergerBundleSpec, samples: Sequence[Sequence[float]]) -> Dict[str, float]:
    m = spec.fiber_index
    unit = theta_xi = curv = formula = 0.0
    for x in samples:
        x = np.asarray(x, dtype=float)
        G = metric_at(spec.patch, x, 0).value
        xi = spec.xi.at(x)
        unit = max(unit, abs(float(xi @ G @ xi) - 1.0))
        xibar = np.zeros(m + 1)
        xibar[m] = 1.0
        theta_xi = max(
            theta_xi,
            abs(float(spec.theta.at(x) @ xi) - 1.0),
            abs(float(spec.connection_form.at(x) @ xibar) - 1.0),
        )
        d_tb = exterior_derivative(spec.patch, x, spec.connection_form)
        expected = np.zeros((m + 1, m + 1))
        expected[:m, :m] = -spec.base.alpha * spec.base.omega.at(spec.project(x))
        curv = max(curv, float(np.max(np.abs(d_tb - expected))))
        formula = max(formula, float(np.max(np.abs(G - _block_metric(spec, x)))))
    return {"unit_xi": unit, "theta_xi": theta_xi, "curvature_form": curv, "formula": formula}


# -- O'Neill tensor -------------------------------------------------------------


@dataclass
class OneillReport:
    formula_residual: float
    norm_identity_residual: float
    omega_residual: float
    a_uv_norm_squared: float
    a_xi_xi: float
    nabla_xi_xi: float
    n_samples: int

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def _oneill_at(spec: BergerBundleSpec, x: np.ndarray):
    patch = spec.patch
    n = patch.dim
    mj = metric_at(patch, x, 1)
    G, dG = mj.value, mj.grad
    gamma = christoffel(patch, x).gamma
    xj = spec.xi.jet(x, 1)
    v, dv = xj.value, xj.grad
    T = deformation_tensor_jet(patch, x, spec.xi, 0).value
    theta = G @ v
    dtheta = np.einsum("bcp,c->bp", dG, v) + G @ dv

    def vertical(w):
        return float(theta @ w) * v

    A = np.zeros((n, n, n))
    for e in range(n):
        E = np.eye(n)[e]
        hE = E - vertical(E)
        for f in range(n):
            F = np.eye(n)[f]
            tF = float(theta @ F)
            # extensions hF = F - theta(F) xi and vF = theta(F) xi with F constant
            d_hF = -np.outer(v, dtheta[f]) - tF * dv
            d_vF = np.outer(v, dtheta[f]) + tF * dv
            nabla_hh = d_hF @ hE + np.einsum("apb,p,b->a", gamma, hE, F - vertical(F))
            nabla_hv = d_vF @ hE + np.einsum("apb,p,b->a", gamma, hE, vertical(F))
            A[:, e, f] = vertical(nabla_hh) + (nabla_hv - vertical(nabla_hv))

    # A_E F = <E, TF> xi + <xi, F> T E
    formula = np.einsum("eb,bf,a->aef", G, T, v) + np.einsum("f,ae->aef", theta, T)
    scale = max(tensor_norm(A, G, "udd"), tensor_norm(formula, G, "udd"))
    formula_res = normalized(tensor_norm(A - formula, G, "udd"), scale)

    d_theta = dtheta.T - dtheta
    frame = spec.horizontal_frame(x)
    norm_res = omega_res = 0.0
    auv = []
    for i, U in enumerate(frame):
        for j, V in enumerate(frame):
            A_UV = np.einsum("aef,e,f->a", A, U, V)
            tu = float(V @ G @ (T @ U))
            norm_res = max(norm_res, abs(float(A_UV @ G @ A_UV) - tu**2))
            omega_res = max(omega_res, norm(G, A_UV + 0.5 * float(U @ d_theta @ V) * v))
            if i != j:
                auv.append(float(A_UV @ G @ A_UV))
    a_xi_xi = norm(G, np.einsum("aef,e,f->a", A, v, v))
    nabla_xi_xi = norm(G, dv @ v + np.einsum("apb,p,b->a", gamma, v, v))
    return formula_res, norm_res, omega_res, float(np.median(auv)) if auv else 0.0, a_xi_xi, nabla_xi_xi


def oneill_a_check(spec: BergerBundleSpec, samples: Sequence[Sequence[float]]) -> OneillReport:
    """O'Neill A-tensor from projected covariant derivatives against its closed forms"""
    points = [np.asarray(x, dtype=float) for x in samples]
    results = np.array(parallel_map(lambda x: _oneill_at(spec, x), points))
    return OneillReport(
        formula_residual=float(np.max(results[:, 0])),
        norm_identity_residual=float(np.max(results[:, 1])),
        omega_residual=float(np.max(results[:, 2])),
        a_uv_norm_squared=float(np.median(results[:, 3])),
        a_xi_xi=float(np.max(results[:, 4])),
        nabla_xi_xi=float(np.max(results[:, 5])),
        n_samples=len(points),
    )


# -- submersion curvature -----------------------------------------------------------


@dataclass
class SubmersionCurvatureReport:
    horizontal_sectional_residual: float
    vertical_sectional_residual: float
    horizontal_ricci_residual: float
    scalar_residual: float
    horizontal_sectional: float
    vertical_sectional: float
    scalar_curvature: float
    base_scalar_curvature: float
    n_samples: int

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def _submersion_at(spec: BergerBundleSpec, x: np.ndarray):
    m = spec.fiber_index
    data = riemann(spec.patch, x)
    base_data = riemann(spec.base.patch, spec.project(x))
    G = data.metric
    v = spec.xi.at(x)
    T = deformation_tensor_jet(spec.patch, x, spec.xi, 0).value
    frame = spec.horizontal_frame(x)

    hs_res = vs_res = ric_res = 0.0
    ricci_h = frame_ricci(data, np.column_stack(frame))
    hs_values, vs_values = [], []
    for i, U in enumerate(frame):
        TU = T @ U
        tu2 = float(TU @ G @ TU)
        k_vert = sectional_from_data(data, U, v)
        vs_values.append(k_vert)
        vs_res = max(vs_res, abs(k_vert - tu2))
        rho_base = float(U[:m] @ base_data.ricci @ U[:m])
        ric_res = max(ric_res, abs(float(ricci_h[i, i]) - (rho_base - 2.0 * tu2)))
        for V in frame[i + 1:]:
            k = sectional_from_data(data, U, V)
            k_base = sectional_from_data(base_data, U[:m], V[:m])
            predicted = k_base - 3.0 * float(U @ G @ (T @ V)) ** 2
            hs_values.append(k)
            hs_res = max(hs_res, abs(k - predicted))

    normT2 = tensor_norm(T, G, "ud") ** 2
    scalar_res = abs(data.scalar - (base_data.scalar - normT2))
    return (
        hs_res,
        vs_res,
        ric_res,
        scalar_res,
        float(np.median(hs_values)) if hs_values else 0.0,
        float(np.median(vs_values)),
        data.scalar,
        base_data.scalar,
    )


def submersion_curvature_check(
    spec: BergerBundleSpec, samples: Sequence[Sequence[float]]
) -> SubmersionCurvatureReport:
    """Total-space curvature against base curvature and T at the projected point"""
    points = [np.asarray(x, dtype=float) for x in samples]
    results = np.array(parallel_map(lambda x: _submersion_at(spec, x), points))
    return SubmersionCurvatureReport(
        horizontal_sectional_residual=float(np.max(results[:, 0])),
        vertical_sectional_residual=float(np.max(results[:, 1])),
        horizontal_ricci_residual=float(np.max(results[:, 2])),
        scalar_residual=float(np.max(results[:, 3])),
        horizontal_sectional=float(np.median(results[:, 4])),
        vertical_sectional=float(np.median(results[:, 5])),
        scalar_curvature=float(np.median(results[:, 6])),
        base_scalar_curvature=float(np.median(results[:, 7])),
        n_samples=len(points),
    )


# -- bundle certificate -------------------------------------------------------------


SUITE = "theorem-3-3"


def _certificate_at(spec: BergerBundleSpec, S, x: np.ndarray):
    m = spec.fiber_index
    G = metric_at(spec.patch, x, 0).value
    Smat = S.at(x)
    v = spec.xi.at(x)
    T = deformation_tensor_jet(spec.patch, x, spec.xi, 0).value
    frame = spec.horizontal_frame(x)
    data = riemann(spec.patch, x)
    xb = spec.project(x)
    base_data = riemann(spec.base.patch, xb)

    phi = G @ Smat
    w = np.sort(np.linalg.eigvals(np.linalg.solve(G, 0.5 * (phi + phi.T))).real)
    Sxi = Smat @ v
    lam_x = float(v @ G @ Sxi)
    align = norm(G, Sxi - lam_x * v)
    horiz = max(norm(G, Smat @ U - spec.predicted_mu * U) for U in frame)
    rho_xi_h = max(abs(float(v @ data.ricci @ U)) for U in frame)
    normT2 = tensor_norm(T, G, "ud") ** 2
    tau_identity = abs(data.scalar - (base_data.scalar - normT2))

    # T restricted to horizontal lifts, pushed down to the base
    Tt = np.column_stack([(T @ spec.horizontal_lift(x, e))[:m] for e in np.eye(m)])
    J = spec.base.J.at(xb)
    expected_T = -0.5 * spec.c * spec.base.alpha * J
    T_tilde = tensor_norm(Tt - expected_T, base_data.metric, "ud")

    omega_tilde = TwoFormField(
        m,
        lambda y: [[-spec.c * spec.base.alpha * e for e in row] for row in spec.base.omega.evaluator(y)],
        name="omega_tilde",
    )
    delta = codifferential_2form(spec.base.patch, xb, omega_tilde)
    delta_norm = norm(np.linalg.inv(base_data.metric), delta)
    d_theta = exterior_derivative(spec.patch, x, spec.theta)
    omega_norm = tensor_norm(d_theta, G, "dd")
    return w, lam_x, align, horiz, rho_xi_h, normT2, tau_identity, T_tilde, delta_norm, data.scalar, omega_norm


def bundle_certificate(
    spec: BergerBundleSpec,
    samples: Sequence[Sequence[float]],
    tolerance: float = 1e-8,
    eigen_tolerance: float = 1e-7,
) -> List[CheckReport]:
    """One check per closed-form claim about the Ricci tensor of g_c"""
    points = [np.asarray(x, dtype=float) for x in samples]
    count = len(points)
    S = ricci_endomorphism(spec.patch)
    n, c, alpha = spec.base.complex_dim, spec.c, spec.base.alpha
    lam, mu = spec.predicted_lambda, spec.predicted_mu
    einstein = spec.einstein
    note = "Einstein case" if einstein else ""

    results = parallel_map(lambda x: _certificate_at(spec, S, x), points)
    expected = np.sort(np.array([lam] + [mu] * (2 * n)))
    eig_res = max(float(np.max(np.abs(r[0] - expected))) for r in results)
    lam_measured = np.array([r[1] for r in results])
    eig_all = np.array([r[0] for r in results])
    lam_column = int(np.argmin(np.abs(expected - lam)))
    measured_mu = float(np.median(eig_all if einstein else np.delete(eig_all, lam_column, axis=1)))
    normT2 = np.array([r[5] for r in results])
    tau = np.array([r[9] for r in results])
    omega_norm = np.array([r[10] for r in results])
    base_info = {"n": n, "c": c, "alpha": alpha}

    checks = [
        make_check(
            SUITE,
            "ricci-eigenvalues",
            "bundle Ricci spectrum: lambda = n c^2 alpha^2 / 2 (simple), mu = alpha (1 - alpha c^2 / 2)",
            eig_res,
            eigen_tolerance,
            count,
            details={
                **base_info,
                "lambda_formula": lam,
                "mu_formula": mu,
                "lambda_measured": float(np.median(lam_measured)),
                "mu_measured": measured_mu,
                "multiplicities": [2 * n + 1] if einstein else [1, 2 * n],
            },
            note=note,
        ),
        make_check(
            SUITE,
            "xi-eigenvector",
            "S xi = lambda xi",
            max(max(r[2] for r in results), float(np.max(np.abs(lam_measured - lam)))),
            eigen_tolerance,
            count,
            details={"lambda_measured": float(np.median(lam_measured))},
        ),
        make_check(
            SUITE,
            "horizontal-eigenvalue",
            "S U = mu U for horizontal U",
            max(r[3] for r in results),
            eigen_tolerance,
            count,
            details={"mu_formula": mu},
        ),
        make_check(
            SUITE,
            "scalar-curvature",
            "tau = tau_* - |T|^2",
            max(r[6] for r in results),
            eigen_tolerance,
            count,
            details={
                "tau_measured": float(np.median(tau)),
                "tau_formula": spec.base.scalar_curvature - lam,
            },
        ),
        make_check(
            SUITE,
            "deformation-norm",
            "|T|^2 = n c^2 alpha^2 / 2 = lambda",
            float(np.max(np.abs(normT2 - lam))),
            eigen_tolerance,
            count,
            details={"norm_T_squared": float(np.median(normT2))},
        ),
        make_check(
            SUITE,
            "deformation-complex-structure",
            "T restricted to the base equals -c alpha J / 2",
            max(r[7] for r in results),
            tolerance,
            count,
        ),
        make_check(
            SUITE,
            "base-form-coclosed",
            "delta(-c alpha omega) = 0 on the base",
            normalized(max(r[8] for r in results), abs(c * alpha)),
            tolerance,
            count,
        ),
        make_check(
            SUITE,
            "xi-ricci-eigenfield",
            "rho(xi, X) = 0 for horizontal X",
            max(r[4] for r in results),
            tolerance,
            count,
        ),
        make_check(
            SUITE,
            "constant-length",
            "lambda constant exactly when |d theta| is constant",
            max(float(np.ptp(lam_measured)), float(np.ptp(omega_norm))),
            tolerance,
            count,
            details={"lambda_spread": float(np.ptp(lam_measured)), "omega_spread": float(np.ptp(omega_norm))},
        ),
    ]

    a_report = a_condition_residual(spec.patch, S, points, tolerance)
    checks.append(
        make_check(
            SUITE,
            "a-condition",
            "Ricci endomorphism satisfies the cyclic condition",
            a_report.max_cyclic_residual,
            tolerance,
            count,
            details={"worst": a_report.worst(3)},
        )
    )

    if einstein:
        nabla_S = max(
            tensor_norm(
                covariant_derivative(spec.patch, x, S), metric_at(spec.patch, x, 0).value, "dud"
            )
            for x in points
        )
        checks.append(
            make_check(SUITE, "parallel", "Einstein value c^2 = 2/((n+1) alpha) gives nabla S = 0",
                       nabla_S, tolerance, count, note=note, invertible=False)
        )
    else:
        proper = properness_certificate(spec.patch, S, points, xi=spec.xi)
        # below 1 exactly when both norms clear the proper threshold everywhere
        margin = PROPER_THRESHOLD / max(min(proper.nablaS_min, proper.dtheta_min), FLOOR)
        checks.append(
            make_check(
                SUITE,
                "proper",
                "c^2 != 2/((n+1) alpha) gives a proper A-tensor",
                margin,
                1.0,
                count,
                details=proper.to_dict(),
                invertible=False,
                note="residual is the proper threshold over the smallest norm",
            )
        )
    logger.info(
        "Bundle certificate evaluated",
        bundle=spec.patch.name,
        passed=sum(ch.passed for ch in checks),
        total=len(checks),
    )
    return checks
