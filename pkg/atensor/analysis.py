#!/usr/bin/env python3
"""
A-tensor analysis: cyclic condition, eigenstructure, eigen-distributions,
unit Killing fields and the two-eigenvalue construction
"""

import dataclasses
from collections import Counter
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .chart import (
    ChartPatch,
    ComputedField,
    EndoField,
    FunctionField,
    TangentVector,
    TensorField,
    g_symmetry_residual,
    inverse_metric,
    metric_at,
    norm,
    tensor_norm,
)
from .curvature import (
    christoffel,
    covariant_derivative_of_jet,
    deformation_tensor,
    deformation_tensor_jet,
    lie_derivative_metric,
    riemann,
)
from .errors import PreconditionViolation, VanishingFieldError
from .logger import get_logger
from .workers import parallel_map

logger = get_logger("atensor.analysis")

FLOOR = 1e-12
DEFAULT_TOL = 1e-8
SYMMETRY_TOL = 1e-10
PARALLEL_THRESHOLD = 1e-8
PROPER_THRESHOLD = 1e-4


def normalized(diff: float, scale: float) -> float:
    """Relative residual; absolute once the natural scale drops below the floor"""
    return diff / scale if scale > FLOOR else diff


def _points(samples: Any) -> List[np.ndarray]:
    return [np.asarray(x, dtype=float) for x in samples]


def _require_g_symmetric(G: np.ndarray, S: np.ndarray, x: np.ndarray, tol: float = SYMMETRY_TOL):
    asym = g_symmetry_residual(G, S)
    if asym > tol:
        raise PreconditionViolation(
            f"Endomorphism is not g-symmetric at {x.tolist()} (relative asymmetry {asym:.3e})"
        )


# -- cyclic condition ---------------------------------------------------------


@dataclass
class AConditionReport:
    max_cyclic_residual: float
    per_point: List[Tuple[List[float], float]]
    tolerance: float
    passed: bool

    def worst(self, count: int = 5) -> List[Tuple[List[float], float]]:
        return sorted(self.per_point, key=lambda item: item[1], reverse=True)[:count]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "max_cyclic_residual": self.max_cyclic_residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "worst": self.worst(),
        }


def nabla_phi(G: np.ndarray, nabla_S: np.ndarray) -> np.ndarray:
    """(nabla_p Phi)(e_i, e_b) = g_ab (nabla_p S)^a_i"""
    return np.einsum("ab,pai->pib", G, nabla_S)


def cyclic_sum(N: np.ndarray) -> np.ndarray:
    """N(X,Y,Z) + N(Z,X,Y) + N(Y,Z,X)"""
    return N + np.einsum("cab->abc", N) + np.einsum("bca->abc", N)


def cyclic_residual_at(patch: ChartPatch, S: TensorField, x: np.ndarray) -> float:
    sj = S.jet(x, 1)
    G = metric_at(patch, x, 0).value
    _require_g_symmetric(G, sj.value, x)
    gamma = christoffel(patch, x).gamma
    N = nabla_phi(G, covariant_derivative_of_jet(gamma, sj, "ud"))
    return normalized(tensor_norm(cyclic_sum(N), G, "ddd"), tensor_norm(N, G, "ddd"))


def a_condition_residual(
    patch: ChartPatch,
    S: TensorField,
    samples: Sequence[Sequence[float]],
    tolerance: float = DEFAULT_TOL,
) -> AConditionReport:
    """Max over samples of |cyclic sum of nabla Phi| / |nabla Phi|"""
    points = _points(samples)
    residuals = parallel_map(lambda x: cyclic_residual_at(patch, S, x), points)
    per_point = [(x.tolist(), r) for x, r in zip(points, residuals)]
    worst = max(residuals) if residuals else 0.0
    logger.debug("Cyclic condition evaluated", patch=patch.name, samples=len(points), residual=worst)
    return AConditionReport(worst, per_point, tolerance, worst <= tolerance)


# -- eigenstructure ----------------------------------------------------------


@dataclass
class EigenStructure:
    point: np.ndarray
    eigenvalues: List[float]
    multiplicities: List[int]
    eigenbases: List[List[TangentVector]]
    count: int
    borderline: bool
    cluster_tol: float

    @property
    def pattern(self) -> Tuple[int, ...]:
        return tuple(self.multiplicities)

    def basis_matrix(self, index: int) -> np.ndarray:
        return np.column_stack([v.components for v in self.eigenbases[index]])

    def projector(self, index: int, G: np.ndarray) -> np.ndarray:
        """g-orthogonal projector onto the eigenspace"""
        V = self.basis_matrix(index)
        return V @ V.T @ G


def eigen_from_matrices(
    point: np.ndarray, G: np.ndarray, S: np.ndarray, cluster_tol: Optional[float] = None
) -> EigenStructure:
    phi = G @ S
    w, V = linalg.eigh(0.5 * (phi + phi.T), G)
    spread = float(w[-1] - w[0])
    tol = cluster_tol if cluster_tol is not None else 1e-6 * (spread + 1.0)

    groups: List[List[int]] = [[0]]
    borderline = False
    for i in range(1, len(w)):
        gap = float(w[i] - w[i - 1])
        if tol / 10.0 <= gap < 10.0 * tol:
            borderline = True
        if gap < tol:
            groups[-1].append(i)
        else:
            groups.append([i])

    eigenvalues = [float(np.mean(w[g])) for g in groups]
    bases = [[TangentVector(point, V[:, i]) for i in g] for g in groups]
    return EigenStructure(
        point=point,
        eigenvalues=eigenvalues,
        multiplicities=[len(g) for g in groups],
        eigenbases=bases,
        count=len(groups),
        borderline=borderline,
        cluster_tol=tol,
    )


def eigenstructure(
    patch: ChartPatch,
    S: TensorField,
    x: Sequence[float],
    cluster_tol: Optional[float] = None,
) -> EigenStructure:
    """Clustered eigenvalues and g-orthonormal eigenbases of S at x"""
    point = patch.check_point(x)
    G = metric_at(patch, point, 0).value
    Smat = S.at(point)
    _require_g_symmetric(G, Smat, point)
    es = eigen_from_matrices(point, G, Smat, cluster_tol)
    if es.borderline:
        logger.warning("Borderline eigenvalue clustering", patch=patch.name, point=point.tolist())
    return es


def _eigenvalue_differentials(es: EigenStructure, G: np.ndarray, dS: np.ndarray) -> List[np.ndarray]:
    """d lambda_i = tr(P_i dS) / m_i; dS carries the derivative axis last"""
    out = []
    for i, m in enumerate(es.multiplicities):
        P = es.projector(i, G)
        out.append(np.einsum("ab,bap->p", P, dS) / m)
    return out


def projector_jet(es: EigenStructure, G: np.ndarray, S: np.ndarray, dS: np.ndarray, index: int):
    """P_i = prod_j (S - lambda_j I)/(lambda_i - lambda_j) with its partials"""
    n = S.shape[0]
    eye = np.eye(n)
    P = eye.copy()
    dP = np.zeros((n, n, n))
    if es.count == 1:
        return P, dP
    dlam = _eigenvalue_differentials(es, G, dS)
    li = es.eigenvalues[index]
    for j, lj in enumerate(es.eigenvalues):
        if j == index:
            continue
        gap = li - lj
        F = (S - lj * eye) / gap
        dF = (dS - eye[:, :, None] * dlam[j][None, None, :]) / gap - np.einsum(
            "ab,p->abp", S - lj * eye, dlam[index] - dlam[j]
        ) / gap**2
        dP = np.einsum("acp,cb->abp", dP, F) + np.einsum("ac,cbp->abp", P, dF)
        P = P @ F
    return P, dP


@dataclass
class EigenvalueConstancyReport:
    eigenvalues: List[float]
    multiplicities: List[int]
    max_deviation: List[float]
    max_directional_derivative: List[float]
    partitions: Dict[str, int]
    n_samples: int

    @property
    def consistent(self) -> bool:
        return len(self.partitions) == 1

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["consistent"] = self.consistent
        return out


def _nabla_S(patch: ChartPatch, S: TensorField, x: np.ndarray):
    sj = S.jet(x, 1)
    gamma = christoffel(patch, x).gamma
    return sj, gamma, covariant_derivative_of_jet(gamma, sj, "ud")


def eigenvalue_constancy(
    patch: ChartPatch,
    S: TensorField,
    samples: Sequence[Sequence[float]],
    cluster_tol: Optional[float] = None,
) -> EigenvalueConstancyReport:
    """Spread of each eigenvalue over samples and d lambda_i along its own eigenspace"""
    points = _points(samples)
    structures = parallel_map(lambda x: eigenstructure(patch, S, x, cluster_tol), points)
    partitions = Counter(es.pattern for es in structures)
    pattern, _ = partitions.most_common(1)[0]
    if len(partitions) > 1:
        logger.warning(
            "Eigenvalue count changes across samples",
            patch=patch.name,
            partitions={str(k): v for k, v in partitions.items()},
        )
    chosen = [es for es in structures if es.pattern == pattern]
    values = np.array([es.eigenvalues for es in chosen])
    median = np.median(values, axis=0)
    deviation = np.max(np.abs(values - median), axis=0)

    def directional(es: EigenStructure) -> List[float]:
        G = metric_at(patch, es.point, 0).value
        _, _, nab = _nabla_S(patch, S, es.point)
        out = []
        for i, m in enumerate(es.multiplicities):
            dlam = np.einsum("ab,pba->p", es.projector(i, G), nab) / m
            out.append(max(abs(float(dlam @ v.components)) for v in es.eigenbases[i]))
        return out

    derivs = np.array(parallel_map(directional, chosen))
    return EigenvalueConstancyReport(
        eigenvalues=[float(v) for v in median],
        multiplicities=list(pattern),
        max_deviation=[float(v) for v in deviation],
        max_directional_derivative=[float(v) for v in np.max(derivs, axis=0)],
        partitions={str(list(k)): v for k, v in partitions.items()},
        n_samples=len(points),
    )


# -- identities along eigen-distributions -----------------------------------


@dataclass
class EigenIdentityReport:
    gradient_identity_residual: float
    eigenfield_identity_residual: float
    checked_pairs: int
    skipped_pairs: int
    n_samples: int
    tolerance: float = DEFAULT_TOL

    @property
    def passed(self) -> bool:
        return max(self.gradient_identity_residual, self.eigenfield_identity_residual) <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def _eigen_identity_at(patch: ChartPatch, S: TensorField, x: np.ndarray, cluster_tol: Optional[float]):
    sj, gamma, nab = _nabla_S(patch, S, x)
    G = metric_at(patch, x, 0).value
    ginv = inverse_metric(G)
    _require_g_symmetric(G, sj.value, x)
    es = eigen_from_matrices(x, G, sj.value, cluster_tol)
    scale = tensor_norm(nab, G, "dud")
    dlam = [np.einsum("ab,pba->p", es.projector(i, G), nab) / m for i, m in enumerate(es.multiplicities)]

    # nabla S(X,X) = -1/2 grad(lambda_i) |X|^2 for X in D_i
    grad_res = 0.0
    for i, basis in enumerate(es.eigenbases):
        for v in basis:
            X = v.components
            lhs = np.einsum("pab,p,b->a", nab, X, X)
            rhs = -0.5 * (ginv @ dlam[i]) * float(X @ G @ X)
            grad_res = max(grad_res, normalized(norm(G, lhs - rhs), scale))

    # <nabla_X X, Y> = 1/2 Y(lambda_i) |X|^2 / (lambda_j - lambda_i)
    field_res = 0.0
    checked = skipped = 0
    for i in range(es.count):
        P, dP = projector_jet(es, G, sj.value, sj.grad, i)
        for j in range(es.count):
            if i == j:
                continue
            gap = es.eigenvalues[j] - es.eigenvalues[i]
            if abs(gap) <= 10.0 * es.cluster_tol:
                skipped += 1
                continue
            checked += 1
            for v in es.eigenbases[i]:
                X = P @ v.components
                dX = np.einsum("abp,b->ap", dP, v.components)
                nabla_XX = dX @ X + np.einsum("apb,p,b->a", gamma, X, X)
                for w in es.eigenbases[j]:
                    Y = w.components
                    lhs = float(Y @ G @ nabla_XX)
                    rhs = 0.5 * float(dlam[i] @ Y) / gap * float(X @ G @ X)
                    field_res = max(field_res, normalized(abs(lhs - rhs), scale / abs(gap)))
    return grad_res, field_res, checked, skipped


def eigen_identity_residuals(
    patch: ChartPatch,
    S: TensorField,
    samples: Sequence[Sequence[float]],
    cluster_tol: Optional[float] = None,
    tolerance: float = DEFAULT_TOL,
) -> EigenIdentityReport:
    """Gradient identity on each D_i and the eigenfield identity across eigenvalue pairs"""
    points = _points(samples)
    results = parallel_map(lambda x: _eigen_identity_at(patch, S, x, cluster_tol), points)
    skipped = sum(r[3] for r in results)
    if skipped:
        logger.warning("Near-degenerate eigenvalue pairs skipped", patch=patch.name, skipped=skipped)
    return EigenIdentityReport(
        gradient_identity_residual=max(r[0] for r in results),
        eigenfield_identity_residual=max(r[1] for r in results),
        checked_pairs=sum(r[2] for r in results),
        skipped_pairs=skipped,
        n_samples=len(points),
        tolerance=tolerance,
    )


@dataclass
class DistributionReport:
    eigen_index: int
    eigenvalue: float
    multiplicity: int
    integrability_residual: float
    autoparallel_residual: float
    nablaS_residual: float
    n_samples: int

    def vanishing(self, tolerance: float = DEFAULT_TOL) -> List[bool]:
        return [
            r <= tolerance
            for r in (self.integrability_residual, self.autoparallel_residual, self.nablaS_residual)
        ]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _distribution_at(patch: ChartPatch, S: TensorField, index: int, x: np.ndarray, cluster_tol):
    sj, gamma, nab = _nabla_S(patch, S, x)
    G = metric_at(patch, x, 0).value
    es = eigen_from_matrices(x, G, sj.value, cluster_tol)
    if index >= es.count:
        raise PreconditionViolation(f"Eigenvalue index {index} out of range at {x.tolist()} ({es.count} eigenvalues)")
    P, dP = projector_jet(es, G, sj.value, sj.grad, index)
    Q = np.eye(patch.dim) - es.projector(index, G)
    fields = [(P @ v.components, np.einsum("abp,b->ap", dP, v.components)) for v in es.eigenbases[index]]

    integ = auto = nabS = 0.0
    for X, dX in fields:
        for Y, dY in fields:
            bracket = dY @ X - dX @ Y
            nabla_XY = dY @ X + np.einsum("apb,p,b->a", gamma, X, Y)
            integ = max(integ, norm(G, Q @ bracket))
            auto = max(auto, norm(G, Q @ nabla_XY))
            nabS = max(nabS, norm(G, np.einsum("pab,p,b->a", nab, X, Y)))
    return es.eigenvalues[index], es.multiplicities[index], integ, auto, nabS


def distribution_checks(
    patch: ChartPatch,
    S: TensorField,
    eigen_index: int,
    samples: Sequence[Sequence[float]],
    cluster_tol: Optional[float] = None,
) -> DistributionReport:
    """Integrability, autoparallelism and nabla S on D_i from local eigenfields"""
    points = _points(samples)
    results = parallel_map(lambda x: _distribution_at(patch, S, eigen_index, x, cluster_tol), points)
    return DistributionReport(
        eigen_index=eigen_index,
        eigenvalue=float(np.median([r[0] for r in results])),
        multiplicity=results[0][1],
        integrability_residual=max(r[2] for r in results),
        autoparallel_residual=max(r[3] for r in results),
        nablaS_residual=max(r[4] for r in results),
        n_samples=len(points),
    )


def mixed_derivative_residual(
    patch: ChartPatch,
    S: TensorField,
    samples: Sequence[Sequence[float]],
    cluster_tol: Optional[float] = None,
) -> Optional[float]:
    """max |nabla S(X, Y)| for X in a one-dimensional D_lambda and Y in the other eigenspace

    None when S does not have exactly two eigenvalues with one of them simple.
    """

    def at(x: np.ndarray) -> Optional[float]:
        sj, _, nab = _nabla_S(patch, S, x)
        G = metric_at(patch, x, 0).value
        es = eigen_from_matrices(x, G, sj.value, cluster_tol)
        if es.count != 2 or 1 not in es.multiplicities:
            return None
        i = es.multiplicities.index(1)
        X = es.eigenbases[i][0].components
        return max(norm(G, np.einsum("pab,p,b->a", nab, X, w.components)) for w in es.eigenbases[1 - i])

    values = parallel_map(at, _points(samples))
    if any(v is None for v in values):
        return None
    return max(values)


# -- unit Killing fields -----------------------------------------------------


@dataclass
class KillingReport:
    killing_residual: float
    T: ComputedField
    T_antisymmetry: float
    T_xi_zero: float
    lie_preserves_Dmu: float
    norm_T_squared: float
    norm_T_squared_spread: float
    trace_nabla_T_residual: float
    n_samples: int

    def to_dict(self) -> Dict[str, Any]:
        out = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "T"}
        return out


def _require_unit(G: np.ndarray, xi_value: np.ndarray, x: np.ndarray, tol: float):
    length = norm(G, xi_value)
    if abs(length - 1.0) > tol:
        raise PreconditionViolation(
            f"Field is not unit at {x.tolist()} (|xi| = {length:.12f}); rescale the metric with conformal_unitize"
        )


def _killing_at(patch: ChartPatch, xi: TensorField, x: np.ndarray, unit_tol: float):
    mj = metric_at(patch, x, 1)
    G, dG = mj.value, mj.grad
    ginv = inverse_metric(G)
    xj = xi.jet(x, 1)
    v = xj.value
    _require_unit(G, v, x, unit_tol)

    Tj = deformation_tensor_jet(patch, x, xi, 1)
    T = Tj.value
    M = T.T @ G
    killing = tensor_norm(M + M.T, G, "dd")
    B = T.T @ G
    antisym = tensor_norm(B + B.T, G, "dd")
    t_xi = norm(G, T @ v)
    normT2 = tensor_norm(T, G, "ud") ** 2

    gamma = christoffel(patch, x).gamma
    nablaT = covariant_derivative_of_jet(gamma, Tj, "ud")
    trace = np.einsum("qp,qap->a", ginv, nablaT)
    trace_res = normalized(norm(G, trace + normT2 * v), normT2)

    # [xi, X] stays orthogonal to xi for X = e_k - theta(e_k) xi
    theta = G @ v
    dtheta = np.einsum("kcp,c->kp", dG, v) + G @ xj.grad
    lie = 0.0
    for k in range(patch.dim):
        X = -v * theta[k]
        X[k] += 1.0
        dX = -xj.grad * theta[k] - np.outer(v, dtheta[k])
        bracket = dX @ v - xj.grad @ X
        lie = max(lie, abs(float(v @ G @ bracket)))
    return killing, antisym, t_xi, normT2, trace_res, lie


def killing_and_T(
    patch: ChartPatch,
    xi: TensorField,
    samples: Sequence[Sequence[float]],
    unit_tol: float = 1e-10,
) -> KillingReport:
    """Killing residual of a unit field and the algebra of T = nabla xi"""
    points = _points(samples)
    results = np.array(parallel_map(lambda x: _killing_at(patch, xi, x, unit_tol), points))
    normT2 = results[:, 3]
    return KillingReport(
        killing_residual=float(np.max(results[:, 0])),
        T=deformation_tensor(patch, xi),
        T_antisymmetry=float(np.max(results[:, 1])),
        T_xi_zero=float(np.max(results[:, 2])),
        lie_preserves_Dmu=float(np.max(results[:, 5])),
        norm_T_squared=float(np.median(normT2)),
        norm_T_squared_spread=float(np.max(normT2) - np.min(normT2)),
        trace_nabla_T_residual=float(np.max(results[:, 4])),
        n_samples=len(points),
    )


@dataclass
class KillingCurvatureReport:
    killing_residual: float
    curvature_residual: float
    nabla_T_xi_residual: float
    jacobi_residual: float
    n_samples: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _killing_curvature_at(patch: ChartPatch, xi: TensorField, x: np.ndarray):
    data = riemann(patch, x)
    G, R = data.metric, data.riemann
    v = xi.at(x)
    Tj = deformation_tensor_jet(patch, x, xi, 1)
    T = Tj.value
    gamma = christoffel(patch, x).gamma
    nablaT = covariant_derivative_of_jet(gamma, Tj, "ud")

    # R(X, xi)Y = nabla T(X, Y)
    lhs = np.einsum("lsmv,v->mls", R, v)
    a = normalized(
        tensor_norm(lhs - nablaT, G, "dud"),
        max(tensor_norm(lhs, G, "dud"), tensor_norm(nablaT, G, "dud")),
    )
    # nabla T(X, xi) = -T^2 X
    lhs_b = np.einsum("qap,p->qa", nablaT, v)
    rhs_b = -(T @ T).T
    b = normalized(
        tensor_norm(lhs_b - rhs_b, G, "du"),
        max(tensor_norm(lhs_b, G, "du"), tensor_norm(rhs_b, G, "du")),
    )
    # <R(X, xi)xi, Y> = <TX, TY>
    lhs_c = np.einsum("lb,lsmv,s,v->mb", G, R, v, v)
    rhs_c = T.T @ G @ T
    c = normalized(
        tensor_norm(lhs_c - rhs_c, G, "dd"),
        max(tensor_norm(lhs_c, G, "dd"), tensor_norm(rhs_c, G, "dd")),
    )
    return a, b, c


def killing_curvature_check(
    patch: ChartPatch,
    xi: TensorField,
    samples: Sequence[Sequence[float]],
    killing_tol: float = 1e-9,
) -> KillingCurvatureReport:
    """Curvature identities of a unit Killing field, gated on the Killing residual"""
    points = _points(samples)
    gate = killing_and_T(patch, xi, points)
    if gate.killing_residual > killing_tol:
        raise PreconditionViolation(
            f"Field is not Killing (|L_xi g| = {gate.killing_residual:.3e} > {killing_tol:.0e})"
        )
    results = np.array(parallel_map(lambda x: _killing_curvature_at(patch, xi, x), points))
    return KillingCurvatureReport(
        killing_residual=gate.killing_residual,
        curvature_residual=float(np.max(results[:, 0])),
        nabla_T_xi_residual=float(np.max(results[:, 1])),
        jacobi_residual=float(np.max(results[:, 2])),
        n_samples=len(points),
    )


def _require_function_field(xi: TensorField) -> FunctionField:
    if not isinstance(xi, FunctionField):
        raise PreconditionViolation(f"Field {xi.name} must be given by a jet evaluator")
    return xi


def _unit_killing_gate(patch: ChartPatch, xi: TensorField, samples: Optional[Any], tol: float):
    points = _points(patch.sample_points(20) if samples is None else samples)
    for x in points:
        G = metric_at(patch, x, 0).value
        _require_unit(G, xi.at(x), x, tol)
        residual = tensor_norm(lie_derivative_metric(patch, x, xi), G, "dd")
        if residual > tol:
            raise PreconditionViolation(f"Field is not Killing at {x.tolist()} (|L_xi g| = {residual:.3e})")


def construct_S_from_killing(
    patch: ChartPatch,
    xi: TensorField,
    lam: float,
    mu: float,
    samples: Optional[Sequence[Sequence[float]]] = None,
    tol: float = 1e-9,
) -> EndoField:
    """S = mu Id + (lam - mu) xi (x) xi^flat for a unit Killing field xi"""
    xi = _require_function_field(xi)
    _unit_killing_gate(patch, xi, samples, tol)
    n = patch.dim

    def evaluator(x):
        g = patch.metric_eval(x)
        v = xi.evaluator(x)
        flat = [sum(g[b][c] * v[c] for c in range(n)) for b in range(n)]
        return [[(mu if a == b else 0.0) + (lam - mu) * v[a] * flat[b] for b in range(n)] for a in range(n)]

    return EndoField(n, evaluator, name=f"S[{lam},{mu}]({xi.name})")


def conformal_unitize(
    patch: ChartPatch,
    xi: TensorField,
    samples: Optional[Sequence[Sequence[float]]] = None,
    tol: float = 1e-8,
) -> ChartPatch:
    """Patch with metric g / g(xi, xi), in which the Killing field xi has unit length"""
    xi = _require_function_field(xi)
    points = _points(patch.sample_points(200) if samples is None else samples)
    n = patch.dim
    for x in points:
        G = metric_at(patch, x, 0).value
        v = xi.at(x)
        length = norm(G, v)
        if length < 1e-8:
            raise VanishingFieldError(f"Field {xi.name} vanishes at {x.tolist()}")
        residual = tensor_norm(lie_derivative_metric(patch, x, xi), G, "dd")
        if residual > tol * max(1.0, length**2):
            raise PreconditionViolation(f"Field is not Killing at {x.tolist()} (|L_xi g| = {residual:.3e})")

    def metric_eval(x):
        g = patch.metric_eval(x)
        v = xi.evaluator(x)
        length2 = sum(g[i][j] * v[i] * v[j] for i in range(n) for j in range(n))
        return [[g[i][j] / length2 for j in range(n)] for i in range(n)]

    return dataclasses.replace(patch, metric_eval=metric_eval, name=f"{patch.name}/unit", invariant_axes=())


# -- properness ---------------------------------------------------------------


class ProperStatus(Enum):
    PARALLEL = "parallel"
    PROPER = "proper"
    INCONCLUSIVE = "inconclusive"


@dataclass
class PropernessReport:
    nablaS_norm: float
    dtheta_norm: float
    codifferential_theta: float
    nablaS_min: float
    dtheta_min: float
    status: ProperStatus
    consistent: bool
    n_samples: int
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def parallel(self) -> bool:
        return self.status == ProperStatus.PARALLEL

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["status"] = self.status.value
        out["parallel"] = self.parallel
        return out


def _unit_field_from_projector(es, G, dG, S, dS, index):
    """Normalized P_i s and its partials, s the eigenvector at the point"""
    P, dP = projector_jet(es, G, S, dS, index)
    s = es.eigenbases[index][0].components
    u = P @ s
    du = np.einsum("abp,b->ap", dP, s)
    n2 = float(u @ G @ u)
    dn2 = np.einsum("acp,a,c->p", dG, u, u) + 2.0 * (G @ u) @ du
    length = np.sqrt(n2)
    dlength = dn2 / (2.0 * length)
    return u / length, du / length - np.outer(u, dlength) / n2


def _properness_at(patch: ChartPatch, S: TensorField, xi: Optional[TensorField], x: np.ndarray, cluster_tol):
    sj, gamma, nab = _nabla_S(patch, S, x)
    mj = metric_at(patch, x, 1)
    G, dG = mj.value, mj.grad
    ginv = inverse_metric(G)
    es = eigen_from_matrices(x, G, sj.value, cluster_tol)
    if es.count != 2 or 1 not in es.multiplicities:
        raise PreconditionViolation(
            f"Properness needs two eigenvalues with a simple one; found multiplicities {es.multiplicities}"
        )
    if xi is not None:
        xj = xi.jet(x, 1)
        v, dv = xj.value, xj.grad
    else:
        v, dv = _unit_field_from_projector(es, G, dG, sj.value, sj.grad, es.multiplicities.index(1))
    theta = G @ v
    dtheta_partial = np.einsum("bcp,c->bp", dG, v) + G @ dv
    dtheta = dtheta_partial.T - dtheta_partial
    nabla_theta = dtheta_partial.T - np.einsum("bpq,b->pq", gamma, theta)
    delta_theta = -float(np.einsum("pq,pq->", ginv, nabla_theta))
    return tensor_norm(nab, G, "dud"), tensor_norm(dtheta, G, "dd"), abs(delta_theta)


def properness_certificate(
    patch: ChartPatch,
    S: TensorField,
    samples: Sequence[Sequence[float]],
    xi: Optional[TensorField] = None,
    cluster_tol: Optional[float] = None,
) -> PropernessReport:
    """Compare |nabla S| with |d theta| for the simple eigenvalue's unit eigenfield"""
    points = _points(samples)
    results = np.array(parallel_map(lambda x: _properness_at(patch, S, xi, x, cluster_tol), points))
    nabS, dth = float(np.max(results[:, 0])), float(np.max(results[:, 1]))
    if nabS <= PARALLEL_THRESHOLD and dth <= PARALLEL_THRESHOLD:
        status = ProperStatus.PARALLEL
    elif nabS >= PROPER_THRESHOLD and dth >= PROPER_THRESHOLD:
        status = ProperStatus.PROPER
    else:
        status = ProperStatus.INCONCLUSIVE
    consistent = (nabS <= PARALLEL_THRESHOLD) == (dth <= PARALLEL_THRESHOLD)
    if not consistent:
        logger.warning("nabla S and d theta disagree on vanishing", patch=patch.name, nablaS=nabS, dtheta=dth)
    return PropernessReport(
        nablaS_norm=nabS,
        dtheta_norm=dth,
        codifferential_theta=float(np.max(results[:, 2])),
        nablaS_min=float(np.min(results[:, 0])),
        dtheta_min=float(np.min(results[:, 1])),
        status=status,
        consistent=consistent,
        n_samples=len(points),
    )
