#!/usr/bin/env python3
"""
Levi-Civita connection, curvature and derivative operators

Index conventions (all arrays in coordinate components):
    gamma[k, i, j]          Gamma^k_ij
    dgamma[k, i, j, m]      d_m Gamma^k_ij
    riemann[l, s, m, v]     dx^l( R(d_m, d_v) d_s ),  R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y]
    ricci[s, v]             R^l_{s l v}
Covariant derivatives put the new derivative slot first.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .cache import EvaluationCache, get_cache
from .chart import (
    ChartPatch,
    ComputedField,
    TangentVector,
    TensorField,
    inverse_metric,
    metric_at,
    orthonormal_frame,
)
from .errors import DegeneratePlaneError
from .jet import TensorJet

FD_STEP = 1e-5


@dataclass
class ChristoffelData:
    gamma: np.ndarray
    dgamma: Optional[np.ndarray] = None
    ddgamma: Optional[np.ndarray] = None


@dataclass
class CurvatureData:
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    metric: np.ndarray
    inverse: np.ndarray
    ricci_grad: Optional[np.ndarray] = None
    inverse_grad: Optional[np.ndarray] = None

    @property
    def ricci_endomorphism(self) -> np.ndarray:
        return self.inverse @ self.ricci

    def lowered(self) -> np.ndarray:
        """R_{a s m v} = g_{a l} R^l_{s m v}"""
        return np.einsum("al,lsmv->asmv", self.metric, self.riemann)


def _first_kind(dG: np.ndarray) -> np.ndarray:
    """C[l, i, j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij), trailing derivative axes kept"""
    return 0.5 * (
        np.einsum("jli...->lij...", dG) + np.einsum("ilj...->lij...", dG) - np.einsum("ijl...->lij...", dG)
    )


def christoffel_from_metric(mj: TensorJet, derivatives: int = 0) -> ChristoffelData:
    """Christoffel symbols from a metric jet carrying derivatives + 1 orders"""
    if mj.order < derivatives + 1:
        raise ValueError(f"Metric jet of order {mj.order} cannot give {derivatives} Christoffel derivatives")
    G, dG = mj.value, mj.grad
    ginv = inverse_metric(G)
    C = _first_kind(dG)
    gamma = np.einsum("kl,lij->kij", ginv, C)
    if derivatives == 0:
        return ChristoffelData(gamma)

    dginv = -np.einsum("ka,abm,bl->klm", ginv, dG, ginv)
    dC = _first_kind(mj.hess)
    dgamma = np.einsum("klm,lij->kijm", dginv, C) + np.einsum("kl,lijm->kijm", ginv, dC)
    if derivatives == 1:
        return ChristoffelData(gamma, dgamma)

    ddG = mj.hess
    ddginv = -(
        np.einsum("kap,abm,bl->klmp", dginv, dG, ginv)
        + np.einsum("ka,abmp,bl->klmp", ginv, ddG, ginv)
        + np.einsum("ka,abm,blp->klmp", ginv, dG, dginv)
    )
    ddC = _first_kind(mj.third)
    ddgamma = (
        np.einsum("klmp,lij->kijmp", ddginv, C)
        + np.einsum("klm,lijp->kijmp", dginv, dC)
        + np.einsum("klp,lijm->kijmp", dginv, dC)
        + np.einsum("kl,lijmp->kijmp", ginv, ddC)
    )
    return ChristoffelData(gamma, dgamma, ddgamma)


def christoffel(
    patch: ChartPatch,
    x: Sequence[float],
    derivatives: int = 0,
    cache: Optional[EvaluationCache] = None,
    use_cache: bool = True,
) -> ChristoffelData:
    """Gamma^k_ij at x, optionally with its first or second partials"""
    if not use_cache:
        return christoffel_from_metric(patch.metric_jet(x, derivatives + 1), derivatives)
    cache = cache or get_cache()
    key = EvaluationCache.point_key(patch, x, "christoffel", derivatives)
    return cache.get_or_set(
        key,
        lambda: christoffel_from_metric(metric_at(patch, x, derivatives + 1, cache), derivatives),
    )


def riemann_from_christoffel(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    return (
        np.einsum("lvsm->lsmv", dgamma)
        - np.einsum("lmsv->lsmv", dgamma)
        + np.einsum("lma,avs->lsmv", gamma, gamma)
        - np.einsum("lva,ams->lsmv", gamma, gamma)
    )


def _riemann_grad(ch: ChristoffelData) -> np.ndarray:
    g, dg, ddg = ch.gamma, ch.dgamma, ch.ddgamma
    return (
        np.einsum("lvsmp->lsmvp", ddg)
        - np.einsum("lmsvp->lsmvp", ddg)
        + np.einsum("lmap,avs->lsmvp", dg, g)
        + np.einsum("lma,avsp->lsmvp", g, dg)
        - np.einsum("lvap,ams->lsmvp", dg, g)
        - np.einsum("lva,amsp->lsmvp", g, dg)
    )


def riemann(
    patch: ChartPatch,
    x: Sequence[float],
    derivatives: int = 0,
    cache: Optional[EvaluationCache] = None,
) -> CurvatureData:
    """Riemann, Ricci and scalar curvature at x

    With derivatives=1 the Ricci tensor's coordinate partials are included,
    which needs third partials of the metric.
    """
    cache = cache or get_cache()
    key = EvaluationCache.point_key(patch, x, "curvature", derivatives)

    def compute() -> CurvatureData:
        ch = christoffel(patch, x, derivatives + 1, cache)
        mj = metric_at(patch, x, derivatives + 2, cache)
        G = mj.value
        ginv = inverse_metric(G)
        R = riemann_from_christoffel(ch.gamma, ch.dgamma)
        ricci = np.einsum("lslv->sv", R)
        ricci = 0.5 * (ricci + ricci.T)
        scalar = float(np.einsum("sv,sv->", ginv, ricci))
        data = CurvatureData(R, ricci, scalar, G, ginv)
        if derivatives >= 1:
            dR = _riemann_grad(ch)
            dricci = np.einsum("lslvp->svp", dR)
            data.ricci_grad = 0.5 * (dricci + dricci.transpose(1, 0, 2))
            data.inverse_grad = -np.einsum("ka,abm,bl->klm", ginv, mj.grad, ginv)
        return data

    return cache.get_or_set(key, compute)


def ricci_endomorphism(patch: ChartPatch) -> ComputedField:
    """S = g^{-1} rho as a field with first derivatives"""

    def jet_fn(x: np.ndarray, order: int) -> TensorJet:
        data = riemann(patch, x, derivatives=min(order, 1))
        S = data.inverse @ data.ricci
        if order == 0:
            return TensorJet(S)
        dS = np.einsum("klm,lj->kjm", data.inverse_grad, data.ricci) + np.einsum(
            "kl,ljm->kjm", data.inverse, data.ricci_grad
        )
        return TensorJet(S, dS)

    return ComputedField(patch.dim, "ud", jet_fn, max_order=1, name=f"ricci({patch.name})")


def covariant_derivative_of_jet(gamma: np.ndarray, tj: TensorJet, pattern: str) -> np.ndarray:
    """nabla T with the derivative slot first, from a first-order jet of T"""
    T = tj.value
    out = np.moveaxis(tj.grad, -1, 0).copy()
    for k, kind in enumerate(pattern):
        if kind == "u":
            term = np.tensordot(gamma, T, axes=([2], [k]))
            term = np.moveaxis(np.moveaxis(term, 1, 0), 1, 1 + k)
            out += term
        else:
            term = np.tensordot(gamma, T, axes=([0], [k]))
            term = np.moveaxis(term, 1, 1 + k)
            out -= term
    return out


def covariant_derivative(patch: ChartPatch, x: Sequence[float], tensor_field: TensorField) -> np.ndarray:
    """nabla T(X0, X1, ..., Xk) = (nabla_X0 T)(X1, ..., Xk)"""
    gamma = christoffel(patch, x).gamma
    return covariant_derivative_of_jet(gamma, tensor_field.jet(x, 1), tensor_field.index_pattern)


def sectional_curvature(
    patch: ChartPatch,
    x: Sequence[float],
    u: TangentVector,
    v: TangentVector,
) -> float:
    """K(u^v) = <R(u,v)v,u> / (|u|^2 |v|^2 - <u,v>^2)"""
    uc = u.components if isinstance(u, TangentVector) else np.asarray(u, dtype=float)
    vc = v.components if isinstance(v, TangentVector) else np.asarray(v, dtype=float)
    data = riemann(patch, x)
    return sectional_from_data(data, uc, vc)


def sectional_from_data(data: CurvatureData, u: np.ndarray, v: np.ndarray) -> float:
    G = data.metric
    uu, vv, uv = u @ G @ u, v @ G @ v, u @ G @ v
    denom = uu * vv - uv * uv
    if denom < 1e-12 * uu * vv or uu == 0.0 or vv == 0.0:
        raise DegeneratePlaneError("Vectors do not span a plane")
    numer = np.einsum("asmv,s,m,v,a->", data.lowered(), v, u, v, u)
    return float(numer / denom)


def lie_derivative_metric(patch: ChartPatch, x: Sequence[float], xi: TensorField) -> np.ndarray:
    """(L_xi g)_ij = nabla_i xi_j + nabla_j xi_i"""
    G = metric_at(patch, x, 0).value
    nab = covariant_derivative(patch, x, xi)
    M = nab @ G
    return M + M.T


def exterior_derivative(patch: ChartPatch, x: Sequence[float], theta: TensorField) -> np.ndarray:
    """(d theta)_ij = d_i theta_j - d_j theta_i"""
    patch.check_point(x)
    grad = theta.jet(x, 1).grad
    return grad.T - grad


def codifferential_2form(
    patch: ChartPatch,
    x: Sequence[float],
    omega: TensorField,
    frame: Optional[np.ndarray] = None,
) -> np.ndarray:
    """(delta Omega)_j = -sum_a (nabla_{E_a} Omega)(E_a, d_j)

    Without a frame the trace uses g^{pq}; frame columns must be g-orthonormal.
    """
    nab = covariant_derivative(patch, x, omega)
    if frame is None:
        ginv = inverse_metric(metric_at(patch, x, 0).value)
        return -np.einsum("pq,pqj->j", ginv, nab)
    frame = np.asarray(frame, dtype=float)
    return -np.einsum("pa,qa,pqj->j", frame, frame, nab)


def metric_compatibility_residual(patch: ChartPatch, x: Sequence[float]) -> float:
    """max |nabla g| at x"""
    mj = metric_at(patch, x, 1)
    gamma = christoffel(patch, x).gamma
    nab = covariant_derivative_of_jet(gamma, mj, "dd")
    return float(np.max(np.abs(nab)))


def deformation_tensor_jet(patch: ChartPatch, x: Sequence[float], xi: TensorField, order: int = 1) -> TensorJet:
    """T^a_p = nabla_p xi^a, with its coordinate partials when order is 1"""
    xj = xi.jet(x, order + 1)
    ch = christoffel(patch, x, order)
    T = xj.grad + np.einsum("apb,b->ap", ch.gamma, xj.value)
    if order == 0:
        return TensorJet(T)
    dT = (
        xj.hess
        + np.einsum("apbm,b->apm", ch.dgamma, xj.value)
        + np.einsum("apb,bm->apm", ch.gamma, xj.grad)
    )
    return TensorJet(T, dT)


def deformation_tensor(patch: ChartPatch, xi: TensorField) -> ComputedField:
    return ComputedField(
        patch.dim,
        "ud",
        lambda x, order: deformation_tensor_jet(patch, x, xi, order),
        max_order=1,
        name=f"nabla({xi.name})",
    )


def bianchi_residual(data: CurvatureData) -> float:
    """First Bianchi identity relative to |R|"""
    R = data.riemann
    cyc = R + np.einsum("lmvs->lsmv", R) + np.einsum("lvsm->lsmv", R)
    scale = float(np.linalg.norm(R))
    return float(np.linalg.norm(cyc)) / scale if scale > 1e-12 else float(np.linalg.norm(cyc))


def frame_ricci(data: CurvatureData, frame: Optional[np.ndarray] = None) -> np.ndarray:
    """Ricci components in a g-orthonormal frame (Cholesky frame by default)"""
    E = orthonormal_frame(data.metric) if frame is None else frame
    return E.T @ data.ricci @ E


# -- finite-difference oracles ----------------------------------------------


def finite_difference_metric_partials(patch: ChartPatch, x: Sequence[float], h: float = FD_STEP) -> np.ndarray:
    """Central differences of g_ij; same layout as metric_at(...).grad"""
    point = np.asarray(x, dtype=float)
    n = patch.dim
    out = np.zeros((n, n, n))
    for k in range(n):
        step = np.zeros(n)
        step[k] = h
        out[:, :, k] = (patch.metric(point + step) - patch.metric(point - step)) / (2 * h)
    return out


def finite_difference_christoffel(patch: ChartPatch, x: Sequence[float], h: float = FD_STEP) -> np.ndarray:
    """Levi-Civita formula fed with finite-difference metric partials"""
    G = patch.metric(x)
    dG = finite_difference_metric_partials(patch, x, h)
    return np.einsum("kl,lij->kij", inverse_metric(G), _first_kind(dG))


def finite_difference_riemann(patch: ChartPatch, x: Sequence[float], h: float = FD_STEP) -> np.ndarray:
    """Riemann tensor with d Gamma taken by central differences of jet Christoffels"""
    point = np.asarray(x, dtype=float)
    n = patch.dim
    gamma = christoffel(patch, point, use_cache=False).gamma
    dgamma = np.zeros((n, n, n, n))
    for m in range(n):
        step = np.zeros(n)
        step[m] = h
        plus = christoffel(patch, point + step, use_cache=False).gamma
        minus = christoffel(patch, point - step, use_cache=False).gamma
        dgamma[..., m] = (plus - minus) / (2 * h)
    return riemann_from_christoffel(gamma, dgamma)
