#!/usr/bin/env python3
"""
Coordinate patches, tangent vectors, tensor fields and pointwise tensor algebra

Every tensor is stored in coordinate components. Orthonormal-frame
components are produced on demand from the Cholesky factor of the metric.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.stats import qmc

from .cache import EvaluationCache, get_cache
from .errors import (
    ConditioningError,
    DegenerateFrameError,
    DomainError,
    EvaluationError,
    PreconditionViolation,
)
from .jet import TensorJet, jet_array, seed

MAX_CONDITION = 1e10
DEFAULT_SEED = 42

Evaluator = Callable[[Sequence[Any]], Any]


@dataclass(frozen=True, eq=False)
class ChartPatch:
    """A coordinate box with a metric evaluator usable over jets

    Axes listed in invariant_axes are directions along which the metric
    does not vary; sampling uses their range, domain checks ignore them.
    """

    dim: int
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    metric_eval: Evaluator
    coordinate_names: Tuple[str, ...] = ()
    name: str = "patch"
    margin: float = 0.05
    invariant_axes: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.dim < 1:
            raise PreconditionViolation(f"Patch dimension must be positive, got {self.dim}")
        if len(self.lower) != self.dim or len(self.upper) != self.dim:
            raise PreconditionViolation("Domain bounds do not match the patch dimension")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise PreconditionViolation("Domain box has an empty interior")
        if not 0.0 <= self.margin < 0.5:
            raise PreconditionViolation(f"Margin must lie in [0, 0.5), got {self.margin}")

    @property
    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.lower, dtype=float), np.asarray(self.upper, dtype=float)

    def interior_bounds(self, fraction: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
        """The box shrunk by fraction of its width on every side"""
        fraction = self.margin if fraction is None else fraction
        lo, hi = self.bounds
        width = hi - lo
        return lo + fraction * width, hi - fraction * width

    def contains(self, x: Sequence[float], fraction: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,) or not np.all(np.isfinite(x)):
            return False
        lo, hi = self.interior_bounds(fraction)
        for i in range(self.dim):
            if i in self.invariant_axes:
                continue
            if x[i] < lo[i] or x[i] > hi[i]:
                return False
        return True

    def check_point(self, x: Sequence[float]) -> np.ndarray:
        point = np.asarray(x, dtype=float)
        if not self.contains(point):
            raise DomainError(f"Point {point.tolist()} lies outside the domain of {self.name}")
        return point

    def sample_points(self, count: int, seed: int = DEFAULT_SEED) -> np.ndarray:
        """Scrambled Halton points inside the margin-shrunk box"""
        if count < 1:
            raise PreconditionViolation(f"Sample count must be positive, got {count}")
        sampler = qmc.Halton(d=self.dim, scramble=True, seed=seed)
        unit = sampler.random(count)
        lo, hi = self.interior_bounds()
        return qmc.scale(unit, lo, hi)

    def metric_jet(self, x: Sequence[float], order: int = 2) -> TensorJet:
        point = self.check_point(x)
        try:
            entries = self.metric_eval(seed(point, order))
        except (ValueError, ZeroDivisionError, OverflowError) as e:
            raise EvaluationError(f"Metric evaluation failed on {self.name} at {point.tolist()}: {e}") from e
        tj = jet_array(entries, self.dim, order)
        if tj.shape != (self.dim, self.dim):
            raise EvaluationError(f"Metric of {self.name} has shape {tj.shape}, expected {(self.dim, self.dim)}")
        for part in (tj.value, tj.grad, tj.hess, tj.third):
            if part is not None and not np.all(np.isfinite(part)):
                raise EvaluationError(f"Non-finite metric entry on {self.name} at {point.tolist()}")
        return tj

    def metric(self, x: Sequence[float]) -> np.ndarray:
        return self.metric_jet(x, 0).value


def metric_at(
    patch: ChartPatch,
    x: Sequence[float],
    order: int = 2,
    cache: Optional[EvaluationCache] = None,
) -> TensorJet:
    """g_ij(x) with its partials; grad[i, j, k] = d_k g_ij, hess[i, j, k, l] = d_k d_l g_ij"""
    cache = cache or get_cache()
    key = EvaluationCache.point_key(patch, x, "metric", order)
    return cache.get_or_set(key, lambda: patch.metric_jet(x, order))


def inverse_metric(G: np.ndarray) -> np.ndarray:
    """Inverse of a positive definite metric, refusing ill-conditioned input"""
    if not np.all(np.isfinite(G)):
        raise ConditioningError("Metric has non-finite entries")
    try:
        factor = linalg.cho_factor(G, lower=True)
    except linalg.LinAlgError as e:
        raise ConditioningError("Metric is not positive definite") from e
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise ConditioningError(f"Metric condition number {cond:.3e} exceeds {MAX_CONDITION:.0e}")
    ginv = linalg.cho_solve(factor, np.eye(G.shape[0]))
    return 0.5 * (ginv + ginv.T)


def orthonormal_frame(G: np.ndarray) -> np.ndarray:
    """Columns E_a with E^T G E = I, from G = L L^T"""
    try:
        L = linalg.cholesky(G, lower=True)
    except linalg.LinAlgError as e:
        raise ConditioningError("Metric is not positive definite") from e
    return linalg.solve_triangular(L, np.eye(G.shape[0]), lower=True).T


def inner(G: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
    return float(u @ G @ v)


def norm(G: np.ndarray, u: np.ndarray) -> float:
    return float(np.sqrt(max(inner(G, u, u), 0.0)))


def tensor_norm(T: np.ndarray, G: np.ndarray, pattern: str) -> float:
    """g-norm of a tensor whose axes are upper ('u') or lower ('d') indices"""
    T = np.asarray(T, dtype=float)
    if T.ndim != len(pattern):
        raise ValueError(f"Pattern {pattern!r} does not match tensor rank {T.ndim}")
    E = orthonormal_frame(G)
    Einv = np.linalg.inv(E)
    out = T
    for axis, kind in enumerate(pattern):
        transform = Einv if kind == "u" else E.T
        out = np.moveaxis(np.tensordot(transform, out, axes=([1], [axis])), 0, axis)
    return float(np.linalg.norm(out))


def g_symmetry_residual(G: np.ndarray, S: np.ndarray) -> float:
    """Relative asymmetry of Phi = G S"""
    phi = G @ S
    scale = max(float(np.linalg.norm(phi)), 1e-12)
    return float(np.linalg.norm(phi - phi.T)) / scale


@dataclass
class TangentVector:
    base_point: np.ndarray
    components: np.ndarray

    def __post_init__(self):
        self.base_point = np.asarray(self.base_point, dtype=float)
        self.components = np.asarray(self.components, dtype=float)
        if not np.all(np.isfinite(self.components)):
            raise EvaluationError("Tangent vector has non-finite components")
        if self.components.shape != self.base_point.shape:
            raise EvaluationError("Tangent vector and base point differ in dimension")


def gram_schmidt_frame(
    patch: ChartPatch,
    x: Sequence[float],
    seed_vectors: Optional[Sequence[Any]] = None,
    rank_tol: float = 1e-10,
) -> List[TangentVector]:
    """g-orthonormal frame at x built from seeds, completed by coordinate vectors

    Seeds must be independent. When fewer than dim seeds are supplied the
    coordinate basis fills the remainder, skipping dependent directions.
    """
    point = patch.check_point(x)
    G = metric_at(patch, point, 0).value
    inverse_metric(G)

    seeds = []
    for s in seed_vectors or []:
        seeds.append(np.asarray(s.components if isinstance(s, TangentVector) else s, dtype=float))
    n_seeds = len(seeds)
    if n_seeds > patch.dim:
        raise DegenerateFrameError(f"{n_seeds} seeds exceed dimension {patch.dim}")
    candidates = seeds + [np.eye(patch.dim)[i] for i in range(patch.dim)]

    frame: List[np.ndarray] = []
    for k, v in enumerate(candidates):
        if len(frame) == patch.dim:
            break
        original = norm(G, v)
        w = v.copy()
        # two passes keep orthogonality at roundoff level
        for _ in range(2):
            for e in frame:
                w = w - inner(G, e, w) * e
        length = norm(G, w)
        if original == 0.0 or length <= rank_tol * original:
            if k < n_seeds:
                raise DegenerateFrameError(f"Seed vector {k} is dependent on the previous seeds")
            continue
        frame.append(w / length)

    return [TangentVector(point, e) for e in frame]


def raise_index(patch: ChartPatch, x: Sequence[float], bilinear_form: np.ndarray) -> np.ndarray:
    """Mixed endomorphism g^{-1} Phi"""
    G = metric_at(patch, x, 0).value
    return inverse_metric(G) @ np.asarray(bilinear_form, dtype=float)


def lower_index(patch: ChartPatch, x: Sequence[float], endomorphism: np.ndarray) -> np.ndarray:
    G = metric_at(patch, x, 0).value
    return G @ np.asarray(endomorphism, dtype=float)


def validate_metric(patch: ChartPatch, x: Sequence[float], sym_tol: float = 1e-14) -> float:
    """Check symmetry and positive definiteness at x; returns the smallest eigenvalue"""
    G = metric_at(patch, x, 0).value
    asym = float(np.max(np.abs(G - G.T)))
    if asym > sym_tol:
        raise EvaluationError(f"Metric of {patch.name} is asymmetric by {asym:.3e}")
    smallest = float(np.linalg.eigvalsh(G)[0])
    if smallest <= 0.0:
        raise ConditioningError(f"Metric of {patch.name} is not positive definite")
    return smallest


# -- tensor fields ----------------------------------------------------------


class TensorField(ABC):
    """Field of tensors whose axes are upper ('u') or lower ('d') indices"""

    index_pattern: str = ""

    def __init__(self, dim: int, name: str = ""):
        self.dim = dim
        self.name = name or type(self).__name__

    @abstractmethod
    def jet(self, x: Sequence[float], order: int = 1) -> TensorJet:
        """Components at x with coordinate partials up to order"""

    def at(self, x: Sequence[float]) -> np.ndarray:
        return self.jet(x, 0).value


class FunctionField(TensorField):
    """Tensor field defined by an evaluator over jets"""

    def __init__(self, dim: int, evaluator: Evaluator, name: str = ""):
        super().__init__(dim, name)
        self.evaluator = evaluator

    def jet(self, x: Sequence[float], order: int = 1) -> TensorJet:
        point = np.asarray(x, dtype=float)
        try:
            entries = self.evaluator(seed(point, order))
        except (ValueError, ZeroDivisionError, OverflowError) as e:
            raise EvaluationError(f"Field {self.name} failed at {point.tolist()}: {e}") from e
        tj = jet_array(entries, self.dim, order)
        expected = (self.dim,) * len(self.index_pattern)
        if tj.shape != expected:
            raise EvaluationError(f"Field {self.name} has shape {tj.shape}, expected {expected}")
        if not np.all(np.isfinite(tj.value)):
            raise EvaluationError(f"Field {self.name} is not finite at {point.tolist()}")
        return tj


class VectorField(FunctionField):
    index_pattern = "u"


class OneFormField(FunctionField):
    index_pattern = "d"


class EndoField(FunctionField):
    """(1,1)-tensor S^i_j; the evaluator returns rows i, columns j"""

    index_pattern = "ud"


class TwoFormField(FunctionField):
    index_pattern = "dd"


class ComputedField(TensorField):
    """Field whose jets come from a numeric routine rather than jet algebra"""

    def __init__(
        self,
        dim: int,
        index_pattern: str,
        jet_fn: Callable[[np.ndarray, int], TensorJet],
        max_order: int = 1,
        name: str = "",
    ):
        super().__init__(dim, name)
        self.index_pattern = index_pattern
        self.jet_fn = jet_fn
        self.max_order = max_order

    def jet(self, x: Sequence[float], order: int = 1) -> TensorJet:
        if order > self.max_order:
            raise EvaluationError(f"Field {self.name} provides derivatives up to order {self.max_order}")
        return self.jet_fn(np.asarray(x, dtype=float), order).truncated(order)

