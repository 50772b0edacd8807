#!/usr/bin/env python3
"""
Geodesic integration and conservation-law drift

The geodesic equation x'' + Gamma(x', x') = 0 is integrated as a first-order
system in (x, v) with the Dormand-Prince 5(4) embedded pair.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .chart import ChartPatch, TensorField, metric_at, orthonormal_frame
from .curvature import christoffel
from .errors import DegenerateTrajectoryError, DomainError, PreconditionViolation, StiffnessError
from .logger import get_logger
from .workers import parallel_map

logger = get_logger("atensor.geodesics")

DEFAULT_TOL = 1e-10
MIN_TOL = 1e-12
MAX_TOL = 1e-4
MAX_STEPS = 10**6
INITIAL_STEP = 1e-2
SAFETY = 0.9
MAX_GROWTH = 5.0
MAX_SHRINK = 0.1

DP_A = (
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])

Quantity = Callable[[np.ndarray, np.ndarray], float]


@dataclass
class GeodesicState:
    x: np.ndarray
    v: np.ndarray
    t: float


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    max_error: float = 0.0


@dataclass
class Trajectory:
    """Time-ordered states; exited marks a stop at the domain margin before t_end"""

    states: List[GeodesicState]
    stats: StepStats = field(default_factory=StepStats)
    exited: bool = False
    t_end: float = 0.0

    @property
    def duration(self) -> float:
        return self.states[-1].t if self.states else 0.0

    def positions(self) -> np.ndarray:
        return np.array([s.x for s in self.states])

    def velocities(self) -> np.ndarray:
        return np.array([s.v for s in self.states])


def geodesic_rhs(patch: ChartPatch, y: np.ndarray) -> np.ndarray:
    n = patch.dim
    x, v = y[:n], y[n:]
    # trajectories visit each point once, so the shared cache is bypassed
    gamma = christoffel(patch, x, use_cache=False).gamma
    return np.concatenate([v, -np.einsum("kij,i,j->k", gamma, v, v)])


def _dormand_prince_step(patch: ChartPatch, y: np.ndarray, h: float, k1: np.ndarray):
    """One step; returns the 5th-order solution, the embedded error and the last stage"""
    stages = [k1]
    for row in DP_A:
        yi = y + h * sum(a * k for a, k in zip(row, stages))
        stages.append(geodesic_rhs(patch, yi))
    K = np.array(stages)
    y5 = y + h * (DP_B5 @ K)
    y4 = y + h * (DP_B4 @ K)
    return y5, y5 - y4, stages[-1]


def integrate_geodesic(
    patch: ChartPatch,
    x0: Sequence[float],
    v0: Sequence[float],
    t_end: float,
    tol: float = DEFAULT_TOL,
    max_steps: int = MAX_STEPS,
    fixed_step: Optional[float] = None,
) -> Trajectory:
    """Integrate the geodesic through (x0, v0) up to t_end

    Stops early, with exited set, when a non-invariant coordinate leaves the
    box shrunk by half the sampling margin. With fixed_step the error control
    is switched off and every step has that length.
    """
    if not MIN_TOL <= tol <= MAX_TOL:
        raise PreconditionViolation(f"Integrator tolerance must lie in [{MIN_TOL}, {MAX_TOL}], got {tol}")
    if t_end <= 0:
        raise PreconditionViolation(f"t_end must be positive, got {t_end}")
    if fixed_step is not None and fixed_step <= 0:
        raise PreconditionViolation(f"Fixed step must be positive, got {fixed_step}")

    n = patch.dim
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != (n,) or not np.all(np.isfinite(v0)):
        raise PreconditionViolation("Initial velocity must be a finite vector of the patch dimension")
    exit_fraction = 0.5 * patch.margin
    if not patch.contains(x0, exit_fraction):
        raise DegenerateTrajectoryError(f"Start point {x0.tolist()} lies outside the integration box")

    y = np.concatenate([x0, v0])
    k1 = geodesic_rhs(patch, y)
    t = 0.0
    h = fixed_step or min(INITIAL_STEP, t_end)
    traj = Trajectory(states=[GeodesicState(x0.copy(), v0.copy(), 0.0)], t_end=t_end)
    stats = traj.stats

    while t_end - t > 1e-14 * t_end:
        if stats.accepted + stats.rejected >= max_steps:
            raise StiffnessError(f"Geodesic integration exceeded {max_steps} steps at t={t:.6g}")
        h = min(h, t_end - t)
        if t + h == t:
            raise StiffnessError(f"Step size underflow at t={t:.6g}")

        try:
            y_new, y_err, k_last = _dormand_prince_step(patch, y, h, k1)
        except DomainError:
            if fixed_step is not None:
                traj.exited = True
                break
            stats.rejected += 1
            h *= 0.5
            continue

        scale = tol + np.maximum(np.abs(y), np.abs(y_new)) * tol
        err = float(np.max(np.abs(y_err) / scale))
        if fixed_step is None and err > 1.0:
            stats.rejected += 1
            h = max(SAFETY * h * err ** -0.25, MAX_SHRINK * h)
            continue

        t += h
        y, k1 = y_new, k_last
        stats.accepted += 1
        stats.max_error = max(stats.max_error, err * tol)
        if not patch.contains(y[:n], exit_fraction):
            traj.exited = True
            break
        traj.states.append(GeodesicState(y[:n].copy(), y[n:].copy(), t))
        if fixed_step is None:
            h = min(SAFETY * h * err ** -0.2, MAX_GROWTH * h) if err > 0 else MAX_GROWTH * h

    if len(traj.states) < 2:
        raise DegenerateTrajectoryError(f"Geodesic from {x0.tolist()} left the domain immediately")
    if traj.exited:
        logger.debug("Geodesic left the domain", patch=patch.name, t=traj.duration, t_end=t_end)
    return traj


def reverse(traj: Trajectory) -> Tuple[np.ndarray, np.ndarray]:
    """Start for the time-reversed geodesic: last point, negated velocity"""
    last = traj.states[-1]
    return last.x.copy(), -last.v


# -- conserved quantities ------------------------------------------------------


@dataclass
class DriftReport:
    max_drift: float
    relative_drift: float
    initial_value: float
    n_states: int

    def to_dict(self):
        return dict(self.__dict__)


def conserved_quantity_drift(patch: ChartPatch, traj: Trajectory, quantity: Quantity) -> DriftReport:
    """max |Q(t) - Q(0)| along the trajectory, absolute and relative to max(|Q(0)|, 1e-12)"""
    if not traj.states:
        raise PreconditionViolation("Trajectory is empty")
    values = np.array([quantity(s.x, s.v) for s in traj.states])
    drift = float(np.max(np.abs(values - values[0])))
    return DriftReport(
        max_drift=drift,
        relative_drift=drift / max(abs(float(values[0])), 1e-12),
        initial_value=float(values[0]),
        n_states=len(values),
    )


def energy(patch: ChartPatch) -> Quantity:
    """g(v, v)"""

    def quantity(x, v):
        G = metric_at(patch, x, 0).value
        return float(v @ G @ v)

    return quantity


def quadratic_form(patch: ChartPatch, S: TensorField) -> Quantity:
    """Phi(v, v) = g(S v, v)"""

    def quantity(x, v):
        G = metric_at(patch, x, 0).value
        return float(v @ G @ (S.at(x) @ v))

    return quantity


def momentum(patch: ChartPatch, xi: TensorField) -> Quantity:
    """g(xi, v)"""

    def quantity(x, v):
        G = metric_at(patch, x, 0).value
        return float(xi.at(x) @ G @ v)

    return quantity


def momentum_drift(patch: ChartPatch, xi: TensorField, traj: Trajectory) -> DriftReport:
    return conserved_quantity_drift(patch, traj, momentum(patch, xi))


def killing_momentum_drift(spec, traj: Trajectory) -> DriftReport:
    """Drift of g(xi, gamma') for the bundle's fiber field"""
    return momentum_drift(spec.patch, spec.xi, traj)


def horizontal_speed(patch: ChartPatch, xi: TensorField, traj: Trajectory) -> float:
    """max |v - g(xi, v) xi| along the trajectory, xi of unit length"""
    worst = 0.0
    for s in traj.states:
        G = metric_at(patch, s.x, 0).value
        u = xi.at(s.x)
        h = s.v - float(u @ G @ s.v) * u
        worst = max(worst, float(np.sqrt(max(h @ G @ h, 0.0))))
    return worst


# -- batches -------------------------------------------------------------------


def sample_geodesic_starts(patch: ChartPatch, count: int, seed: int = 42) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Interior sample points with velocities uniform on the unit g-sphere"""
    points = patch.sample_points(count, seed)
    rng = np.random.default_rng(seed)
    starts = []
    for x in points:
        z = rng.standard_normal(patch.dim)
        z /= np.linalg.norm(z)
        E = orthonormal_frame(metric_at(patch, x, 0).value)
        starts.append((x, E @ z))
    return starts


def integrate_batch(
    patch: ChartPatch,
    starts: Sequence[Tuple[np.ndarray, np.ndarray]],
    t_end: float,
    tol: float = DEFAULT_TOL,
) -> List[Trajectory]:
    """Integrate every start; starts that exit immediately are logged and dropped"""

    def one(start):
        try:
            return integrate_geodesic(patch, start[0], start[1], t_end, tol)
        except DegenerateTrajectoryError as e:
            logger.warning("Skipping geodesic", patch=patch.name, reason=str(e))
            return None

    trajectories = [t for t in parallel_map(one, starts) if t is not None]
    logger.debug(
        "Geodesic batch integrated",
        patch=patch.name,
        requested=len(starts),
        integrated=len(trajectories),
        exited=sum(t.exited for t in trajectories),
    )
    return trajectories
