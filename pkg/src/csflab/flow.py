"""Explicit time stepping of curve shortening flow ``d gamma/dt = kappa N``.

Positions advance with classical RK4 under the step clamp
``dt = min(sigma * h_min**2, 0.1 / M_t, time to next snapshot)`` where
``h_min`` is the smallest arclength spacing and ``M_t = max kappa**2``.
Nodes are periodically moved back to equal arclength spacing; this only
reparametrizes the curve.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateCurve
from .geometry import (
    V_FLOOR_REL,
    DerivativeScheme,
    DiscreteCurve,
    FrenetField,
    frenet,
    point_derivatives,
    resample_uniform_arclength,
)


@dataclass(frozen=True)
class FlowConfig:
    """Run control.  ``snapshot_every`` is a time interval."""

    t_end: float
    sigma_cfl: float = 0.2
    kappa_stop: float = 1e3
    dt_floor: float = 1e-12
    resample_every: int = 10
    snapshot_every: float = 0.01
    scheme: DerivativeScheme = "spectral"

    def __post_init__(self):
        if not 0 < self.sigma_cfl <= 0.5:
            raise ValueError("sigma_cfl must lie in (0, 0.5]")
        if self.kappa_stop <= 0:
            raise ValueError("kappa_stop must be positive")
        if self.resample_every < 1:
            raise ValueError("resample_every must be >= 1")
        if self.snapshot_every <= 0 or self.t_end <= 0:
            raise ValueError("t_end and snapshot_every must be positive")


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    curve: DiscreteCurve
    frenet: FrenetField
    step_count: int = 0
    dt: float | None = None  # size of the step that produced this state

    @classmethod
    def initial(cls, curve: DiscreteCurve, scheme: DerivativeScheme = "spectral", t: float = 0.0):
        return cls(t, curve, frenet(curve, scheme), 0, None)


class StopReason(str, enum.Enum):
    END_TIME = "EndTime"
    SINGULARITY = "SingularityReached"
    STEP_UNDERFLOW = "StepUnderflow"
    DEGENERATE = "DegenerateCurve"


@dataclass(eq=False)
class RunResult:
    snapshots: list[FlowState]
    stop_reason: StopReason
    final: FlowState
    error: Exception | None = None
    steps: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])


def _velocity_from_points(points: np.ndarray, shift: np.ndarray, scheme) -> np.ndarray:
    d1, d2 = point_derivatives(points, shift, (1, 2), scheme)
    v2 = np.einsum("ij,ij->i", d1, d1)
    n = points.shape[0]
    length = np.sum(np.sqrt(v2)) * 2.0 * np.pi / n
    if not np.isfinite(length) or np.sqrt(np.min(v2)) < V_FLOOR_REL * length / n:
        raise DegenerateCurve("node collision during step")
    along = np.einsum("ij,ij->i", d2, d1) / v2
    return (d2 - along[:, None] * d1) / v2[:, None]


def velocity_field(curve: DiscreteCurve, scheme: DerivativeScheme = "spectral") -> np.ndarray:
    """Curvature vector ``kappa N = (g_uu - <g_uu, T> T) / v^2`` at every node.

    Well defined where ``kappa = 0`` (the vector is then zero).
    """
    return _velocity_from_points(curve.points, curve.shift, scheme)


def step(state: FlowState, dt: float, scheme: DerivativeScheme | None = None) -> FlowState:
    """One classical RK4 step of the flow; Frenet data are recomputed."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    scheme = scheme or state.frenet.scheme
    x = state.curve.points
    shift = state.curve.shift
    k1 = _velocity_from_points(x, shift, scheme)
    k2 = _velocity_from_points(x + 0.5 * dt * k1, shift, scheme)
    k3 = _velocity_from_points(x + 0.5 * dt * k2, shift, scheme)
    k4 = _velocity_from_points(x + dt * k3, shift, scheme)
    new = DiscreteCurve(x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), shift)
    return FlowState(state.t + dt, new, frenet(new, scheme), state.step_count + 1, dt)


def _next_snapshot(t: float, config: FlowConfig) -> float:
    k = math.floor(t / config.snapshot_every * (1 + 1e-12) + 1e-9)
    return min((k + 1) * config.snapshot_every, config.t_end)


def choose_dt(state: FlowState, config: FlowConfig) -> float:
    """``min(sigma * h_min^2, 0.1 / M_t, time left to the next snapshot)``.

    The floor is not applied here; :func:`run` stops when the result falls
    below ``config.dt_floor``.
    """
    h_min = float(np.min(state.frenet.ds))
    m_t = float(np.max(state.frenet.kappa) ** 2)
    dt = config.sigma_cfl * h_min**2
    if m_t > 0:
        dt = min(dt, 0.1 / m_t)
    remaining = _next_snapshot(state.t, config) - state.t
    if remaining > 0:
        dt = min(dt, remaining)
    return dt


Observer = Callable[[FlowState], None]


def run(initial: DiscreteCurve | FlowState, config: FlowConfig,
        observers: Sequence[Observer] = ()) -> RunResult:
    """Integrate until ``t_end``, ``max kappa >= kappa_stop`` or step underflow.

    Observers are called with the state at every snapshot, including the
    initial one and the state at which the run stopped.  A
    :class:`DegenerateCurve` mid-run ends the run with partial results and
    the exception kept on ``RunResult.error``.
    """
    if isinstance(initial, FlowState):
        state = initial
    else:
        state = FlowState.initial(initial, config.scheme)

    snapshots = [state]
    for obs in observers:
        obs(state)

    def snap(s):
        if snapshots[-1] is not s:
            snapshots.append(s)
            for obs in observers:
                obs(s)

    reason = StopReason.END_TIME
    error = None
    end_eps = 1e-12 * max(config.t_end, 1.0)
    while state.t < config.t_end - end_eps:
        if np.max(state.frenet.kappa) >= config.kappa_stop:
            reason = StopReason.SINGULARITY
            break
        target = _next_snapshot(state.t, config)
        dt = choose_dt(state, config)
        if dt < config.dt_floor:
            reason = StopReason.STEP_UNDERFLOW
            break
        try:
            new = step(state, dt, config.scheme)
            if new.step_count % config.resample_every == 0:
                curve = resample_uniform_arclength(new.curve)
                new = FlowState(new.t, curve, frenet(curve, config.scheme), new.step_count, dt)
        except DegenerateCurve as exc:
            reason, error = StopReason.DEGENERATE, exc
            break
        if abs(new.t - target) <= 1e-12 * max(abs(target), 1.0):
            # land exactly on the snapshot grid
            new = FlowState(target, new.curve, new.frenet, new.step_count, new.dt)
            state = new
            snap(state)
        else:
            state = new
    else:
        if np.max(state.frenet.kappa) >= config.kappa_stop:
            reason = StopReason.SINGULARITY
    snap(state)
    return RunResult(snapshots, reason, state, error, state.step_count)
