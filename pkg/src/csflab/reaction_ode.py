"""Reaction part of the curvature/torsion evolution.

Dropping spatial derivatives leaves

    kappa' = kappa^3 - kappa tau^2,    tau' = 2 kappa^2 tau,

whose orbits are the arcs ``kappa^2 = C tau - tau^2`` with first integral
``C = (kappa^2 + tau^2) / tau``.  A helix has constant curvature and torsion,
so under the flow it follows this system exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BlowUp, UndefinedForZeroTau

KAPPA_EXTINCT = 1e-12


@dataclass(frozen=True)
class ReactionState:
    kappa: float
    tau: float
    t: float = 0.0


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    kappa: np.ndarray
    tau: np.ndarray
    reason: str  # "t_end", "extinct" or "blowup"

    @property
    def final(self) -> ReactionState:
        return ReactionState(float(self.kappa[-1]), float(self.tau[-1]), float(self.t[-1]))

    def conserved(self) -> np.ndarray:
        return (self.kappa**2 + self.tau**2) / self.tau

    def at(self, times) -> tuple[np.ndarray, np.ndarray]:
        """Linear interpolation of (kappa, tau) at ``times``."""
        return np.interp(times, self.t, self.kappa), np.interp(times, self.t, self.tau)


def rhs(state: ReactionState) -> tuple[float, float]:
    k, t = state.kappa, state.tau
    return k**3 - k * t**2, 2.0 * k**2 * t


def conserved(state: ReactionState) -> float:
    """Arc constant ``C = (kappa^2 + tau^2) / tau``; also the limiting torsion."""
    if state.tau == 0:
        raise UndefinedForZeroTau("C is undefined on the planar ray tau = 0")
    return (state.kappa**2 + state.tau**2) / state.tau


def _f(y):
    k, t = y
    return np.array([k**3 - k * t**2, 2.0 * k**2 * t])


def integrate(initial: ReactionState, t_end: float, dt: float = 1e-4,
              guard: float | None = None, record_every: int = 1) -> Trajectory:
    """Classical RK4 with fixed step ``dt``.

    Stops early once ``kappa < 1e-12`` (the ``kappa = 0`` ray is absorbing)
    and raises :class:`BlowUp` if ``kappa`` exceeds ``guard`` (default
    ``1/dt``), carrying the trajectory computed so far.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    guard = 1.0 / dt if guard is None else guard
    y = np.array([initial.kappa, initial.tau], dtype=float)
    t = initial.t
    ts, ks, taus = [t], [y[0]], [y[1]]
    nsteps = int(np.ceil((t_end - t) / dt - 1e-9))
    reason = "t_end"
    for i in range(nsteps):
        h = min(dt, t_end - t)
        k1 = _f(y)
        k2 = _f(y + 0.5 * h * k1)
        k3 = _f(y + 0.5 * h * k2)
        k4 = _f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = initial.t + (i + 1) * dt if i + 1 < nsteps else t_end
        blown = not np.all(np.isfinite(y)) or abs(y[0]) > guard
        if blown or (i + 1) % record_every == 0 or i + 1 == nsteps or abs(y[0]) < KAPPA_EXTINCT:
            ts.append(t)
            ks.append(y[0])
            taus.append(y[1])
        if blown:
            traj = Trajectory(np.array(ts[:-1]), np.array(ks[:-1]), np.array(taus[:-1]), "blowup")
            raise BlowUp(f"kappa exceeded {guard:g} near t = {t:.6g}", traj)
        if abs(y[0]) < KAPPA_EXTINCT:
            reason = "extinct"
            break
    return Trajectory(np.array(ts), np.array(ks), np.array(taus), reason)


def drift(traj: Trajectory) -> float:
    """Maximum deviation of the first integral from its initial value."""
    c = traj.conserved()
    return float(np.max(np.abs(c - c[0])))
