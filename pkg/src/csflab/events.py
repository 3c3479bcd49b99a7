"""Detection of qualitative changes along a flow run.

The detector is a flow observer.  Each kind of event fires once when its
condition switches on and re-arms only after the condition has cleared, so
a contiguous episode produces a single record.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .flow import FlowState
from .geometry import TWO_PI
from .scenarios import flat_point_census, is_twisted

KINDS = ("InflectionEmerged", "FlatPointEmerged", "TwistLost", "SingularityStop",
         "SphereInvariantBroken")


@dataclass(frozen=True)
class EventRecord:
    t: float
    kind: str
    node: int | None
    payload: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class EventDetector:
    """Observer collecting :class:`EventRecord` objects.

    Parameters
    ----------
    inflection_margin
        Scale-free threshold on ``min kappa * L / 2pi`` below which the curve
        is treated as having an inflection point.  A zero of curvature that
        falls between nodes is caught by the principal normal reversing
        between neighbours.
    sphere_radius
        Initial radius for the shrinking-sphere check; ``None`` disables it.
    sphere_tol
        Allowed deviation of ``|gamma|^2`` from ``R^2 - 2t``.
    """

    inflection_margin: float = 1e-3
    sphere_radius: float | None = None
    sphere_tol: float = 1e-4
    events: list[EventRecord] = field(default_factory=list)
    _active: dict = field(default_factory=dict)
    _was_twisted: bool | None = None

    def _edge(self, kind: str, on: bool, state: FlowState, node, payload) -> None:
        if on and not self._active.get(kind, False):
            self.events.append(EventRecord(float(state.t), kind, node, payload))
        self._active[kind] = on

    def __call__(self, state: FlowState) -> None:
        fr = state.frenet
        scale = fr.length / TWO_PI
        j_kappa = int(np.argmin(fr.kappa))
        min_kappa = float(fr.kappa[j_kappa])
        census = flat_point_census(fr)
        cert = is_twisted(state.curve, fr)
        valid = fr.tau_valid
        min_tau = float(np.min(fr.tau[valid])) if np.any(valid) else None
        base = {"min_kappa": min_kappa, "min_tau": min_tau, "flat_count": census.count}

        flips = np.flatnonzero(np.einsum("ij,ij->i", fr.normal, np.roll(fr.normal, -1, axis=0)) < 0)
        inflected = min_kappa * scale < self.inflection_margin or flips.size > 0
        node = j_kappa if min_kappa * scale < self.inflection_margin or not flips.size else int(flips[0])
        self._edge("InflectionEmerged", inflected, state, node, base)

        node = None
        if census.count and np.any(valid):
            node = int(np.flatnonzero(valid)[np.argmin(np.abs(fr.tau[valid]))])
        self._edge("FlatPointEmerged", census.count > 0, state, node, base)

        if self._was_twisted and not cert.twisted:
            self.events.append(EventRecord(float(state.t), "TwistLost", node, base))
        self._was_twisted = cert.twisted

        if self.sphere_radius is not None:
            r2 = np.einsum("ij,ij->i", state.curve.points, state.curve.points)
            dev = np.abs(r2 - (self.sphere_radius**2 - 2.0 * state.t))
            j = int(np.argmax(dev))
            payload = dict(base, deviation=float(dev[j]))
            self._edge("SphereInvariantBroken", float(dev[j]) > self.sphere_tol, state, j, payload)

    def stop(self, state: FlowState) -> None:
        """Record that the run ended at the curvature threshold."""
        j = int(np.argmax(state.frenet.kappa))
        self.events.append(EventRecord(float(state.t), "SingularityStop", j,
                                       {"max_kappa": float(state.frenet.kappa[j])}))
