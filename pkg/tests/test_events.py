import numpy as np
import pytest

from csflab import scenarios
from csflab.events import EventDetector, EventRecord
from csflab.flow import FlowConfig, FlowState, StopReason, run
from csflab.geometry import DiscreteCurve


def detect(snapshots, **kw):
    det = EventDetector(**kw)
    for s in snapshots:
        det(s)
    return det


def kinds(det):
    return [e.kind for e in det.events]


def test_coil_loses_twist_once(coil_long_run):
    det = detect(coil_long_run.snapshots)
    assert kinds(det).count("TwistLost") == 1
    lost = next(e for e in det.events if e.kind == "TwistLost")
    flat = next(e for e in det.events if e.kind == "FlatPointEmerged")
    assert 0.0 < lost.t <= coil_long_run.final.t
    # the torsion changes sign at the moment the twist is lost
    assert flat.t == lost.t
    assert flat.payload["flat_count"] > 0


def test_sphere_keeps_invariant(sphere_run):
    det = detect(sphere_run.snapshots, sphere_radius=1.0)
    assert "SphereInvariantBroken" not in kinds(det)
    # flat points are present from the start on a spherical curve
    assert kinds(det)[0] == "FlatPointEmerged"
    assert det.events[0].t == 0.0


def test_sphere_check_fires_on_wrong_radius(sphere_run):
    det = detect(sphere_run.snapshots[:3], sphere_radius=1.1)
    assert kinds(det).count("SphereInvariantBroken") == 1


def test_perturbed_circle_order():
    det = EventDetector()
    r = run(scenarios.make("perturbed_circle_3d", {}, 64), FlowConfig(t_end=1.0), [det])
    assert r.stop_reason is StopReason.SINGULARITY
    det.stop(r.final)
    ks = kinds(det)
    assert ks.index("FlatPointEmerged") < ks.index("SingularityStop")
    assert ks[-1] == "SingularityStop"
    assert det.events[-1].payload["max_kappa"] >= FlowConfig(t_end=1.0).kappa_stop


def test_once_per_episode():
    n = 128
    u = np.arange(n) * 2 * np.pi / n
    # the dimpled limacon has two inflection points
    r = 1.2 + np.cos(u)
    limacon = FlowState.initial(DiscreteCurve(np.column_stack([r * np.cos(u), r * np.sin(u), np.zeros(n)])))
    circle = FlowState.initial(scenarios.make("circle", {}, n))
    det = detect([limacon, limacon, circle, limacon])
    assert kinds(det) == ["InflectionEmerged", "InflectionEmerged"]


def test_record_serialises():
    rec = EventRecord(0.5, "TwistLost", 3, {"min_tau": -1.0})
    assert rec.to_json() == {"t": 0.5, "kind": "TwistLost", "node": 3, "payload": {"min_tau": -1.0}}
