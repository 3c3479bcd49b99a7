import numpy as np
import pytest
import sympy as sp
from oracles import planar_blowup_kappa

from csflab.errors import BlowUp, UndefinedForZeroTau
from csflab.reaction_ode import ReactionState, conserved, drift, integrate, rhs


@pytest.mark.parametrize("state,expected", [((1, 1), (0, 2)), ((1, 0), (1, 0)), ((0, 2), (0, 0))])
def test_rhs_values(state, expected):
    assert rhs(ReactionState(*state)) == pytest.approx(expected)


def test_first_integral_is_conserved_symbolically():
    k, t = sp.symbols("kappa tau", positive=True)
    c = (k**2 + t**2) / t
    dk, dt = k**3 - k * t**2, 2 * k**2 * t
    assert sp.simplify(sp.diff(c, k) * dk + sp.diff(c, t) * dt) == 0


def test_conserved_values():
    assert conserved(ReactionState(1.0, 1.0)) == 2.0
    assert conserved(ReactionState(0.0, 2.0)) == 2.0
    with pytest.raises(UndefinedForZeroTau):
        conserved(ReactionState(1.0, 0.0))


@pytest.fixture(scope="module")
def unit_trajectory():
    return integrate(ReactionState(1.0, 1.0), 5.0, dt=1e-4)


def test_stays_on_arc(unit_trajectory):
    tr = unit_trajectory
    assert np.max(np.abs(tr.kappa**2 - (2 * tr.tau - tr.tau**2))) < 1e-8
    assert drift(tr) < 1e-8


def test_limit_torsion(unit_trajectory):
    assert unit_trajectory.final.tau == pytest.approx(2.0, abs=1e-4)
    assert unit_trajectory.final.kappa < 1e-3


def test_monotone_behaviour(unit_trajectory):
    tr = unit_trajectory
    inc = np.diff(tr.tau)
    assert np.all(inc >= 0)
    # strict while the increment 2 kappa^2 tau dt is above roundoff
    assert np.all(inc[tr.kappa[:-1] > 1e-5] > 0)
    past = tr.tau[:-1] > tr.kappa[:-1]
    assert np.all(np.diff(tr.kappa)[past] < 0)


def test_drift_is_high_order():
    drifts = [drift(integrate(ReactionState(1.0, 1.0), 5.0, dt=dt)) for dt in (0.02, 0.01)]
    assert drifts[0] / drifts[1] >= 8.0
    assert np.log2(drifts[0] / drifts[1]) >= 3.0


def test_large_initial_curvature_still_dies_out():
    tr = integrate(ReactionState(3.0, 0.1), 5.0, dt=1e-4)
    assert tr.reason == "extinct"
    assert tr.final.tau == pytest.approx(90.1, rel=1e-3)


def test_planar_ray_blows_up():
    with pytest.raises(BlowUp) as info:
        integrate(ReactionState(1.0, 0.0), 1.0, dt=1e-4)
    tr = info.value.trajectory
    assert tr.t[-1] == pytest.approx(0.5, abs=1e-3)
    # accuracy holds while kappa^2 dt is small; compare up to t = 0.499
    keep = tr.t <= 0.499
    rel = np.abs(tr.kappa[keep] / planar_blowup_kappa(tr.t[keep]) - 1)
    assert np.max(rel) < 1e-6
    assert np.all(tr.tau == 0)


def test_kappa_zero_ray_is_absorbing():
    tr = integrate(ReactionState(0.0, 2.0), 1.0, dt=1e-3)
    assert tr.reason == "extinct"
    assert tr.final.tau == 2.0


def test_interpolation_helper(unit_trajectory):
    k, t = unit_trajectory.at([0.0, 5.0])
    assert k[0] == 1.0 and t[0] == 1.0
    assert t[1] == pytest.approx(unit_trajectory.final.tau)
