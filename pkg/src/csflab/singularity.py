"""Blow-up diagnostics for flow runs.

The singular time is estimated from the linear law ``1/M_t ~ a (omega - t)``
and the type indicator ``M_t (omega - t)`` decides between a bounded
(Type I) and a growing (Type II) approach.  The verdict thresholds are
heuristics exposed as arguments; the underlying dichotomy is asymptotic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize
from scipy.interpolate import CubicSpline

from .errors import InsufficientData
from .flow import FlowState
from .geometry import DiscreteCurve, TrigInterpolant, arclength_derivative, frenet

ALPHAS = (0.5, 0.9)


@dataclass
class BlowupSeries:
    t: np.ndarray
    M: np.ndarray
    argmax: np.ndarray
    sup_tau_over_kappa: np.ndarray
    sup_tau_over_kappa2: np.ndarray
    sup_tau: np.ndarray
    Q_at_tau_max: np.ndarray
    essential: np.ndarray  # tau/kappa^2-argmax node passes kappa^2 >= rho M_t
    rho: float
    final_curve: DiscreteCurve | None = None

    def __len__(self):
        return len(self.t)


def log_kappa_q(fr) -> np.ndarray:
    """``2 kappa^2 + 2 d_s^2 log kappa`` at every node (NaN if kappa vanishes)."""
    if not np.all(fr.kappa > 0):
        return np.full(fr.n, np.nan)
    return 2.0 * fr.kappa**2 + 2.0 * arclength_derivative(np.log(fr.kappa), fr, order=2)


def collect(snapshots: Sequence[FlowState], rho: float = 0.5) -> BlowupSeries:
    """Per-snapshot maxima, torsion ratios and the torsion-maximum quantity."""
    rows = []
    for s in snapshots:
        fr = s.frenet
        k2 = fr.kappa**2
        m = float(np.max(k2))
        valid = fr.tau_valid
        nan = float("nan")
        if np.any(valid):
            tau = np.where(valid, fr.tau, -np.inf)
            abs_tau = np.where(valid, np.abs(fr.tau), 0.0)
            r1 = abs_tau / fr.kappa
            r2 = abs_tau / k2
            r2[~valid] = -np.inf
            j_tau = int(np.argmax(tau))
            j_r2 = int(np.argmax(r2))
            q = log_kappa_q(fr)[j_tau]
            rows.append((s.t, m, int(np.argmax(k2)), float(np.max(r1[valid])), float(r2[j_r2]),
                         float(tau[j_tau]), float(q), bool(k2[j_r2] >= rho * m)))
        else:
            rows.append((s.t, m, int(np.argmax(k2)), nan, nan, nan, nan, False))
    cols = list(zip(*rows)) if rows else [[]] * 8
    final = snapshots[-1].curve if snapshots else None
    return BlowupSeries(*(np.array(c) for c in cols), rho=rho, final_curve=final)


@dataclass(frozen=True)
class OmegaEstimate:
    omega_hat: float
    uncertainty: float
    slope: float
    monotone: bool  # 1/M_t strictly decreasing over the fit window


def estimate_omega(series: BlowupSeries, min_points: int = 8) -> OmegaEstimate:
    """Least-squares fit of ``1/M_t = c0 + c1 t`` over the last half of the series."""
    t, M = np.asarray(series.t, float), np.asarray(series.M, float)
    if len(t) < min_points:
        raise InsufficientData(f"need at least {min_points} snapshots, got {len(t)}")
    if not M[-1] > M[0] * (1 + 1e-6):
        raise InsufficientData("M_t is not growing")
    half = slice(len(t) // 2, None)
    tt, y = t[half], 1.0 / M[half]
    monotone = bool(np.all(np.diff(y) < 0))
    A = np.column_stack([np.ones_like(tt), tt])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    c0, c1 = coef
    if not c1 < 0:
        raise InsufficientData("1/M_t is not decreasing")
    dof = max(len(tt) - 2, 1)
    resid = y - A @ coef
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(A.T @ A)
    jac = np.array([-1.0 / c1, c0 / c1**2])
    unc = float(math.sqrt(max(jac @ cov @ jac, 0.0)))
    return OmegaEstimate(float(-c0 / c1), unc, float(-c1), monotone)


@dataclass
class SingularityVerdict:
    omega_hat: float
    omega_uncertainty: float
    classification: str  # "TypeI" | "TypeII" | "Inconclusive"
    type_indicator: float
    indicator_band: tuple[float, float]
    indicator_t: np.ndarray
    indicator: np.ndarray
    rescaled_profile: DiscreteCurve | None
    alpha_series: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "classification": self.classification,
            "omega_hat": self.omega_hat,
            "omega_uncertainty": self.omega_uncertainty,
            "type_indicator": self.type_indicator,
            "indicator_band": list(self.indicator_band),
            "indicator": {"t": self.indicator_t.tolist(), "value": self.indicator.tolist()},
            "alpha_series": {str(a): v.tolist() for a, v in self.alpha_series.items()},
            "notes": self.notes,
            "heuristic": "verdict thresholds are finite-time heuristics",
        }


def rescale_profile(curve: DiscreteCurve) -> DiscreteCurve:
    """Scale so that max curvature is 1 and translate the argmax node to the origin."""
    fr = frenet(curve)
    j = int(np.argmax(fr.kappa))
    k = float(fr.kappa[j])
    return DiscreteCurve((curve.points - curve.points[j]) * k, curve.shift * k)


def classify(series: BlowupSeries, omega_hat: float | OmegaEstimate, spread_tol: float = 0.1,
             growth_min: float = 10.0, decade: float = 10.0,
             coverage_slack: float = 0.01) -> SingularityVerdict:
    """Apply the Type I / Type II rules to ``M_t (omega_hat - t)``.

    Type I: over the last decade of approach (snapshots with
    ``omega - t <= decade * (omega - t_last)``, the series reaching back at
    least that far up to a relative ``coverage_slack`` that absorbs the error
    in ``omega_hat``) the indicator has relative spread below ``spread_tol``.
    Type II: the indicator is non-decreasing and grows by ``growth_min``.
    """
    unc = float("nan")
    if isinstance(omega_hat, OmegaEstimate):
        unc = omega_hat.uncertainty
        omega_hat = omega_hat.omega_hat
    t = np.asarray(series.t, float)
    keep = t < omega_hat
    tt = t[keep]
    gap = omega_hat - tt
    ind = np.asarray(series.M, float)[keep] * gap
    notes = []
    classification = "Inconclusive"
    limit, band = float("nan"), (float("nan"), float("nan"))
    if len(ind) >= 3:
        reach = decade * gap[-1] * (1.0 - coverage_slack)
        window = gap <= max(reach, decade * gap[-1])
        covered = gap[0] >= reach
        w = ind[window]
        limit = float(np.mean(w))
        band = (float(np.min(w)), float(np.max(w)))
        spread = (band[1] - band[0]) / abs(limit) if limit else math.inf
        growth = ind[-1] / ind[0] if ind[0] > 0 else math.inf
        monotone = bool(np.all(np.diff(ind) >= 0))
        if covered and len(w) >= 3 and spread < spread_tol:
            classification = "TypeI"
        elif monotone and growth >= growth_min:
            classification = "TypeII"
        notes.append(f"last-decade spread {spread:.3g}, growth {growth:.3g}, decade covered: {covered}")
    else:
        notes.append("fewer than three snapshots before omega_hat")

    alpha = {}
    q = np.asarray(series.Q_at_tau_max, float)[keep]
    for a in ALPHAS:
        alpha[a] = q * gap**a
    profile = rescale_profile(series.final_curve) if series.final_curve is not None else None
    return SingularityVerdict(float(omega_hat), unc, classification, limit, band, tt, ind,
                              profile, alpha, notes)


def diagnose(snapshots: Sequence[FlowState], rho: float = 0.5) -> SingularityVerdict:
    """collect -> estimate_omega -> classify; Inconclusive without a blow-up."""
    series = collect(snapshots, rho)
    try:
        est = estimate_omega(series)
    except InsufficientData as exc:
        profile = rescale_profile(series.final_curve) if series.final_curve is not None else None
        empty = np.array([])
        return SingularityVerdict(float("nan"), float("nan"), "Inconclusive", float("nan"),
                                  (float("nan"), float("nan")), empty, empty, profile,
                                  notes=[f"no singular-time estimate: {exc}"])
    verdict = classify(series, est)
    if not est.monotone:
        verdict.classification = "Inconclusive"
        verdict.notes.append("1/M_t is non-monotone over the fit window")
    return verdict


# -- torsion-maximum bound ------------------------------------------------------

@dataclass(frozen=True)
class TauMaxCheck:
    t: float
    dlogtau_dt: float
    Q: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.dlogtau_dt <= self.Q + self.tolerance


def _tau_peak(fr, upsample: int = 16):
    """Interpolated maximum of torsion and the value of Q at the same spot."""
    m = upsample * fr.n
    tau = fr.tau
    q = log_kappa_q(fr)
    uf = np.arange(m) * 2 * np.pi / m
    tau_f = _fine(tau, m)
    j = int(np.argmax(tau_f))
    # Newton polish on the interpolant
    interp = TrigInterpolant(tau)
    u = uf[j]
    for _ in range(5):
        d1 = interp(u, 1)[0]
        d2 = interp(u, 2)[0]
        if d2 >= 0:
            break
        u = u - d1 / d2
    tau_max = float(interp(u)[0])
    q_val = float(TrigInterpolant(q)(u)[0])
    return tau_max, q_val


def _fine(values, m):
    n = values.shape[0]
    coef = np.fft.rfft(values)
    coef[-1] *= 0.5
    padded = np.zeros(m // 2 + 1, dtype=complex)
    padded[: n // 2 + 1] = coef
    return np.fft.irfft(padded, n=m) * (m / n)


def tau_max_bound_check(snapshots: Sequence[FlowState], rel_tol: float = 0.02,
                        abs_tol: float = 1e-6) -> list[TauMaxCheck]:
    """Centred ``d/dt log(max tau)`` against ``Q = 2 kappa^2 + 2 d_s^2 log kappa``.

    At a torsion maximum the remaining terms of ``d/dt log tau`` are
    non-positive, so the derivative of ``log max tau`` cannot exceed Q.
    Only triples of equally spaced snapshots with defined, positive torsion
    maxima are checked.
    """
    from .functionals import equally_spaced_triples

    out = []
    for a, b, c in equally_spaced_triples(snapshots):
        if not all(np.all(s.frenet.tau_valid) and np.all(s.frenet.kappa > 0) for s in (a, b, c)):
            continue
        peaks = [_tau_peak(s.frenet) for s in (a, b, c)]
        if min(p[0] for p in peaks) <= 0:
            continue
        lhs = (math.log(peaks[2][0]) - math.log(peaks[0][0])) / (c.t - a.t)
        q = peaks[1][1]
        out.append(TauMaxCheck(float(b.t), float(lhs), q, rel_tol * abs(q) + abs_tol))
    return out


# -- rescaled profile vs. model curves ----------------------------------------

def _model(name: str):
    if name == "GrimReaper":
        def m(s):
            return np.stack([2 * np.arctan(np.tanh(s / 2)), np.log(np.cosh(s))], axis=-1)

        def m1(s):
            return np.stack([1 / np.cosh(s), np.tanh(s)], axis=-1)

        def m2(s):
            return np.stack([-np.tanh(s) / np.cosh(s), 1 / np.cosh(s) ** 2], axis=-1)
    elif name == "Circle":
        def m(s):
            return np.stack([np.sin(s), 1 - np.cos(s)], axis=-1)

        def m1(s):
            return np.stack([np.cos(s), np.sin(s)], axis=-1)

        def m2(s):
            return np.stack([-np.sin(s), np.cos(s)], axis=-1)
    else:
        raise ValueError(f"unknown model {name!r}; use 'GrimReaper' or 'Circle'")
    return m, m1, m2


def _closest(q, f, f1, f2, grid, lo, hi, steps=8):
    """Distance from points q (k, d) to a parametrized curve, by grid + Newton."""
    samples = f(grid)
    d2 = np.sum((q[:, None, :] - samples[None, :, :]) ** 2, axis=-1)
    w = grid[np.argmin(d2, axis=1)]
    for _ in range(steps):
        diff = f(w) - q
        g1 = np.sum(f1(w) * diff, axis=-1)
        g2 = np.sum(f1(w) ** 2, axis=-1) + np.sum(f2(w) * diff, axis=-1)
        w = np.clip(w - g1 / np.where(g2 > 0, g2, 1.0), lo, hi)
    return np.linalg.norm(f(w) - q, axis=-1)


class _Profile:
    """Smooth representation of a profile in its local (T, N, B) frame at peak curvature."""

    def __init__(self, profile, window):
        if isinstance(profile, DiscreteCurve):
            fr = frenet(profile)
            j = int(np.argmax(fr.kappa))
            T, N, B = fr.tangent[j], fr.normal[j], fr.binormal[j]
            p0 = profile.points[j]
            frame = np.stack([T, N, B])
            interp = TrigInterpolant(profile.periodic_part())
            drift = profile.shift / (2 * np.pi)
            u0 = profile.u()[j]

            def pos(w):
                return (interp(w + u0) + np.outer(w + u0, drift) - p0) @ frame.T

            def d1(w):
                return (interp(w + u0, 1) + drift) @ frame.T

            def d2(w):
                return interp(w + u0, 2) @ frame.T

            ds = np.roll(fr.ds, -j)
            fwd = np.concatenate([[0.0], np.cumsum(ds[:-1])])
            L = fr.length
            s_nodes = np.where(fwd > L / 2, fwd - L, fwd)
            order = np.roll(np.arange(profile.n), -j)
            u_nodes = (profile.u()[order] - u0 + np.pi) % (2 * np.pi) - np.pi
            self.param_lo, self.param_hi = -np.pi, np.pi
            self.nodes = pos(u_nodes)
            self.s_nodes = s_nodes
            self.param_of_nodes = u_nodes
        else:
            pts = np.asarray(profile, dtype=float)
            chord = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
            spline = CubicSpline(chord, pts)
            sp1, sp2 = spline.derivative(1), spline.derivative(2)
            g1, g2 = sp1(chord), sp2(chord)
            kappa = np.linalg.norm(np.cross(g1, g2), axis=1) / np.linalg.norm(g1, axis=1) ** 3
            j = int(np.argmax(kappa))
            T = g1[j] / np.linalg.norm(g1[j])
            B = np.cross(g1[j], g2[j])
            B /= np.linalg.norm(B)
            N = np.cross(B, T)
            frame = np.stack([T, N, B])
            p0 = pts[j]
            c0 = chord[j]

            def pos(w):
                return (spline(w + c0) - p0) @ frame.T

            def d1(w):
                return sp1(w + c0) @ frame.T

            def d2(w):
                return sp2(w + c0) @ frame.T

            self.param_lo, self.param_hi = chord[0] - c0, chord[-1] - c0
            self.nodes = (pts - p0) @ frame.T
            self.s_nodes = chord - c0
            self.param_of_nodes = chord - c0
        self.pos, self.d1, self.d2 = pos, d1, d2
        inside = np.abs(self.s_nodes) <= window
        self.window_nodes = self.nodes[inside]
        self.window_params = self.param_of_nodes[inside]


def rescaled_profile_distance(profile, model: str = "GrimReaper", window: float = 3.0,
                              model_points: int = 241, align: bool = True) -> float:
    """Symmetric mean distance between a rescaled profile and a model curve.

    ``profile`` is a :class:`DiscreteCurve` or an ``(m, 3)`` array of an open
    arc, already scaled to unit peak curvature.  Both curves are compared
    over arclength ``[-window, window]`` around the curvature peak, after the
    best rigid motion in the osculating plane.
    """
    prof = _Profile(profile, window)
    f, f1, f2 = _model(model)
    margin = window + 1.0
    if model == "Circle":
        # the circle closes up; a wider parameter range would alias
        margin = min(margin, math.pi)
    mgrid = np.linspace(-margin, margin, 801)
    sm = np.linspace(-window, window, model_points)
    model_pts = f(sm)
    pgrid = np.linspace(prof.window_params.min() - 0.5 * abs(prof.window_params.min()) - 1e-9,
                        prof.window_params.max() + 0.5 * abs(prof.window_params.max()) + 1e-9, 801)
    pgrid = np.clip(pgrid, prof.param_lo, prof.param_hi)

    def dist(params):
        theta, dx, dy = params
        c, s = math.cos(theta), math.sin(theta)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        off = np.array([dx, dy, 0.0])
        q = prof.window_nodes @ rot.T + off
        d_pm = np.sqrt(_closest(q[:, :2], f, f1, f2, mgrid, -margin, margin) ** 2 + q[:, 2] ** 2)
        # model -> profile: move the model by the inverse motion instead
        mq = np.column_stack([model_pts, np.zeros(len(sm))])
        back = (mq - off) @ rot
        d_mp = _closest(back, prof.pos, prof.d1, prof.d2, pgrid, prof.param_lo, prof.param_hi)
        return 0.5 * (float(np.mean(d_pm)) + float(np.mean(d_mp)))

    best = dist((0.0, 0.0, 0.0))
    if align and best > 1e-12:
        res = optimize.minimize(dist, x0=np.zeros(3), method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
        best = min(best, float(res.fun))
    return best
