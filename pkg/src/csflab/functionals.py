"""Scalar functionals of a curve and checks of their evolution laws.

Every integral is the periodic rectangle rule of :func:`integrate_scalar`.
Torsion-dependent quantities only use nodes where the torsion is defined;
the curvature-torsion entropy ``int kappa log(tau / kappa^2) ds`` is only
reported on twisted curves.

Evolution laws are checked from stored snapshots: a centred difference of
the functional in time against quadrature of the right-hand side at the
middle snapshot.  This keeps the check independent of the time stepper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .errors import IdentityUnavailable
from .flow import FlowConfig, FlowState, run
from .geometry import TWO_PI, DiscreteCurve, FrenetField, arclength_derivative, frenet, integrate_scalar
from .scenarios import flat_point_census, is_twisted, make


@dataclass
class FunctionalSample:
    """One time slice of every tracked scalar.  ``None`` means undefined."""

    t: float
    dt: float | None
    length: float
    kappa_max: float
    kappa_min: float
    tau_max: float | None
    tau_min: float | None
    total_curvature: float
    total_torsion: float
    ct_entropy: float | None
    tau_log_quantity: float | None
    d_quantity: float
    sup_tau_over_kappa: float | None
    sup_tau_over_kappa2: float | None
    gaussian_entropy: float | None
    min_tau_margin: float | None
    flat_point_count: int
    twisted: bool

    @property
    def min_kappa(self):
        return self.kappa_min

    @property
    def min_tau(self):
        return self.tau_min

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def _opt(x):
    return None if x is None or not np.isfinite(x) else float(x)


def sample(state: FlowState, compute_lambda: bool = False) -> FunctionalSample:
    """Evaluate all functionals on the current Frenet data."""
    fr = state.frenet
    kappa, valid = fr.kappa, fr.tau_valid
    tau = np.where(valid, fr.tau, 0.0)
    cert = is_twisted(state.curve, fr)
    census = flat_point_census(fr)
    any_valid = bool(np.any(valid))

    ct_entropy = None
    if cert.twisted:
        ct_entropy = integrate_scalar(kappa * (np.log(fr.tau) - 2.0 * np.log(kappa)), fr)

    tau_log = None
    if np.all(valid):
        tau_log = integrate_scalar(_tau_log_integrand(kappa, tau), fr)

    ratio1 = ratio2 = None
    if any_valid:
        ratio1 = float(np.max(np.abs(tau[valid]) / kappa[valid]))
        ratio2 = float(np.max(np.abs(tau[valid]) / kappa[valid] ** 2))

    return FunctionalSample(
        t=float(state.t),
        dt=state.dt,
        length=fr.length,
        kappa_max=float(np.max(kappa)),
        kappa_min=float(np.min(kappa)),
        tau_max=float(np.max(tau[valid])) if any_valid else None,
        tau_min=float(np.min(tau[valid])) if any_valid else None,
        total_curvature=integrate_scalar(kappa, fr),
        total_torsion=integrate_scalar(tau, fr, mask=valid),
        ct_entropy=ct_entropy,
        tau_log_quantity=tau_log,
        d_quantity=float(np.max(kappa)) * fr.length,
        sup_tau_over_kappa=ratio1,
        sup_tau_over_kappa2=ratio2,
        gaussian_entropy=gaussian_entropy(state.curve) if compute_lambda else None,
        min_tau_margin=_opt(cert.tau_margin),
        flat_point_count=census.count,
        twisted=cert.twisted,
    )


def _tau_log_integrand(kappa, tau):
    # tau * log(tau^2 / kappa^4), continuous through tau = 0
    out = np.zeros_like(tau)
    nz = tau != 0
    out[nz] = tau[nz] * (2.0 * np.log(np.abs(tau[nz])) - 4.0 * np.log(kappa[nz]))
    return out


# -- Gaussian (Colding-Minicozzi) entropy ------------------------------------

def _gaussian_density(sq_dist, ds, t0):
    return np.sum(np.exp(-sq_dist / (4.0 * t0)) * ds, axis=-1) / np.sqrt(4.0 * np.pi * t0)


def gaussian_entropy(curve: DiscreteCurve, max_centers: int = 64, grid_points: int = 61,
                     refine: int = 3) -> float:
    """Supremum of the Gaussian-weighted length over centres and scales.

    Centres are the arclength centroid plus (at most ``max_centers``) nodes;
    scales span ``[1e-3, 1e3] * (L/2pi)^2`` on a log grid and the best
    ``refine`` centres are polished by golden-section search in ``log t0``.
    """
    if curve.is_screw:
        raise ValueError("entropy needs a genuinely closed curve")
    fr = frenet(curve)
    pts, ds = curve.points, fr.ds
    scale = (fr.length / TWO_PI) ** 2
    centroid = np.sum(pts * ds[:, None], axis=0) / np.sum(ds)
    stride = max(1, math.ceil(curve.n / max_centers))
    centers = np.vstack([centroid, pts[::stride]])
    sq = np.sum((centers[:, None, :] - pts[None, :, :]) ** 2, axis=-1)

    log_grid = np.linspace(math.log(1e-3), math.log(1e3), grid_points)
    values = np.stack([_gaussian_density(sq, ds, scale * math.exp(lg)) for lg in log_grid], axis=1)
    best = float(np.max(values))

    order = np.argsort(np.max(values, axis=1))[::-1][:refine]
    for c in order:
        j = int(np.argmax(values[c]))
        lo, hi = log_grid[max(j - 1, 0)], log_grid[min(j + 1, grid_points - 1)]

        def neg(lg, row=sq[c]):
            return -_gaussian_density(row, ds, scale * math.exp(lg))

        if 0 < j < grid_points - 1:
            res = optimize.minimize_scalar(neg, bracket=(lo, log_grid[j], hi), method="golden",
                                           tol=1e-10)
        else:
            res = optimize.minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                                           options={"xatol": 1e-10})
        best = max(best, -float(res.fun))
    return best


# -- evolution identities -----------------------------------------------------

class _Fields:
    """Curvature, torsion and their arclength derivatives at one time."""

    def __init__(self, fr: FrenetField, need_tau: bool, need_log_tau: bool):
        if need_tau and not np.all(fr.tau_valid):
            raise IdentityUnavailable("torsion undefined at some node (curvature below floor)")
        self.fr = fr
        self.kappa = fr.kappa
        self.tau = np.where(fr.tau_valid, fr.tau, 0.0)
        self.log_kappa = np.log(self.kappa) if np.all(self.kappa > 0) else None
        self.kappa_s = arclength_derivative(self.kappa, fr)
        if need_log_tau:
            if not is_twisted(None, fr).twisted:
                raise IdentityUnavailable("curve is not twisted")
            self.log_tau = np.log(self.tau)
            self.tau_s = arclength_derivative(self.tau, fr)
            self.log_tau_s = arclength_derivative(self.log_tau, fr)
            self.log_kappa_s = arclength_derivative(self.log_kappa, fr)

    def integral(self, values):
        return integrate_scalar(values, self.fr)


@dataclass(frozen=True)
class Identity:
    id: str
    functional: Callable[[_Fields], float]
    rhs: Callable[[_Fields], float]
    needs_log_tau: bool
    label: str


def _tc_rhs(f):
    return f.integral(-f.kappa * f.tau**2)


def _klk_rhs(f):
    k, t = f.kappa, f.tau
    return f.integral(-f.kappa_s**2 / k - k * np.log(k) * t**2 + k**3 - k * t**2)


def _klt_rhs(f):
    k, t = f.kappa, f.tau
    return f.integral(-k * t**2 * f.log_tau + 2 * k**3 - 2 * f.kappa_s**2 / k + k * f.log_tau_s**2)


def _ent_rhs(f):
    k, t = f.kappa, f.tau
    return f.integral(-k * t**2 * (f.log_tau - 2 * f.log_kappa) + k * f.log_tau_s**2 + 2 * k * t**2)


def _tau_log_rhs(f):
    # includes the cross term 4 tau (log kappa)_s (log tau)_s
    k, t = f.kappa, f.tau
    ell = 2 * f.log_tau - 4 * f.log_kappa
    return f.integral(k**2 * t * ell + 4 * t * f.log_kappa_s**2 - 2 * t * f.log_tau_s**2
                      + 4 * t * f.log_kappa_s * f.log_tau_s + 4 * t**3)


def _tau_log_printed_rhs(f):
    k, t = f.kappa, f.tau
    ell = 2 * f.log_tau - 4 * f.log_kappa
    return f.integral(k**2 * t * ell + t * ((2 * f.log_kappa_s) ** 2 - 0.5 * (2 * f.log_tau_s) ** 2)
                      + 4 * t**3)


def _tt_rhs(f):
    return f.integral(f.kappa**2 * f.tau)


IDENTITIES: dict[str, Identity] = {
    "total_curvature": Identity(
        "total_curvature", lambda f: f.integral(f.kappa), _tc_rhs, False,
        "d/dt int kappa ds = -int kappa tau^2 ds"),
    "kappa_log_kappa": Identity(
        "kappa_log_kappa", lambda f: f.integral(f.kappa * np.log(f.kappa)), _klk_rhs, False,
        "d/dt int kappa log kappa ds"),
    "kappa_log_tau": Identity(
        "kappa_log_tau", lambda f: f.integral(f.kappa * f.log_tau), _klt_rhs, True,
        "d/dt int kappa log tau ds"),
    "ct_entropy": Identity(
        "ct_entropy", lambda f: f.integral(f.kappa * (f.log_tau - 2 * f.log_kappa)), _ent_rhs, True,
        "d/dt int kappa log(tau/kappa^2) ds"),
    "tau_log": Identity(
        "tau_log", lambda f: f.integral(f.tau * (2 * f.log_tau - 4 * f.log_kappa)), _tau_log_rhs, True,
        "d/dt int tau log(tau^2/kappa^4) ds"),
    "total_torsion": Identity(
        "total_torsion", lambda f: f.integral(f.tau), _tt_rhs, False,
        "d/dt int tau ds = int kappa^2 tau ds"),
}

#: right-hand side without the (log kappa)_s (log tau)_s cross term; diagnostic only
EXTRA_IDENTITIES: dict[str, Identity] = {
    "tau_log_as_printed": Identity(
        "tau_log_as_printed", IDENTITIES["tau_log"].functional, _tau_log_printed_rhs, True,
        "d/dt int tau log(tau^2/kappa^4) ds, cross term omitted"),
}

DEFAULT_IDENTITIES = tuple(IDENTITIES)


def get_identity(identity_id: str) -> Identity:
    try:
        return IDENTITIES[identity_id]
    except KeyError:
        pass
    try:
        return EXTRA_IDENTITIES[identity_id]
    except KeyError:
        raise KeyError(f"unknown identity {identity_id!r}") from None


@dataclass(frozen=True)
class IdentityReport:
    identity_id: str
    t_mid: float
    lhs: float
    rhs: float
    residual: float
    scale: float

    @property
    def relative(self) -> float:
        return self.residual / self.scale


def check_identity(history: Sequence[FlowState], identity_id: str) -> IdentityReport:
    """Centred-difference time derivative vs. quadrature of the right-hand side.

    ``history`` holds three snapshots equally spaced in time.
    """
    if len(history) != 3:
        raise ValueError("need exactly three snapshots")
    s0, s1, s2 = history
    delta = s1.t - s0.t
    if delta <= 0 or abs((s2.t - s1.t) - delta) > 1e-9 * max(delta, 1e-300) + 1e-14:
        raise ValueError("snapshots must be equally spaced and increasing in time")
    ident = get_identity(identity_id)
    f0, f1, f2 = (_Fields(s.frenet, True, ident.needs_log_tau) for s in history)
    lhs = (ident.functional(f2) - ident.functional(f0)) / (2.0 * delta)
    rhs = ident.rhs(f1)
    residual = abs(lhs - rhs)
    return IdentityReport(identity_id, float(s1.t), float(lhs), float(rhs), float(residual),
                          float(max(abs(lhs), abs(rhs), 1e-12)))


def equally_spaced_triples(snapshots: Sequence[FlowState], rel_tol: float = 1e-9):
    """Consecutive snapshot triples whose two gaps agree."""
    for a, b, c in zip(snapshots, snapshots[1:], snapshots[2:]):
        d1, d2 = b.t - a.t, c.t - b.t
        if d1 > 0 and abs(d2 - d1) <= rel_tol * d1:
            yield a, b, c


# -- refinement study ---------------------------------------------------------

#: residuals below this are treated as "both sides vanish"
ABS_RESIDUAL_FLOOR = 1e-10


@dataclass(frozen=True)
class RefinementRow:
    identity_id: str
    resolution: int
    n: int
    delta: float
    report: IdentityReport
    measured_order: float | None


@dataclass
class RefinementStudy:
    rows: list[RefinementRow]
    interior: list[tuple[int, IdentityReport]]  # (resolution, report) at every interior snapshot
    unavailable: dict[str, str] = field(default_factory=dict)

    def coarse_ok(self, rel_tol: float = 0.05) -> bool:
        return all(r.report.relative < rel_tol or r.report.residual < ABS_RESIDUAL_FLOOR
                   for r in self.rows if r.resolution == 0)

    def orders_ok(self, min_order: float = 2.0) -> bool:
        return all(r.measured_order is None or r.measured_order >= min_order
                   for r in self.rows if r.resolution > 0)

    def failures(self, rel_tol: float = 0.05, min_order: float = 2.0) -> list[RefinementRow]:
        bad = []
        for r in self.rows:
            if r.resolution == 0 and not (r.report.relative < rel_tol
                                          or r.report.residual < ABS_RESIDUAL_FLOOR):
                bad.append(r)
            elif r.resolution > 0 and r.measured_order is not None and r.measured_order < min_order:
                bad.append(r)
        return bad

    @property
    def passed(self) -> bool:
        return not self.unavailable and not self.failures()


def measured_order(coarse: float, fine: float, ratio: float = 2.0) -> float | None:
    """``log(coarse/fine)/log(ratio)``; None once ``fine`` is at roundoff level."""
    if fine < ABS_RESIDUAL_FLOOR:
        return None if coarse < ABS_RESIDUAL_FLOOR else math.inf
    return math.log(coarse / fine) / math.log(ratio)


def refinement_study(curve_factory: Callable[[int], DiscreteCurve], identity_ids: Sequence[str],
                     n0: int = 128, t_span: float = 0.04, delta0: float = 0.01, levels: int = 3,
                     sigma_cfl: float = 0.2, resample_every: int = 10,
                     scheme: str = "spectral") -> RefinementStudy:
    """Evaluate identities while doubling ``n`` and halving the snapshot gap.

    Level ``l`` uses ``n0 * 2**l`` nodes and snapshot spacing ``delta0 / 2**l``.
    Orders are measured at the common mid-time ``t_span / 2``.
    """
    t_mid = 0.5 * t_span
    rows: list[RefinementRow] = []
    interior: list[tuple[int, IdentityReport]] = []
    unavailable: dict[str, str] = {}
    previous: dict[str, float] = {}
    for level in range(levels):
        n = n0 * 2**level
        delta = delta0 / 2**level
        cfg = FlowConfig(t_end=t_span, sigma_cfl=sigma_cfl, kappa_stop=math.inf,
                         resample_every=resample_every, snapshot_every=delta, scheme=scheme)
        result = run(curve_factory(n), cfg)
        snaps = [s for s in result.snapshots]
        triples = list(equally_spaced_triples(snaps))
        mid = min(triples, key=lambda tr: abs(tr[1].t - t_mid))
        for ident in identity_ids:
            if ident in unavailable:
                continue
            try:
                rep = check_identity(mid, ident)
                if level == 0:
                    for tr in triples:
                        interior.append((level, check_identity(tr, ident)))
            except IdentityUnavailable as exc:
                unavailable[ident] = str(exc)
                continue
            order = None
            if level > 0 and ident in previous:
                order = measured_order(previous[ident], rep.residual)
            previous[ident] = rep.residual
            rows.append(RefinementRow(ident, level, n, delta, rep, order))
    return RefinementStudy(rows, interior, unavailable)


def preset_factory(preset_id: str, params: dict | None = None):
    return lambda n: make(preset_id, params, n)


# -- monotonicity --------------------------------------------------------------

@dataclass(frozen=True)
class IntervalCheck:
    t_start: float
    t_end: float
    ok: bool
    worst_step: float  # most negative increment (or most positive for decreasing checks)


@dataclass
class MonotonicityReport:
    total_curvature_nonincreasing: bool
    total_curvature_worst: float
    torsion_intervals: list[IntervalCheck]
    entropy_intervals: list[IntervalCheck]
    tolerance_rel: float

    @property
    def total_torsion_nondecreasing(self) -> bool:
        return all(iv.ok for iv in self.torsion_intervals)

    @property
    def ct_entropy_nondecreasing(self) -> bool:
        return all(iv.ok for iv in self.entropy_intervals)


def _twisted_runs(series):
    start = None
    for i, s in enumerate(series):
        if s.twisted and start is None:
            start = i
        if not s.twisted and start is not None:
            yield start, i
            start = None
    if start is not None:
        yield start, len(series)


def track_monotonicity(series: Sequence[FunctionalSample], tol_rel: float = 1e-8) -> MonotonicityReport:
    """Check the sign laws of total curvature, total torsion and the entropy.

    Tolerance per snapshot step is ``tol_rel * max|value|`` over the series.
    Entropy steps are only judged where ``sup log(tau/kappa^2) < 2`` at both
    ends.
    """
    tc = np.array([s.total_curvature for s in series])
    tc_scale = float(np.max(np.abs(tc))) if tc.size else 0.0
    tc_inc = np.diff(tc)
    tc_worst = float(np.max(tc_inc)) if tc_inc.size else 0.0
    tc_ok = bool(np.all(tc_inc <= tol_rel * tc_scale))

    tors, ents = [], []
    for a, b in _twisted_runs(series):
        chunk = series[a:b]
        tt = np.array([s.total_torsion for s in chunk])
        scale = float(np.max(np.abs(tt)))
        inc = np.diff(tt)
        worst = float(np.min(inc)) if inc.size else 0.0
        tors.append(IntervalCheck(chunk[0].t, chunk[-1].t, bool(np.all(inc >= -tol_rel * scale)), worst))

        ent = np.array([s.ct_entropy for s in chunk])
        small = np.array([s.sup_tau_over_kappa2 is not None and math.log(s.sup_tau_over_kappa2) < 2.0
                          for s in chunk])
        judged = small[:-1] & small[1:]
        if np.any(judged):
            e_scale = float(np.max(np.abs(ent)))
            e_inc = np.diff(ent)[judged]
            ents.append(IntervalCheck(chunk[0].t, chunk[-1].t,
                                      bool(np.all(e_inc >= -tol_rel * e_scale)), float(np.min(e_inc))))
    return MonotonicityReport(tc_ok, tc_worst, tors, ents, tol_rel)
