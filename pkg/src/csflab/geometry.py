"""Closed space curves on a uniform parameter grid and their Frenet data.

A curve is stored as ``n`` samples of ``u -> gamma(u)`` at ``u_j = 2*pi*j/n``.
Derivatives in ``u`` come either from the trigonometric interpolant
(``"spectral"``, the default) or from 4th-order periodic central differences
(``"fd4"``), which is kept as an independent cross-check.

Screw-periodic curves (``gamma(u + 2*pi) = gamma(u) + shift``) are also
accepted.  They are closed in the quotient of R^3 by the translation and are
used for the exact helix, whose curvature and torsion are constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import DegenerateCurve

DerivativeScheme = Literal["spectral", "fd4"]

TWO_PI = 2.0 * np.pi

#: scale-aware floors, multiplied by 2*pi/L (curvature) or L/n (speed)
KAPPA_FLOOR_REL = 1e-7
V_FLOOR_REL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteCurve:
    """Closed polyline sample of a smooth curve on a uniform ``u``-grid.

    Parameters
    ----------
    points : array_like, shape (n, 3)
        Node positions at ``u_j = 2*pi*j/n``.
    shift : array_like, shape (3,), optional
        Translation picked up after one period.  Zero for genuinely closed
        curves.
    """

    points: np.ndarray
    shift: np.ndarray = field(default=None)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
        n = pts.shape[0]
        if n < 16 or n % 2:
            raise ValueError(f"node count must be even and >= 16, got {n}")
        shift = np.zeros(3) if self.shift is None else np.array(self.shift, dtype=float)
        if shift.shape != (3,):
            raise ValueError("shift must be a 3-vector")
        if not np.all(np.isfinite(pts)):
            raise DegenerateCurve("non-finite node coordinates")
        seg = np.roll(pts, -1, axis=0) - pts
        seg[-1] += shift
        if np.min(np.linalg.norm(seg, axis=1)) <= 0.0:
            raise DegenerateCurve("adjacent nodes coincide")
        pts.flags.writeable = False
        shift.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "shift", shift)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def closed(self) -> bool:
        return True

    @property
    def param_step(self) -> float:
        return TWO_PI / self.n

    @property
    def is_screw(self) -> bool:
        return bool(np.any(self.shift != 0.0))

    def u(self) -> np.ndarray:
        return np.arange(self.n) * self.param_step

    def periodic_part(self) -> np.ndarray:
        """Positions with the linear drift ``shift * u / 2pi`` removed."""
        if not self.is_screw:
            return self.points
        return self.points - np.outer(self.u() / TWO_PI, self.shift)

    def transformed(self, rotation=None, translation=None, scale=1.0) -> "DiscreteCurve":
        """Return ``scale * R x + b`` applied to every node."""
        rot = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
        b = np.zeros(3) if translation is None else np.asarray(translation, dtype=float)
        return DiscreteCurve(scale * self.points @ rot.T + b, scale * rot @ self.shift)


@dataclass(frozen=True, eq=False)
class FrenetField:
    """Per-node Frenet data.

    ``tau``, ``normal`` and ``binormal`` are NaN wherever ``tau_valid`` is
    false, i.e. where the curvature falls below the scale-aware floor.
    """

    v: np.ndarray
    kappa: np.ndarray
    tau: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    binormal: np.ndarray
    tau_valid: np.ndarray
    ds: np.ndarray
    kappa_floor: float
    scheme: str = "spectral"

    @property
    def n(self) -> int:
        return self.v.shape[0]

    @property
    def length(self) -> float:
        return float(np.sum(self.ds))

    @property
    def param_step(self) -> float:
        return TWO_PI / self.n


# -- differentiation ---------------------------------------------------------

def _wavenumbers(n: int) -> np.ndarray:
    return np.fft.rfftfreq(n, d=1.0 / n)


def spectral_derivatives(values: np.ndarray, orders=(1,)) -> list[np.ndarray]:
    """Derivatives of periodic samples on ``[0, 2pi)`` via the real FFT.

    The Nyquist mode is dropped for odd orders so that real data stay real
    and the derivative matches the symmetric trigonometric interpolant.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    coef = np.fft.rfft(values, axis=0)
    k = _wavenumbers(n)
    shape = (-1,) + (1,) * (values.ndim - 1)
    out = []
    for m in orders:
        factor = (1j * k) ** m
        if m % 2 == 1:
            factor[-1] = 0.0
        out.append(np.fft.irfft(coef * factor.reshape(shape), n=n, axis=0))
    return out


# periodic 4th-order central stencils: offsets -> weights
_FD4 = {
    1: ({-2: 1.0, -1: -8.0, 1: 8.0, 2: -1.0}, 12.0),
    2: ({-2: -1.0, -1: 16.0, 0: -30.0, 1: 16.0, 2: -1.0}, 12.0),
    3: ({-3: 1.0, -2: -8.0, -1: 13.0, 1: -13.0, 2: 8.0, 3: -1.0}, 8.0),
}


def fd4_derivatives(values: np.ndarray, orders=(1,)) -> list[np.ndarray]:
    """4th-order periodic central differences on the uniform ``u``-grid."""
    values = np.asarray(values, dtype=float)
    h = TWO_PI / values.shape[0]
    out = []
    for m in orders:
        weights, denom = _FD4[m]
        acc = np.zeros_like(values)
        for offset, w in weights.items():
            # f_{j+offset}
            acc += w * np.roll(values, -offset, axis=0)
        out.append(acc / (denom * h**m))
    return out


def periodic_derivatives(values, orders=(1,), scheme: DerivativeScheme = "spectral"):
    if scheme == "spectral":
        return spectral_derivatives(values, orders)
    if scheme == "fd4":
        return fd4_derivatives(values, orders)
    raise ValueError(f"unknown derivative scheme {scheme!r}")


def point_derivatives(points, shift=None, orders=(1, 2, 3), scheme: DerivativeScheme = "spectral"):
    """u-derivatives of raw node positions ``(n, 3)`` with an optional screw shift."""
    points = np.asarray(points, dtype=float)
    if shift is None or not np.any(shift):
        return periodic_derivatives(points, orders, scheme)
    drift = np.asarray(shift, dtype=float) / TWO_PI
    u = np.arange(points.shape[0]) * TWO_PI / points.shape[0]
    derivs = periodic_derivatives(points - np.outer(u, drift), orders, scheme)
    return [d + drift if m == 1 else d for d, m in zip(derivs, orders)]


def curve_derivatives(curve: DiscreteCurve, orders=(1, 2, 3), scheme: DerivativeScheme = "spectral"):
    """u-derivatives of the node positions, accounting for a screw shift."""
    return point_derivatives(curve.points, curve.shift, orders, scheme)


def arclength_derivative(values, frenet: FrenetField, order: int = 1, scheme: DerivativeScheme | None = None):
    """``d^order f / ds^order`` of a periodic nodal field (order 1 or 2)."""
    scheme = scheme or frenet.scheme
    values = np.asarray(values, dtype=float)
    (fu,) = periodic_derivatives(values, (1,), scheme)
    fs = fu / frenet.v
    if order == 1:
        return fs
    if order == 2:
        (fsu,) = periodic_derivatives(fs, (1,), scheme)
        return fsu / frenet.v
    raise ValueError("order must be 1 or 2")


# -- Frenet frame --------------------------------------------------------------

def frenet(curve: DiscreteCurve, scheme: DerivativeScheme = "spectral") -> FrenetField:
    """Speed, curvature, torsion and the Frenet frame at every node.

    Uses ``kappa = |g' x g''| / |g'|^3`` and the determinant form
    ``tau = det(g', g'', g''') / |g' x g''|^2``.

    Raises
    ------
    DegenerateCurve
        If the speed drops below ``1e-12 * L / n`` anywhere.
    """
    d1, d2, d3 = curve_derivatives(curve, (1, 2, 3), scheme)
    v = np.linalg.norm(d1, axis=1)
    h = curve.param_step
    length = float(np.sum(v) * h)
    if not np.isfinite(length) or length <= 0.0:
        raise DegenerateCurve("curve has no length")
    if np.min(v) < V_FLOOR_REL * length / curve.n:
        raise DegenerateCurve(f"node speed {np.min(v):.3e} below collision floor")

    cross = np.cross(d1, d2)
    cross_norm = np.linalg.norm(cross, axis=1)
    kappa = cross_norm / v**3
    kappa_floor = KAPPA_FLOOR_REL * TWO_PI / length
    valid = kappa >= kappa_floor

    tangent = d1 / v[:, None]
    tau = np.full(curve.n, np.nan)
    normal = np.full((curve.n, 3), np.nan)
    binormal = np.full((curve.n, 3), np.nan)
    cn = cross_norm[valid]
    tau[valid] = np.einsum("ij,ij->i", cross[valid], d3[valid]) / cn**2
    binormal[valid] = cross[valid] / cn[:, None]
    normal[valid] = np.cross(binormal[valid], tangent[valid])

    return FrenetField(
        v=v, kappa=kappa, tau=tau, tangent=tangent, normal=normal,
        binormal=binormal, tau_valid=valid, ds=v * h,
        kappa_floor=kappa_floor, scheme=scheme,
    )


def integrate_scalar(values, frenet: FrenetField, mask=None) -> float:
    """Periodic rectangle rule ``sum f_i v_i du`` over unmasked nodes.

    ``mask`` marks the nodes to *keep*; excluded nodes drop out together with
    their arclength weight.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (frenet.n,):
        raise ValueError(f"field has shape {values.shape}, expected ({frenet.n},)")
    weights = frenet.ds
    if mask is not None:
        keep = np.asarray(mask, dtype=bool)
        return float(np.sum(np.where(keep, values, 0.0) * np.where(keep, weights, 0.0)))
    return float(np.sum(values * weights))


def curve_length(curve: DiscreteCurve, scheme: DerivativeScheme = "spectral") -> float:
    (d1,) = curve_derivatives(curve, (1,), scheme)
    return float(np.sum(np.linalg.norm(d1, axis=1)) * curve.param_step)


# -- interpolation and resampling --------------------------------------------

class TrigInterpolant:
    """Evaluate the trigonometric interpolant of periodic samples anywhere.

    The Nyquist coefficient is split evenly between ``+n/2`` and ``-n/2`` so
    the interpolant is real and passes through the samples.
    """

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        n = values.shape[0]
        self.n = n
        coef = np.fft.fft(values, axis=0) / n
        k = np.fft.fftfreq(n, d=1.0 / n)
        if n % 2 == 0:
            nyq = coef[n // 2] / 2.0
            coef = np.concatenate([coef, nyq[None]], axis=0)
            coef[n // 2] = nyq
            k = np.concatenate([k, [n / 2.0]])
        self.k = k
        self.coef = coef

    def __call__(self, u, order: int = 0) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        basis = np.exp(1j * np.outer(u, self.k))
        if order:
            basis = basis * (1j * self.k) ** order
        return np.real(basis @ self.coef)


def _upsample(values: np.ndarray, m: int, orders=(0, 1, 2)) -> list[np.ndarray]:
    """Values and u-derivatives of the trigonometric interpolant on an m-grid."""
    n = values.shape[0]
    coef = np.fft.rfft(values, axis=0)
    # split the Nyquist mode so the zero-padded interpolant stays symmetric
    coef[-1] *= 0.5
    padded = np.zeros((m // 2 + 1,) + values.shape[1:], dtype=complex)
    padded[: n // 2 + 1] = coef
    k = _wavenumbers(m).reshape((-1,) + (1,) * (values.ndim - 1))
    scale = m / n
    return [np.fft.irfft(padded * (1j * k) ** p, n=m, axis=0) * scale for p in orders]


def _quintic_hermite(x, h, f, df, d2f):
    """Evaluate piecewise quintic Hermite data on a uniform periodic grid."""
    m = f.shape[0]
    pos = x / h
    i = np.floor(pos).astype(int)
    t = (pos - i)[:, None] if f.ndim == 2 else pos - i
    i0 = i % m
    i1 = (i + 1) % m
    t2, t3 = t * t, t * t * t
    t4, t5 = t3 * t, t3 * t2
    h00 = 1 - 10 * t3 + 15 * t4 - 6 * t5
    h01 = 10 * t3 - 15 * t4 + 6 * t5
    h10 = t - 6 * t3 + 8 * t4 - 3 * t5
    h11 = -4 * t3 + 7 * t4 - 3 * t5
    h20 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5)
    h21 = 0.5 * (t3 - 2 * t4 + t5)
    return (h00 * f[i0] + h01 * f[i1] + h * (h10 * df[i0] + h11 * df[i1])
            + h * h * (h20 * d2f[i0] + h21 * d2f[i1]))


def resample_uniform_arclength(curve: DiscreteCurve, oversample: int = 16, newton_steps: int = 4) -> DiscreteCurve:
    """Move nodes along the interpolant to equal arclength spacing.

    Node 0 stays fixed.  The geometric image is the trigonometric interpolant
    of the input: positions and arclength are taken exactly on a refined grid
    and interpolated in between with quintic Hermite polynomials.
    """
    n = curve.n
    m = oversample * n
    hf = TWO_PI / m
    uf = np.arange(m) * hf
    p0, p1, p2 = _upsample(curve.periodic_part(), m)
    drift = curve.shift / TWO_PI
    p1 = p1 + drift
    speed = np.linalg.norm(p1, axis=1)
    dspeed, d2speed = spectral_derivatives(speed, (1, 2))
    mean = float(np.mean(speed))
    total = mean * TWO_PI

    # s(u) = mean*u + periodic antiderivative of (speed - mean), s(0) = 0
    coef = np.fft.rfft(speed - mean)
    k = _wavenumbers(m)
    k[0] = 1.0
    s_periodic = np.fft.irfft(coef / (1j * k), n=m)
    s_periodic -= s_periodic[0]

    targets = np.arange(n) * total / n
    u_new = np.interp(targets, s_periodic + mean * uf, uf)
    for _ in range(newton_steps):
        s_val = _quintic_hermite(u_new, hf, s_periodic, speed - mean, dspeed) + mean * u_new
        ds_val = _quintic_hermite(u_new, hf, speed, dspeed, d2speed)
        u_new = u_new - (s_val - targets) / ds_val
    u_new[0] = 0.0
    pts = _quintic_hermite(u_new, hf, p0, p1 - drift, p2)
    if curve.is_screw:
        pts = pts + np.outer(u_new / TWO_PI, curve.shift)
    return DiscreteCurve(pts, curve.shift)
