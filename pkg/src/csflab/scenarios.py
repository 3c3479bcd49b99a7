"""Analytic initial curves and twistedness / flat-point diagnostics.

Each preset is a closed-form map ``u -> R^3`` on ``[0, 2pi)``.  Presets whose
derivatives are easy to write down also carry them, so the discrete Frenet
data can be checked against exact curvature and torsion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidParams
from .geometry import TWO_PI, DiscreteCurve, FrenetField

#: twistedness floor for torsion, relative to 2*pi/L (same scale as kappa)
TAU_FLOOR_REL = 1e-7


@dataclass
class Preset:
    """A named family of analytic curves.

    ``derivatives(u)`` returns exact ``(g', g'', g''')`` when available.
    ``sphere_radius`` is set for curves lying on a sphere centred at the
    origin.
    """

    id: str
    params: dict
    generator: Callable[[np.ndarray], np.ndarray]
    derivatives: Callable[[np.ndarray], tuple] | None = None
    shift: np.ndarray | None = None
    sphere_radius: float | None = None
    planar: bool = False
    notes: dict = field(default_factory=dict)

    def sample(self, n: int) -> DiscreteCurve:
        u = np.arange(n) * TWO_PI / n
        return DiscreteCurve(self.generator(u), self.shift)

    def expected(self, u):
        """Exact ``(kappa, tau)`` at parameters ``u``, or None."""
        if self.derivatives is None:
            return None
        d1, d2, d3 = self.derivatives(np.asarray(u, dtype=float))
        cross = np.cross(d1, d2)
        cn = np.linalg.norm(cross, axis=1)
        kappa = cn / np.linalg.norm(d1, axis=1) ** 3
        with np.errstate(invalid="ignore", divide="ignore"):
            tau = np.einsum("ij,ij->i", cross, d3) / cn**2
        return kappa, tau


def _stack(*cols):
    return np.column_stack([np.broadcast_to(c, np.shape(cols[0])) for c in cols])


def _circle(R=1.0):
    if R <= 0:
        raise InvalidParams("circle radius must be positive")

    def gen(u):
        return _stack(R * np.cos(u), R * np.sin(u), np.zeros_like(u))

    def der(u):
        c, s, z = np.cos(u), np.sin(u), np.zeros_like(u)
        return (_stack(-R * s, R * c, z), _stack(-R * c, -R * s, z), _stack(R * s, -R * c, z))

    return Preset("circle", {"R": R}, gen, der, planar=True)


def _ellipse(a=2.0, b=1.0):
    if a <= 0 or b <= 0:
        raise InvalidParams("ellipse semi-axes must be positive")

    def gen(u):
        return _stack(a * np.cos(u), b * np.sin(u), np.zeros_like(u))

    def der(u):
        c, s, z = np.cos(u), np.sin(u), np.zeros_like(u)
        return (_stack(-a * s, b * c, z), _stack(-a * c, -b * s, z), _stack(a * s, -b * c, z))

    return Preset("ellipse", {"a": a, "b": b}, gen, der, planar=True)


def _torus_coil(R=2.0, r=0.5, p=1, q=8):
    """(p, q) coil on the torus with radii R > r, wound right-handed.

    The vertical component is ``-r sin(qu)`` so that positive windings give
    positive torsion.
    """
    if not (float(p).is_integer() and float(q).is_integer()):
        raise InvalidParams("torus coil winding numbers must be integers")
    p, q = int(p), int(q)
    if p < 1 or q < 1 or math.gcd(p, q) != 1:
        raise InvalidParams(f"need coprime positive windings, got p={p}, q={q}")
    if not 0 < r < R:
        raise InvalidParams(f"need 0 < r < R, got r={r}, R={R}")

    def gen(u):
        rho = R + r * np.cos(q * u)
        return _stack(rho * np.cos(p * u), rho * np.sin(p * u), -r * np.sin(q * u))

    def der(u):
        cq, sq = np.cos(q * u), np.sin(q * u)
        cp, sp = np.cos(p * u), np.sin(p * u)
        rho = R + r * cq
        rho1 = -r * q * sq
        rho2 = -r * q * q * cq
        rho3 = r * q**3 * sq
        # (rho e)^(m) with e = (cos pu, sin pu) expanded by Leibniz
        e0 = (cp, sp)
        e1 = (-p * sp, p * cp)
        e2 = (-p * p * cp, -p * p * sp)
        e3 = (p**3 * sp, -(p**3) * cp)

        def planar(terms):
            return [sum(c * e[i] for c, e in terms) for i in range(2)]

        x1 = planar([(rho1, e0), (rho, e1)])
        x2 = planar([(rho2, e0), (2 * rho1, e1), (rho, e2)])
        x3 = planar([(rho3, e0), (3 * rho2, e1), (3 * rho1, e2), (rho, e3)])
        z1, z2, z3 = -r * q * cq, r * q * q * sq, r * q**3 * cq
        return (_stack(*x1, z1), _stack(*x2, z2), _stack(*x3, z3))

    return Preset("torus_coil", {"R": R, "r": r, "p": p, "q": q}, gen, der)


def _helix(a=1.0, b=1.0, turns=1):
    """Screw-periodic helix; the R -> infinity limit of the torus coil."""
    if a <= 0 or b == 0:
        raise InvalidParams("helix needs a > 0 and b != 0")
    if not float(turns).is_integer() or turns < 1:
        raise InvalidParams("helix turns must be a positive integer")
    w = int(turns)

    def gen(u):
        return _stack(a * np.cos(w * u), a * np.sin(w * u), b * w * u)

    def der(u):
        c, s = np.cos(w * u), np.sin(w * u)
        z = np.zeros_like(u)
        return (
            _stack(-a * w * s, a * w * c, np.full_like(u, b * w)),
            _stack(-a * w * w * c, -a * w * w * s, z),
            _stack(a * w**3 * s, -a * w**3 * c, z),
        )

    return Preset("helix", {"a": a, "b": b, "turns": w}, gen, der,
                  shift=np.array([0.0, 0.0, TWO_PI * b * w]))


def _spherical_lissajous(R=1.0, a=1, b=2, phi=0.0, h=0.4):
    """Normalized Lissajous lift ``(cos au, sin au, h cos(bu + phi))`` on a sphere."""
    if R <= 0 or h < 0:
        raise InvalidParams("need R > 0 and h >= 0")
    if not (float(a).is_integer() and float(b).is_integer()) or a < 1 or b < 0:
        raise InvalidParams("Lissajous frequencies must be integers, a >= 1")

    def gen(u):
        m = _stack(np.cos(a * u), np.sin(a * u), h * np.cos(b * u + phi))
        return R * m / np.linalg.norm(m, axis=1)[:, None]

    return Preset("spherical_lissajous", {"R": R, "a": a, "b": b, "phi": phi, "h": h},
                  gen, sphere_radius=R)


def _perturbed_circle_3d(R=1.0, eps=0.1, modes=3, seed=0):
    """Circle plus a seeded sum of small vertical harmonics of order 2..modes+1."""
    if R <= 0 or eps < 0 or int(modes) < 1:
        raise InvalidParams("need R > 0, eps >= 0, modes >= 1")
    rng = np.random.default_rng(int(seed))
    orders = np.arange(2, int(modes) + 2)
    amps = rng.uniform(0.5, 1.0, size=orders.size)
    amps /= np.sum(amps)
    phases = rng.uniform(0.0, TWO_PI, size=orders.size)

    def gen(u):
        z = eps * R * np.sum(amps[:, None] * np.sin(np.outer(orders, u) + phases[:, None]), axis=0)
        return _stack(R * np.cos(u), R * np.sin(u), z)

    def der(u):
        arg = np.outer(orders, u) + phases[:, None]
        w = (eps * R * amps)[:, None]
        k = orders[:, None]
        z1 = np.sum(w * k * np.cos(arg), axis=0)
        z2 = np.sum(-w * k**2 * np.sin(arg), axis=0)
        z3 = np.sum(-w * k**3 * np.cos(arg), axis=0)
        c, s = np.cos(u), np.sin(u)
        return (_stack(-R * s, R * c, z1), _stack(-R * c, -R * s, z2), _stack(R * s, -R * c, z3))

    return Preset("perturbed_circle_3d", {"R": R, "eps": eps, "modes": int(modes), "seed": int(seed)},
                  gen, der)


PRESETS = {
    "circle": _circle,
    "ellipse": _ellipse,
    "torus_coil": _torus_coil,
    "spherical_lissajous": _spherical_lissajous,
    "perturbed_circle_3d": _perturbed_circle_3d,
    "helix": _helix,
}


def preset(id: str, params: dict | None = None) -> Preset:
    """Build the preset ``id`` with ``params`` overriding its defaults."""
    try:
        factory = PRESETS[id]
    except KeyError:
        raise InvalidParams(f"unknown preset {id!r}; choose from {sorted(PRESETS)}") from None
    try:
        return factory(**(params or {}))
    except TypeError as exc:
        raise InvalidParams(f"bad parameters for {id}: {exc}") from None


def make(id: str, params: dict | None = None, n: int = 256) -> DiscreteCurve:
    """Sample preset ``id`` at ``n`` uniform parameter values."""
    return preset(id, params).sample(n)


# -- diagnostics -------------------------------------------------------------

@dataclass(frozen=True)
class TwistCertificate:
    twisted: bool
    kappa_margin: float
    tau_margin: float

    def __bool__(self):
        return self.twisted


def tau_floor(frenet: FrenetField) -> float:
    return TAU_FLOOR_REL * TWO_PI / frenet.length


def is_twisted(curve: DiscreteCurve | None, frenet: FrenetField) -> TwistCertificate:
    """Scale-free positivity margins ``min kappa * L/2pi`` and ``min tau * L/2pi``."""
    scale = frenet.length / TWO_PI
    kappa_margin = float(np.min(frenet.kappa)) * scale
    if np.all(frenet.tau_valid):
        tau_margin = float(np.min(frenet.tau)) * scale
    else:
        tau_margin = float("nan")
    twisted = (kappa_margin > TAU_FLOOR_REL and np.all(frenet.tau_valid)
               and tau_margin > TAU_FLOOR_REL)
    return TwistCertificate(bool(twisted), kappa_margin, tau_margin)


@dataclass(frozen=True)
class FlatPointCount:
    count: int
    partial: bool
    planar: bool

    def __int__(self):
        return self.count


def flat_point_census(frenet: FrenetField) -> FlatPointCount:
    """Sign changes of torsion around the node cycle.

    Only nodes with ``|tau|`` above the floor take part, so a run of
    near-zero values between two same-sign values is not counted.
    """
    floor = tau_floor(frenet)
    valid = frenet.tau_valid
    tau = np.where(valid, frenet.tau, 0.0)
    strong = valid & (np.abs(tau) > floor)
    partial = not bool(np.all(valid))
    if not np.any(strong):
        return FlatPointCount(0, partial, planar=True)
    signs = np.sign(tau[strong])
    changes = int(np.count_nonzero(signs != np.roll(signs, 1)))
    return FlatPointCount(changes, partial, planar=False)


def count_flat_points(frenet: FrenetField) -> int:
    return flat_point_census(frenet).count
