"""Ball masses, the monotone quantity A_z(t) and density estimates.

A surface is handled as the varifold of one or more revolved profiles.  Each
profile is upsampled with a cubic spline, and every fine cell carries the
ring measure ``2 pi r |u'| dx``.  The part of a ring inside the ball
``B_t(z)``, ``z = (z1, d cos psi, d sin psi)``, is the azimuthal arc
``|phi| < phi0`` with

    cos phi0 = (|a - z1|^2 + r^2 + d^2 - t^2) / (2 r d),

so azimuthal integrals are exact.  Inside a fine cell the cosine is taken
linear in the parameter and the arc functions are integrated in closed
form; this keeps the quadrature second order even in cells that the sphere
``|x - z| = t`` cuts.  For ``d = 0`` (z on the axis) rings are either fully
inside or outside and the cut point is located by linear interpolation of
``|x - z|^2 - t^2``.

``A_z(t)`` is

    mu(B_t)/t^2 + 1/4 int_{B_t} |H|^2 + int_{B_t} <H, x - z>/t^2
        + 1/2 int_{B_t} (1/|x - z|^2 - 1/t^2) <x - z, eta> dsigma

with the mean curvature vector ``H N`` (``H`` the mean of the principal
curvatures) and ``eta`` the outward co-normal of the boundary circles.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import LiYauViolation, SingularPoint
from .hcurve import ClampedBoundary
from .io import write_json, write_table
from .revolution import RevolutionSurface, willmore_energy
from .thresholds import SINGULAR_TOL, Circle, boundary_integral, c_ly, c_ly_rot, circles

AXIS_TOL = 1e-12


# --------------------------------------------------------------------------
# fine ring measure

@dataclass(frozen=True)
class _Rings:
    """Fine samples of one profile: position, ring density and curvature."""

    a: np.ndarray
    r: np.ndarray
    omega: np.ndarray      # 2 pi r |u'| per unit parameter
    H: np.ndarray
    na: np.ndarray         # normal at azimuth 0, axial component
    nr: np.ndarray         # radial component
    dx: float


def _surfaces(surface) -> list[RevolutionSurface]:
    if isinstance(surface, RevolutionSurface):
        return [surface]
    return list(surface)


_CACHE: "OrderedDict[tuple[int, int], tuple[RevolutionSurface, _Rings]]" = OrderedDict()


def _rings_cached(surface: RevolutionSurface, M: int) -> _Rings:
    # surfaces hold arrays and are not hashable; key on identity and keep
    # the surface alive alongside its samples
    key = (id(surface), M)
    hit = _CACHE.get(key)
    if hit is not None and hit[0] is surface:
        _CACHE.move_to_end(key)
        return hit[1]
    rings = _build_rings(surface, M)
    _CACHE[key] = (surface, rings)
    if len(_CACHE) > 32:
        _CACHE.popitem(last=False)
    return rings


def _build_rings(surface: RevolutionSurface, M: int) -> _Rings:
    c = surface.profile
    x = c.x
    sa = CubicSpline(x, c.a)
    sr = CubicSpline(x, c.r)
    sH = CubicSpline(x, surface.H)
    xf = np.linspace(0.0, 1.0, M + 1)
    a, r = sa(xf), sr(xf)
    ap, rp = sa(xf, 1), sr(xf, 1)
    speed = np.hypot(ap, rp)
    # spline overshoot at an end that sits on the axis
    r = np.maximum(r, 0.0)
    return _Rings(a, r, 2 * np.pi * r * speed, sH(xf), rp / speed, -ap / speed, 1.0 / M)


def _rings(surface: RevolutionSurface, t_min: float) -> _Rings:
    """Upsampled rings with cell size well below ``t_min``."""
    L = float(np.sum(np.hypot(np.diff(surface.profile.a), np.diff(surface.profile.r))))
    M = int(np.ceil(64 * L / t_min))
    M = int(min(max(M, 4 * surface.profile.N), 400_000))
    return _rings_cached(surface, M)


def _arccos_mean(c0, c1):
    """Mean over a cell of arccos(clip(c)) for c linear from c0 to c1."""
    def P(c):
        cc = np.clip(c, -1.0, 1.0)
        inner = cc * np.arccos(cc) - np.sqrt(1.0 - cc * cc)
        return np.where(c < -1.0, np.pi * c, np.where(c > 1.0, 0.0, inner))

    def F(c):
        return np.arccos(np.clip(c, -1.0, 1.0))

    dc = c1 - c0
    small = np.abs(dc) <= 1e-9 * np.maximum(1.0, np.abs(c0))
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (P(c1) - P(c0)) / np.where(small, 1.0, dc)
    return np.where(small, F(0.5 * (c0 + c1)), val)


def _sin_mean(c0, c1):
    """Mean over a cell of sqrt(1 - clip(c)^2) for c linear from c0 to c1."""
    def Q(c):
        cc = np.clip(c, -1.0, 1.0)
        return 0.5 * (cc * np.sqrt(1.0 - cc * cc) + np.arcsin(cc))

    def G(c):
        cc = np.clip(c, -1.0, 1.0)
        return np.sqrt(1.0 - cc * cc)

    dc = c1 - c0
    small = np.abs(dc) <= 1e-9 * np.maximum(1.0, np.abs(c0))
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (Q(c1) - Q(c0)) / np.where(small, 1.0, dc)
    return np.where(small, G(0.5 * (c0 + c1)), val)


def _step_mean(q0, q1):
    """Fraction of a cell where q < 0, q linear from q0 to q1."""
    in0, in1 = q0 < 0, q1 < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = q0 / (q0 - q1)
    frac = np.where(in0 & in1, 1.0, 0.0)
    frac = np.where(in0 & ~in1, lam, frac)
    frac = np.where(~in0 & in1, 1.0 - lam, frac)
    return frac


def _cell_avg(v):
    return 0.5 * (v[..., 1:] + v[..., :-1])


def _ring_terms(R: _Rings, z1: float, d: float, t: np.ndarray):
    """Per radius: mass, |H|^2 integral and <H N, x - z> integral inside B_t."""
    t = np.asarray(t, dtype=float)[:, None]
    dxz = R.a - z1
    rho2 = dxz * dxz + R.r * R.r + d * d
    if d <= AXIS_TOL:
        frac = _step_mean(rho2[:-1] - t * t, rho2[1:] - t * t)
        sfrac = np.zeros_like(frac)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            c = (rho2[None, :] - t * t) / (2 * R.r * d)
        # a ring of zero radius is one point: inside iff rho2 < t^2
        c = np.where(R.r > 0, c, np.where(rho2[None, :] < t * t, -2.0, 2.0))
        frac = _arccos_mean(c[:, :-1], c[:, 1:]) / np.pi
        sfrac = _sin_mean(c[:, :-1], c[:, 1:]) / np.pi
    w = R.omega * R.dx
    mass = frac @ _cell_avg(w)
    will = frac @ _cell_avg(w * R.H ** 2)
    # <N, x - z> over the arc: (n_a dx + n_r r) phi0 - n_r d sin phi0, per pi
    A = R.na * dxz + R.nr * R.r
    pair = frac @ _cell_avg(w * R.H * A) - d * (sfrac @ _cell_avg(w * R.H * R.nr))
    return mass, will, pair


def _circle_terms(c: Circle, z1: float, d: float, t: np.ndarray) -> np.ndarray:
    """1/2 int over the part of the circle inside B_t of (1/|x-z|^2 - 1/t^2)<x-z, eta>."""
    t = np.asarray(t, dtype=float)
    a, r = c.p.a, c.p.r
    t1, t2 = c.tau.t1, c.tau.t2
    dx = a - z1
    alpha = t1 * dx + t2 * r
    beta = t2 * d
    near = dx * dx + (r - d) ** 2
    far = dx * dx + (r + d) ** 2
    gamma = 0.5 * (near + far)
    delta = 2 * r * d
    if delta > 0:
        th0 = np.arccos(np.clip((gamma - t * t) / delta, -1.0, 1.0))
    else:
        th0 = np.where(gamma < t * t, np.pi, 0.0)
    # int_{-th0}^{th0} d th / (gamma - delta cos th)
    root = np.sqrt(near * far)
    k = np.sqrt(far / near)
    inv = 4.0 / root * np.arctan(k * np.tan(0.5 * th0))
    inv = np.where(th0 >= np.pi, 2 * np.pi / root, inv)
    # (alpha - beta cos)/(gamma - delta cos) = beta/delta + (alpha - beta gamma/delta)/(gamma - delta cos)
    bd = t2 / (2 * r)
    first = bd * 2 * th0 + (alpha - bd * gamma) * inv
    second = (2 * alpha * th0 - 2 * beta * np.sin(th0)) / (t * t)
    return 0.5 * c.sign * r * (first - second)


# --------------------------------------------------------------------------
# public operations

def _z_pair(z) -> tuple[float, float]:
    z = np.asarray(z, dtype=float)
    if z.shape == (2,):
        return float(z[0]), abs(float(z[1]))
    return float(z[0]), float(np.hypot(z[1], z[2]))


def ball_mass(surface, z, t) -> float | np.ndarray:
    """Area of the surface inside the open ball B_t(z); t may be an array."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr <= 0):
        raise ValueError("radius must be positive")
    z1, d = _z_pair(z)
    total = np.zeros_like(t_arr)
    for s in _surfaces(surface):
        total += _ring_terms(_rings(s, t_arr.min()), z1, d, t_arr)[0]
    return float(total[0]) if np.ndim(t) == 0 else total


@dataclass(frozen=True)
class DensityProfile:
    z: tuple[float, float, float]
    radii: np.ndarray
    A_values: np.ndarray
    theta_hat: float
    mass_term: np.ndarray
    willmore_term: np.ndarray
    pairing_term: np.ndarray
    boundary_term: np.ndarray
    limit: float = float("nan")      # W/4 + 1/2 B(z)

    def __post_init__(self):
        if np.any(np.diff(self.radii) <= 0):
            raise ValueError("radii must be strictly increasing")
        if not np.all(np.isfinite(self.A_values)):
            raise ValueError("A_z(t) is not finite")

    def monotonicity_defect(self) -> float:
        """Largest decrease of A_z between consecutive radii (0 if monotone)."""
        return float(max(0.0, -np.min(np.diff(self.A_values)))) if len(self.radii) > 1 else 0.0

    def write_csv(self, path: str) -> None:
        write_table(path, ["t", "A", "mass_term", "willmore_term", "pairing_term", "boundary_term"],
                    zip(self.radii, self.A_values, self.mass_term, self.willmore_term,
                        self.pairing_term, self.boundary_term))

    def summary(self) -> dict:
        return {"z": list(self.z), "theta_hat": self.theta_hat, "limit": self.limit,
                "A_min_radius": float(self.A_values[0]), "A_max_radius": float(self.A_values[-1]),
                "monotonicity_defect": self.monotonicity_defect()}

    def write_json(self, path: str) -> None:
        write_json(path, self.summary())


def _boundary_circles(boundary) -> list[Circle]:
    return [] if boundary is None else circles(boundary)


def simon_profile(surface, boundary, z, radii) -> DensityProfile:
    """Evaluate A_z(t) with its four terms on the given radii.

    ``boundary`` is a ClampedBoundary, a list of Circles, or None for a
    surface without boundary.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size == 0 or np.any(radii <= 0):
        raise ValueError("radii must be a nonempty array of positive numbers")
    z1, d = _z_pair(z)
    cs = _boundary_circles(boundary)
    for c in cs:
        if np.hypot(c.p.a - z1, c.p.r - d) < SINGULAR_TOL:
            raise SingularPoint(f"z = ({z1:.6g}, {d:.6g}) lies on a boundary circle")
    mass = np.zeros_like(radii)
    will = np.zeros_like(radii)
    pair = np.zeros_like(radii)
    for s in _surfaces(surface):
        m, w, p = _ring_terms(_rings(s, radii.min()), z1, d, radii)
        mass += m
        will += w
        pair += p
    bterm = np.zeros_like(radii)
    for c in cs:
        bterm += _circle_terms(c, z1, d, radii)
    mass_term = mass / radii**2
    willmore_term = 0.25 * will
    pairing_term = pair / radii**2
    A = mass_term + willmore_term + pairing_term + bterm
    W = sum(willmore_energy(s) for s in _surfaces(surface))
    B = boundary_integral(cs, [z1, d, 0.0]) if cs else 0.0
    zz = np.asarray(z, dtype=float)
    z3 = (float(zz[0]), float(zz[1]), float(zz[2]) if zz.shape == (3,) else 0.0)
    t_hi = min(radii[-1], 10 * radii[0]) if len(radii) > 1 else 10 * radii[0]
    theta = density_estimate(surface, z, radii[0], t_hi)
    return DensityProfile(z3, radii, A, theta, mass_term, willmore_term, pairing_term, bterm,
                          W / 4 + 0.5 * B)


def _surface_ends(surface) -> list[tuple[float, float]]:
    ends = []
    for s in _surfaces(surface):
        c = s.profile
        scale = max(float(np.max(c.r)), 1e-300)
        for i in (0, -1):
            if c.r[i] > 1e-3 * scale:          # ends near the axis are not boundary
                ends.append((float(c.a[i]), float(c.r[i])))
    return ends


def density_estimate(surface, z, t_min: float, t_max: float, n: int = 16) -> float:
    """Extrapolate mass(B_t)/(pi t^2) to t = 0 with a fit theta + c t."""
    if not 0 < t_min < t_max:
        raise ValueError("need 0 < t_min < t_max")
    z1, d = _z_pair(z)
    for a, r in _surface_ends(surface):
        if np.hypot(a - z1, r - d) < SINGULAR_TOL:
            raise SingularPoint("z lies on a boundary ring of the surface")
    t = np.geomspace(t_min, t_max, n)
    mass = ball_mass(surface, z, t)
    if mass[0] == 0.0:          # no surface within t_min of z
        return 0.0
    ratio = mass / (np.pi * t * t)
    X = np.column_stack([np.ones_like(t), t])
    theta = float(np.linalg.lstsq(X, ratio, rcond=None)[0][0])
    # a point near but off the surface can extrapolate below zero
    return max(theta, 0.0) if abs(theta) >= 1e-12 else 0.0


def local_scale(surface) -> float:
    """Diameter of the profile point set, used to size density windows."""
    pts = np.vstack([s.profile.nodes for s in _surfaces(surface)])
    span = np.ptp(pts[:, 0])
    return float(max(span, 2 * np.max(pts[:, 1])))


@dataclass
class LiYauResult:
    passes: bool
    margin: float
    densities: list = field(default_factory=list)
    points: list = field(default_factory=list)

    def __iter__(self):
        # unpacks as (passes, margin)
        return iter((self.passes, self.margin))


def _sample_points(surface, K: str, n: int) -> list[tuple[float, float]]:
    profiles = [s.profile for s in _surfaces(surface)]
    if K == "axis":
        lo = min(float(c.a.min()) for c in profiles)
        hi = max(float(c.a.max()) for c in profiles)
        # points where a profile reaches the axis are the interesting ones
        touch = []
        for c in profiles:
            scale = float(np.max(c.r))
            for i in (0, -1):
                if c.r[i] <= 1e-3 * scale:
                    touch.append(float(c.a[i]))
        fill = list(np.linspace(lo, hi, max(n - len(touch), 0)))
        return [(h, 0.0) for h in sorted(set(touch)) + fill][:n]
    pts = []
    per = max(1, n // len(profiles))
    for c in profiles:
        idx = np.linspace(0, c.N, per + 2).round().astype(int)[1:-1]
        pts += [(float(c.a[i]), float(c.r[i])) for i in idx]
    return pts[:n]


def li_yau_check(surface, boundary, K: str = "axis", n_samples: int = 32,
                 tol_density: float = 0.05, window=(0.02, 0.2)) -> LiYauResult:
    """Compare W with the Li-Yau threshold and, if below, sample densities.

    Raises LiYauViolation if the threshold holds but a sampled density is
    not below ``2 - tol_density``.
    """
    if K not in ("axis", "all-space"):
        raise ValueError("K must be 'axis' or 'all-space'")
    W = sum(willmore_energy(s) for s in _surfaces(surface))
    threshold = (c_ly_rot(boundary) if K == "axis" else c_ly(boundary))[0]
    margin = threshold - W
    result = LiYauResult(bool(margin > 0), float(margin))
    if not result.passes:
        return result
    scale = local_scale(surface)
    for z1, d in _sample_points(surface, K, n_samples):
        try:
            theta = density_estimate(surface, (z1, d), window[0] * scale, window[1] * scale)
        except SingularPoint:
            continue
        result.points.append((z1, d))
        result.densities.append(theta)
        if theta >= 2 - tol_density:
            raise LiYauViolation(f"density {theta:.4f} at z = ({z1:.6g}, {d:.6g}) below the threshold")
    return result
