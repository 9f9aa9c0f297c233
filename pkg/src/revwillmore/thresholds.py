"""Energy thresholds for clamped surfaces of revolution.

The boundary of a cylindrical surface consists of two circles about the
axis.  Circle ``y`` sits at axial position ``p_y[0]`` with radius ``p_y[1]``
and carries the outward co-normal ``(-1)**(1+y) * (tau_1, tau_2 cos t,
tau_2 sin t)``.  For a point ``z`` the boundary integral is

    B(z) = sum_y  int <eta, b - z> / |b - z|^2  dsigma.

Writing ``z = (z1, d cos psi, d sin psi)`` the azimuthal integral has the
closed form used throughout this module:

    int_0^{2pi} (alpha - beta cos t) / (gamma - delta cos t) dt
        = 2pi [beta/delta + (alpha - beta gamma/delta) / sqrt(gamma^2 - delta^2)]

with ``beta/delta`` finite as ``d -> 0``.  Simpson quadrature in ``t`` is kept
as an independent route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .errors import SingularPoint, VerticalTangent
from .hcurve import ClampedBoundary, HPoint, ProfileCurve, UnitDir

SINGULAR_TOL = 1e-9
FOUR_PI = 4 * np.pi
EIGHT_PI = 8 * np.pi


@dataclass(frozen=True)
class Circle:
    """A boundary circle with its co-normal sign: ``eta = sign * tau``."""

    p: HPoint
    tau: UnitDir
    sign: float

    @classmethod
    def end(cls, p: HPoint, tau: UnitDir, y: int) -> "Circle":
        return cls(p, tau, -1.0 if y == 0 else 1.0)


def circles(boundary) -> list[Circle]:
    """Normalize a ClampedBoundary or a sequence of circles."""
    if isinstance(boundary, ClampedBoundary):
        return [Circle.end(boundary.p0, boundary.tau0, 0), Circle.end(boundary.p1, boundary.tau1, 1)]
    if isinstance(boundary, Circle):
        return [boundary]
    return list(boundary)


def boundary_scale(boundary) -> float:
    """Diameter of the union of the boundary circles."""
    cs = circles(boundary)
    diam = max(2 * c.p.r for c in cs)
    for i, ci in enumerate(cs):
        for cj in cs[i + 1:]:
            diam = max(diam, np.hypot(ci.p.a - cj.p.a, ci.p.r + cj.p.r))
    return float(diam)


def axial_window(boundary) -> tuple[float, float]:
    cs = circles(boundary)
    scale = boundary_scale(boundary)
    lo = min(c.p.a for c in cs) - 10 * scale
    hi = max(c.p.a for c in cs) + 10 * scale
    return lo, hi


# --------------------------------------------------------------------------
# T(tau)

def t_tau(boundary: ClampedBoundary) -> float:
    return FOUR_PI - 2 * np.pi * (boundary.tau1.t2 - boundary.tau0.t2)


# --------------------------------------------------------------------------
# boundary integral

def _circle_closed(c: Circle, z1, d):
    """Closed-form circle integral, vectorized over (z1, d) with d >= 0."""
    z1 = np.asarray(z1, dtype=float)
    d = np.abs(np.asarray(d, dtype=float))
    a, r = c.p.a, c.p.r
    t1, t2 = c.tau.t1, c.tau.t2
    dx = a - z1
    alpha = t1 * dx + t2 * r
    gamma = dx * dx + r * r + d * d
    # gamma^2 - delta^2 factorizes into squared distances to the two
    # points where the meridian plane cuts the circle
    near = dx * dx + (r - d) ** 2
    far = dx * dx + (r + d) ** 2
    root = np.sqrt(near * far)
    # beta/delta = t2/(2r); alpha - beta*gamma/delta = alpha - t2*gamma/(2r)
    val = 2 * np.pi * r * (t2 / (2 * r) + (alpha - t2 * gamma / (2 * r)) / root)
    return c.sign * val, near


def _check_off_circles(boundary, z1: float, d: float) -> None:
    for c in circles(boundary):
        if np.hypot(c.p.a - z1, c.p.r - d) < SINGULAR_TOL:
            raise SingularPoint(f"z = ({z1:.6g}, {d:.6g}) lies on a boundary circle")


def _z_coords(z) -> tuple[float, float]:
    z = np.asarray(z, dtype=float)
    if z.shape == (2,):
        return float(z[0]), abs(float(z[1]))
    return float(z[0]), float(np.hypot(z[1], z[2]))


def boundary_integral_axis(boundary, h) -> np.ndarray:
    """Closed form on the axis: ``2pi [r (t1 (a - h) + t2 r) / ((a-h)^2 + r^2)]``."""
    h = np.asarray(h, dtype=float)
    total = np.zeros_like(h)
    for c in circles(boundary):
        a, r = c.p.a, c.p.r
        total = total + c.sign * 2 * np.pi * r * (c.tau.t1 * (a - h) + c.tau.t2 * r) / ((a - h) ** 2 + r * r)
    return total


def boundary_integral_closed(boundary, z1, d) -> np.ndarray:
    """Closed-form boundary integral at (axial z1, axis distance d)."""
    z1, d = np.broadcast_arrays(np.asarray(z1, float), np.asarray(d, float))
    total = np.zeros(z1.shape)
    for c in circles(boundary):
        val, _ = _circle_closed(c, z1, d)
        total = total + val
    return total


def _simpson_points(c: Circle, z1: float, d: float) -> int:
    """Even panel count giving ~1e-15 relative accuracy for the periodic integrand."""
    dx = c.p.a - z1
    near = dx * dx + (c.p.r - d) ** 2
    far = dx * dx + (c.p.r + d) ** 2
    gamma = 0.5 * (near + far)
    delta = 2 * c.p.r * d
    if delta == 0.0:
        return 64
    rho = (gamma - np.sqrt(near * far)) / delta   # decay factor of Fourier modes
    # Simpson is (4 T_h - T_2h) / 3, so the coarse trapezoid sets the error
    n = int(np.ceil(80.0 / max(-np.log(rho), 1e-6))) + 16
    n = min(max(n, 64), 1 << 22)
    return n + (n % 2)


def boundary_integral_quadrature(boundary, z, n: int | None = None) -> float:
    """Composite Simpson in the circle angle, for any z off the circles."""
    z = np.asarray(z, dtype=float)
    if z.shape == (2,):
        z = np.array([z[0], z[1], 0.0])
    total = 0.0
    for c in circles(boundary):
        m = n or _simpson_points(c, z[0], float(np.hypot(z[1], z[2])))
        t = np.linspace(0.0, 2 * np.pi, m + 1)
        b = np.column_stack([np.full_like(t, c.p.a), c.p.r * np.cos(t), c.p.r * np.sin(t)])
        eta = c.sign * np.column_stack([np.full_like(t, c.tau.t1), c.tau.t2 * np.cos(t), c.tau.t2 * np.sin(t)])
        diff = b - z
        f = np.sum(eta * diff, axis=1) / np.sum(diff * diff, axis=1) * c.p.r
        wts = np.ones(m + 1)
        wts[1:-1:2] = 4
        wts[2:-1:2] = 2
        total += float((2 * np.pi / m) / 3 * (wts @ f))
    return total


def boundary_integral(boundary, z) -> float:
    """Boundary co-normal integral at a point z of R^3 (or (z1, d))."""
    z1, d = _z_coords(z)
    _check_off_circles(boundary, z1, d)
    if d == 0.0:
        return float(boundary_integral_axis(boundary, z1))
    return boundary_integral_quadrature(boundary, z)


# --------------------------------------------------------------------------
# C_LY^rot and C_LY

def _golden_refine(f, lo: float, hi: float, mid: float, tol: float = 1e-10) -> tuple[float, float]:
    try:
        res = minimize_scalar(lambda h: -f(h), bracket=(lo, mid, hi), method="golden",
                              options={"xtol": tol})
        x = float(res.x)
    except ValueError:      # tie with a neighbour: no strict bracket
        res = minimize_scalar(lambda h: -f(h), bounds=(lo, hi), method="bounded",
                              options={"xatol": tol})
        x = float(res.x)
    if not lo <= x <= hi:
        x = mid
    return x, float(f(x))


def _bracket_sup(boundary, n_grid: int = 4096) -> tuple[float, float | None, np.ndarray, np.ndarray]:
    lo, hi = axial_window(boundary)
    hs = np.linspace(lo, hi, n_grid)
    vals = boundary_integral_axis(boundary, hs) / (2 * np.pi)
    best, h_best = 0.0, None          # h = +-infinity: bracket -> 0
    f = lambda h: float(boundary_integral_axis(boundary, h)) / (2 * np.pi)
    # refine the few largest local maxima: the bracket can be multimodal
    interior = np.where((vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:]))[0] + 1
    order = interior[np.argsort(vals[interior])[::-1]][:4]
    for k in order:
        x, v = _golden_refine(f, hs[k - 1], hs[k + 1], hs[k])
        if v > best:
            best, h_best = v, x
    for k in (0, n_grid - 1):
        if vals[k] > best:
            best, h_best = float(vals[k]), float(hs[k])
    return best, h_best, hs, vals


def _no_boundary(boundary) -> bool:
    """Degenerate data or an empty circle list (closed surfaces): B vanishes."""
    if isinstance(boundary, ClampedBoundary):
        return boundary.is_degenerate()
    return not circles(boundary)


def c_ly_rot(boundary) -> tuple[float, float | None]:
    """``4pi (2 - sup_h bracket(h))``; ``h_star`` is None when the sup is the limit at infinity."""
    if _no_boundary(boundary):
        return EIGHT_PI, None
    best, h_best, _, _ = _bracket_sup(boundary)
    return FOUR_PI * (2.0 - best), h_best


def bracket_curve(boundary, n_grid: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """The axial bracket on the search grid, for plotting."""
    _, _, hs, vals = _bracket_sup(boundary, n_grid)
    return hs, vals


def c_ly(boundary, grid: tuple[int, int] = (1024, 1024)) -> tuple[float, tuple[float, float] | None]:
    """``8pi - 2 sup_z B(z)`` over axial position and axis distance."""
    if _no_boundary(boundary):
        return EIGHT_PI, None
    rot, h_star = c_ly_rot(boundary)
    best = (EIGHT_PI - rot) / 2.0
    z_best = None if h_star is None else (h_star, 0.0)

    lo, hi = axial_window(boundary)
    scale = boundary_scale(boundary)
    Z1 = np.linspace(lo, hi, grid[0])
    D = np.linspace(0.0, 10 * scale, grid[1])
    vals = np.full((grid[0], grid[1]), -np.inf)
    for j0 in range(0, grid[1], 128):
        Zg, Dg = np.meshgrid(Z1, D[j0:j0 + 128], indexing="ij")
        with np.errstate(divide="ignore", invalid="ignore"):
            v = boundary_integral_closed(boundary, Zg, Dg)
        vals[:, j0:j0 + 128] = np.where(np.isfinite(v), v, -np.inf)

    cs = [(c.sign, c.p.a, c.p.r, c.tau.t1, c.tau.t2) for c in circles(boundary)]

    def neg(zd):
        # scalar closed form; scipy calls this thousands of times
        z1, d = zd[0], abs(zd[1])
        total = 0.0
        for sign, a, r, t1, t2 in cs:
            dx = a - z1
            near = dx * dx + (r - d) ** 2
            if near <= 0.0:
                return np.inf
            far = dx * dx + (r + d) ** 2
            gamma = dx * dx + r * r + d * d
            total += sign * 2 * np.pi * r * (t2 / (2 * r) + (t1 * dx + t2 * r - t2 * gamma / (2 * r))
                                               / math.sqrt(near * far))
        return -total

    step = np.array([Z1[1] - Z1[0], D[1] - D[0]])
    flat = np.argsort(vals.ravel())[::-1][:3]
    for k in flat:
        i, j = np.unravel_index(k, vals.shape)
        if vals[i, j] > best:
            best, z_best = float(vals[i, j]), (float(Z1[i]), float(D[j]))
        x0 = np.array([Z1[i], D[j]])
        simplex = np.array([x0, x0 + [step[0], 0.0], x0 + [0.0, step[1]]])
        res = minimize(neg, x0=x0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 400,
                                "initial_simplex": simplex})
        if np.isfinite(res.fun) and -res.fun > best:
            best, z_best = float(-res.fun), (float(res.x[0]), float(abs(res.x[1])))
    return EIGHT_PI - 2.0 * best, z_best


# --------------------------------------------------------------------------
# caps

def spherical_cap_energy(tau: UnitDir) -> float:
    if abs(tau.t1) < 1e-12:
        raise VerticalTangent("cap energy requires a non-vertical tangent")
    return 2 * np.pi * (1.0 - tau.t2)


def cap_center(p: HPoint, tau: UnitDir) -> tuple[float, float]:
    """Axis-centred circle through p tangent to tau: (x_c, R)."""
    if abs(tau.t1) < 1e-12:
        raise VerticalTangent("no axis-centred circle is tangent to a vertical direction")
    xc = p.a + p.r * tau.t2 / tau.t1
    return xc, float(np.hypot(p.a - xc, p.r))


def cap_side(tau: UnitDir, y: int) -> str:
    """Side on which the cap attached at end y reaches the axis.

    The cap leaves p_y in direction (-1)**y * tau_y.
    """
    d = tau.t1 if y == 0 else -tau.t1
    return "right" if d > 0 else "left"


def construct_cap(p: HPoint, tau: UnitDir, side: str, N: int = 1024,
                  eps_axis: float = 1e-6) -> tuple[ProfileCurve, float]:
    """Circular arc from p to the axis; the last node sits at height eps_axis*R."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    xc, R = cap_center(p, tau)
    phi_p = np.arctan2(p.r, p.a - xc)
    phi_end = np.arcsin(eps_axis) if side == "right" else np.pi - np.arcsin(eps_axis)
    phi = phi_p + (phi_end - phi_p) * np.linspace(0, 1, N + 1)
    nodes = np.column_stack([xc + R * np.cos(phi), R * np.sin(phi)])
    nodes[0] = p.as_array()
    h = xc + R if side == "right" else xc - R
    return ProfileCurve(nodes), float(h)


def single_circle_integral(p: HPoint, tau: UnitDir, y: int, z) -> float:
    return boundary_integral([Circle.end(p, tau, y)], z)


def cap_identity_check(boundary_side: tuple[HPoint, UnitDir, int], side: str | None = None,
                       N: int = 1024) -> tuple[float, float]:
    """Willmore energy of the cap versus ``4pi - 2 B_y(h e_1)``."""
    from .revolution import revolve, willmore_energy

    p, tau, y = boundary_side
    if side is None:
        side = cap_side(tau, y)
    elif side != cap_side(tau, y):
        raise ValueError(f"a cap at end {y} with this tangent reaches the axis on the {cap_side(tau, y)}")
    arc, h = construct_cap(p, tau, side, N)
    lhs = willmore_energy(revolve(arc))
    rhs = FOUR_PI - 2.0 * float(boundary_integral_axis([Circle.end(p, tau, y)], h))
    return lhs, rhs


# --------------------------------------------------------------------------
# report

@dataclass(frozen=True)
class ThresholdReport:
    T_tau: float
    c_ly_rot: float
    h_star: float | None
    c_ly: float
    z_star: tuple[float, float] | None
    gate_margin: float | None = None

    def to_dict(self) -> dict:
        return {
            "t_tau": self.T_tau,
            "c_ly_rot": self.c_ly_rot,
            "h_star": self.h_star,
            "c_ly": self.c_ly,
            "z_star": None if self.z_star is None else list(self.z_star),
            "gate_margin": self.gate_margin,
        }

    def check(self, tol_search: float = 1e-6) -> list[str]:
        """Names of violated report invariants (empty when all hold)."""
        bad = []
        if self.c_ly_rot < self.c_ly - 1e-9:
            bad.append("c_ly_rot >= c_ly")
        if self.c_ly_rot > EIGHT_PI + 1e-9:
            bad.append("c_ly_rot <= 8pi")
        if self.c_ly < self.T_tau - tol_search:
            bad.append("c_ly >= T")
        return bad


def threshold_report(boundary: ClampedBoundary, W0: float | None = None,
                     grid: tuple[int, int] = (1024, 1024)) -> ThresholdReport:
    rot, h = c_ly_rot(boundary)
    full, z = c_ly(boundary, grid)
    margin = None if W0 is None else rot - W0
    return ThresholdReport(t_tau(boundary), rot, h, full, z, margin)
