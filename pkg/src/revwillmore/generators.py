"""Named families of profile curves used by tests, the minimizer and the CLI."""

from __future__ import annotations

import numpy as np

from .hcurve import ClampedBoundary, HPoint, ProfileCurve, UnitDir, reimpose_boundary


def _grid(N: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, N + 1)


def semicircle_arc(theta0: float, theta1: float, N: int, radius: float = 1.0,
                   center: float = 0.0) -> ProfileCurve:
    """Arc of the axis-centred circle, polar angle affine in x.

    These are hyperbolic geodesics; the revolved surface is a spherical zone.
    """
    th = theta0 + (theta1 - theta0) * _grid(N)
    return ProfileCurve(np.column_stack([center + radius * np.cos(th), radius * np.sin(th)]))


def sphere_profile(N: int, delta: float = 1e-3) -> ProfileCurve:
    """Unit-sphere profile with both poles cut at polar angle ``delta``."""
    return semicircle_arc(delta, np.pi - delta, N)


def zone_profile(N: int) -> ProfileCurve:
    """Spherical zone between polar angles pi/6 and 5pi/6."""
    return semicircle_arc(np.pi / 6, 5 * np.pi / 6, N)


def catenoid(N: int, x0: float = 0.0, x1: float = 1.0, scale: float = 1.0) -> ProfileCurve:
    s = x0 + (x1 - x0) * _grid(N)
    return ProfileCurve(scale * np.column_stack([s, np.cosh(s)]))


def horizontal_segment(N: int, height: float = 1.0) -> ProfileCurve:
    x = _grid(N)
    return ProfileCurve(np.column_stack([x, np.full_like(x, height)]))


def circle_arc(center, radius: float, phi0: float, phi1: float, N: int) -> ProfileCurve:
    """Arc of a circle with arbitrary centre (not necessarily on the axis)."""
    ph = phi0 + (phi1 - phi0) * _grid(N)
    c = np.asarray(center, dtype=float)
    return ProfileCurve(np.column_stack([c[0] + radius * np.cos(ph), c[1] + radius * np.sin(ph)]))


def perturbed_catenoid(N: int, amplitude: float = 0.05, mode: str = "clamped") -> ProfileCurve:
    """Catenoid on [0,1] with a height perturbation.

    ``mode="sine"`` adds ``amplitude*sin(pi x)``, which moves the end
    tangents.  ``mode="clamped"`` adds ``amplitude*sin(pi x)**2``, which keeps
    both endpoints and end slopes, so the result carries catenoid data.
    """
    x = _grid(N)
    bump = np.sin(np.pi * x) if mode == "sine" else np.sin(np.pi * x) ** 2
    return ProfileCurve(np.column_stack([x, np.cosh(x) + amplitude * bump]))


def hermite_curve(boundary: ClampedBoundary, N: int, stretch: float = 1.0) -> ProfileCurve:
    """Cubic Hermite blend between the clamped endpoints and tangents."""
    p0, p1 = boundary.p0.as_array(), boundary.p1.as_array()
    t0, t1 = boundary.tau0.as_array(), boundary.tau1.as_array()
    L = stretch * max(np.linalg.norm(p1 - p0), 1e-3)
    x = _grid(N)[:, None]
    h00 = 2 * x**3 - 3 * x**2 + 1
    h10 = x**3 - 2 * x**2 + x
    h01 = -2 * x**3 + 3 * x**2
    h11 = x**3 - x**2
    nodes = h00 * p0 + h10 * L * t0 + h01 * p1 + h11 * L * t1
    return conform(nodes, boundary)


def geodesic_blend(boundary: ClampedBoundary, N: int) -> ProfileCurve:
    """Default initializer: the hyperbolic geodesic through both endpoints,
    bent near each end so that the clamped tangents hold.

    The geodesic is the axis-centred circle through p0 and p1 (a vertical
    line when both share the axial coordinate).  A Hermite correction with
    compact support near each end rotates its tangents onto the data.
    """
    p0, p1 = boundary.p0.as_array(), boundary.p1.as_array()
    x = _grid(N)
    if abs(p1[0] - p0[0]) < 1e-12:
        base = np.outer(1 - x, p0) + np.outer(x, p1)
        dbase0 = dbase1 = p1 - p0
    else:
        c = (p1 @ p1 - p0 @ p0) / (2 * (p1[0] - p0[0]))
        R = np.hypot(p0[0] - c, p0[1])
        a0 = np.arctan2(p0[1], p0[0] - c)
        a1 = np.arctan2(p1[1], p1[0] - c)
        ph = a0 + (a1 - a0) * x
        base = np.column_stack([c + R * np.cos(ph), R * np.sin(ph)])
        dbase0 = (a1 - a0) * R * np.array([-np.sin(a0), np.cos(a0)])
        dbase1 = (a1 - a0) * R * np.array([-np.sin(a1), np.cos(a1)])
    speed = 0.5 * (np.linalg.norm(dbase0) + np.linalg.norm(dbase1))
    want0 = speed * boundary.tau0.as_array()
    want1 = speed * boundary.tau1.as_array()
    # Hermite basis functions with unit slope at one end and zero data elsewhere
    h10 = x**3 - 2 * x**2 + x
    h11 = x**3 - x**2
    nodes = base + np.outer(h10, want0 - dbase0) + np.outer(h11, want1 - dbase1)
    return conform(nodes, boundary)


def graph_curve(alpha_minus: float, alpha_plus: float, N: int, bulge: float = 0.0) -> ProfileCurve:
    """Graph over [-1, 1] with horizontal end tangents."""
    x = _grid(N)
    s = 3 * x**2 - 2 * x**3
    height = alpha_minus + (alpha_plus - alpha_minus) * s + bulge * np.sin(np.pi * x) ** 2
    return ProfileCurve(np.column_stack([-1 + 2 * x, height]))


def pinched_catenoid(N: int, depth: float = 0.9) -> ProfileCurve:
    """Catenoid whose middle is pulled toward the axis (same clamped data).

    ``depth`` is the fraction of the waist height removed.
    """
    x = _grid(N)
    r = np.cosh(x)
    dip = depth * np.exp(-((x - 0.5) / 0.12) ** 2) * np.sin(np.pi * x) ** 2
    return ProfileCurve(np.column_stack([x, r * (1 - dip)]))


def random_clamped_curve(rng: np.random.Generator, N: int, modes: int = 4,
                         amplitude: float = 0.25) -> tuple[ProfileCurve, ClampedBoundary]:
    """Smooth random curve; its own end data define the boundary."""
    x = _grid(N)
    p0 = np.array([rng.uniform(-1, 0), rng.uniform(0.6, 1.6)])
    p1 = np.array([rng.uniform(0.6, 1.6), rng.uniform(0.6, 1.6)])
    base = np.outer(1 - x, p0) + np.outer(x, p1)
    pert = np.zeros_like(base)
    for k in range(1, modes + 1):
        for j in range(2):
            c = rng.normal(scale=amplitude / k**1.5)
            ph = rng.uniform(0, 2 * np.pi)
            # subtract the chord so the endpoints stay put
            pert[:, j] += c * (np.sin(k * np.pi * x + ph) - (1 - x) * np.sin(ph) - x * np.sin(k * np.pi + ph))
    # shrink the perturbation until the curve stays well above the axis
    while np.min(base[:, 1] + pert[:, 1]) < 0.3:
        pert *= 0.5
    nodes = base + pert
    curve = ProfileCurve(nodes)
    return curve, ClampedBoundary.from_curve(curve)


def random_boundary(rng: np.random.Generator, heights=(0.1, 10.0), axial=(-5.0, 5.0)) -> ClampedBoundary:
    """Boundary data with uniform heights, axial positions and tangent angles."""
    p0 = HPoint(rng.uniform(*axial), rng.uniform(*heights))
    p1 = HPoint(rng.uniform(*axial), rng.uniform(*heights))
    return ClampedBoundary(p0, p1, UnitDir.from_angle(rng.uniform(0, 2 * np.pi)),
                           UnitDir.from_angle(rng.uniform(0, 2 * np.pi)))


def conform(nodes: np.ndarray, boundary: ClampedBoundary) -> ProfileCurve:
    """Snap a node array onto clamped data (endpoints and tangent directions)."""
    return ProfileCurve(reimpose_boundary(nodes, boundary))


def catenoid_boundary() -> ClampedBoundary:
    return ClampedBoundary.from_values((0.0, 1.0), (1.0, np.cosh(1.0)),
                                       (1.0, 0.0), (1.0, np.sinh(1.0)))


def zone_boundary() -> ClampedBoundary:
    c, s = np.cos(np.pi / 6), np.sin(np.pi / 6)
    # traversed with increasing polar angle: tangent (-sin, cos)
    return ClampedBoundary.from_values((c, s), (-c, s), (-s, c), (-s, -c))


def axis_cap(h: float, R: float, phi: float, y: int, N: int = 1024, eps_axis: float = 1e-6):
    """Spherical cap reaching the axis at (h, 0), attached as end y.

    The sphere has radius R and its centre on the axis, on the side of h
    where the cap lies.  The boundary circle sits at polar angle phi about
    that centre.  Returns (arc, p, tau): the arc runs from p to the axis,
    stopping at height ``eps_axis * R``.
    """
    from .thresholds import construct_cap, cap_side

    xc = h - R if y == 1 else h + R
    p = HPoint(xc + R * np.cos(phi), R * np.sin(phi))
    tau = UnitDir(-np.sin(phi), np.cos(phi))
    arc, _ = construct_cap(p, tau, cap_side(tau, y), N, eps_axis)
    return arc, p, tau
