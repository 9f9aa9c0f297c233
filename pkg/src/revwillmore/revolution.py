"""Surfaces of revolution generated by profile curves.

The profile ``u = (a, r)`` is rotated about the first coordinate axis:
``f(x, phi) = (a(x), r(x) cos phi, r(x) sin phi)``.  With the orientation
``(d/dx, d/dphi)`` the unit normal is ``N = f_x x f_phi / |f_x x f_phi|``,
which equals ``(r', -a' cos phi, -a' sin phi) / |u'|``.  The second
fundamental form is ``A_ij = <f_ij, N>``, so the principal curvatures are

    kappa_prof = (a'' r' - a' r'') / |u'|^3,   kappa_ring = a' / (r |u'|),

and ``H = (kappa_prof + kappa_ring) / 2``.  Under this convention a sphere
traversed with increasing polar angle (``a = cos theta``) has an outward
normal and ``H = -1/R``; traversed the other way it has ``H = +1/R``.  Every
energy below depends on ``H**2`` only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hcurve import (
    ProfileCurve,
    _speed_or_raise,
    derivatives,
    elastic_energy,
    elastic_gradient,
    trapezoid_weights,
)
from .io import fmt, write_table


@dataclass(frozen=True)
class RevolutionSurface:
    profile: ProfileCurve
    m: int
    H: np.ndarray              # mean curvature per ring
    A0sq: np.ndarray           # |A^0|^2 per ring
    kappa_prof: np.ndarray
    kappa_ring: np.ndarray
    normal: np.ndarray         # (N+1, 2): normal at azimuth 0 as (axial, radial) components
    w: np.ndarray              # ring area weights 2 pi r |u'| dx (trapezoid)

    def __post_init__(self):
        if self.m < 16:
            raise ValueError("azimuthal sample count m must be >= 16")
        if np.any(self.w < 0) or self.w.sum() <= 0:
            raise ValueError("ring weights must be nonnegative with positive total")

    @property
    def radius(self) -> np.ndarray:
        return self.profile.r

    @property
    def area(self) -> float:
        return float(self.w.sum())

    def mean_curvature_vector(self) -> np.ndarray:
        """``H N`` at azimuth 0, as (axial, radial) components."""
        return self.H[:, None] * self.normal

    def vertices(self) -> np.ndarray:
        """Mesh vertices, ring-major, shape ((N+1) * m, 3)."""
        phi = 2 * np.pi * np.arange(self.m) / self.m
        a, r = self.profile.a, self.profile.r
        X = np.repeat(a, self.m)
        Y = np.outer(r, np.cos(phi)).ravel()
        Z = np.outer(r, np.sin(phi)).ravel()
        return np.column_stack([X, Y, Z])


def revolve(curve: ProfileCurve, m: int = 64) -> RevolutionSurface:
    du, ddu = derivatives(curve)
    speed = _speed_or_raise(du)
    r = curve.r
    ap, rp = du[:, 0], du[:, 1]
    app, rpp = ddu[:, 0], ddu[:, 1]
    kappa_prof = (app * rp - ap * rpp) / speed**3
    kappa_ring = ap / (r * speed)
    H = 0.5 * (kappa_prof + kappa_ring)
    A0sq = 0.5 * (kappa_prof - kappa_ring) ** 2
    normal = np.column_stack([rp, -ap]) / speed[:, None]
    w = 2 * np.pi * r * speed * trapezoid_weights(curve.N)
    return RevolutionSurface(curve, int(m), H, A0sq, kappa_prof, kappa_ring, normal, w)


def willmore_energy(surface: RevolutionSurface) -> float:
    return float(np.sum(surface.H**2 * surface.w))


def boundary_term(curve: ProfileCurve) -> float:
    """``[r' / |u'|]`` between the two ends, from the one-sided end stencils."""
    t0, t1 = curve.end_tangents()
    return float(t1[1] / np.hypot(*t1) - t0[1] / np.hypot(*t0))


def bryant_griffiths(curve: ProfileCurve) -> float:
    """Willmore energy predicted from the elastic energy and the end tangents."""
    return 0.5 * np.pi * (elastic_energy(curve) - 4.0 * boundary_term(curve))


def willmore_residual(curve: ProfileCurve) -> float:
    """Stationarity residual ``max |grad E|_g`` away from the clamped ends."""
    return elastic_gradient(curve).max_interior_norm()


def write_surface_csv(path: str, surface: RevolutionSurface) -> None:
    c = surface.profile
    write_table(path, ["x", "a", "r", "H", "A0sq", "w"],
                zip(c.x, c.a, c.r, surface.H, surface.A0sq, surface.w))


def write_obj(path: str, surface: RevolutionSurface) -> None:
    """Quad mesh of the surface as OBJ text (positions and faces only)."""
    V = surface.vertices()
    m = surface.m
    rings = surface.profile.N + 1
    with open(path, "w") as fh:
        for v in V:
            fh.write(f"v {fmt(v[0])} {fmt(v[1])} {fmt(v[2])}\n")
        for i in range(rings - 1):
            for j in range(m):
                a = i * m + j + 1
                b = i * m + (j + 1) % m + 1
                fh.write(f"f {a} {b} {b + m} {a + m}\n")
