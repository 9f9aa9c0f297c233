"""Discrete immersed curves in the hyperbolic half-plane.

A profile curve is sampled on the uniform grid ``x_i = i/N`` of ``[0, 1]``.
Derivatives use second-order central differences in the interior and
second-order one-sided stencils at the two endpoints, so the clamped
boundary tangent is read off the same stencil that the energy uses.  Inside
the energy quadrature the endpoint second derivative is replaced by its
neighbour's (see :func:`energy_operators`).

The elastic energy is the trapezoidal sum of the closed-form density

    F = (r'' a' r - a'' r' r + a' |u'|^2)^2 / (r |u'|^5)

with ``u = (a, r)``.  Its exact derivatives with respect to the node
coordinates are assembled here as well, which gives the discrete gradient
used by the flow and by the minimizer.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline

from .errors import BoundaryMismatch, DegenerateImmersion

DEGENERACY_FLOOR = 1e-12
BOUNDARY_TOL = 1e-8


@dataclass(frozen=True)
class HPoint:
    a: float
    r: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.r)) or self.r <= 0:
            raise ValueError(f"HPoint needs finite a and r > 0, got ({self.a}, {self.r})")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.r])


@dataclass(frozen=True)
class UnitDir:
    t1: float
    t2: float

    def __post_init__(self):
        if abs(math.hypot(self.t1, self.t2) - 1.0) > 1e-12:
            raise ValueError(f"UnitDir ({self.t1}, {self.t2}) is not unit length")

    @classmethod
    def from_vector(cls, v) -> "UnitDir":
        v = np.asarray(v, dtype=float)
        n = float(np.hypot(v[0], v[1]))
        if n == 0.0:
            raise ValueError("cannot normalize a zero vector")
        return cls(float(v[0] / n), float(v[1] / n))

    @classmethod
    def from_angle(cls, angle: float) -> "UnitDir":
        return cls(math.cos(angle), math.sin(angle))

    def as_array(self) -> np.ndarray:
        return np.array([self.t1, self.t2])

    @property
    def normal(self) -> np.ndarray:
        """Left normal (-t2, t1)."""
        return np.array([-self.t2, self.t1])


@dataclass(frozen=True)
class ClampedBoundary:
    """Endpoint positions and unit tangents ``u(y) = p_y``, ``u'(y)/|u'(y)| = tau_y``."""

    p0: HPoint
    p1: HPoint
    tau0: UnitDir
    tau1: UnitDir

    @classmethod
    def from_curve(cls, curve: "ProfileCurve") -> "ClampedBoundary":
        t0, t1 = curve.end_tangents()
        n = curve.nodes
        return cls(
            HPoint(float(n[0, 0]), float(n[0, 1])),
            HPoint(float(n[-1, 0]), float(n[-1, 1])),
            UnitDir.from_vector(t0),
            UnitDir.from_vector(t1),
        )

    @classmethod
    def from_values(cls, p0, p1, tau0, tau1) -> "ClampedBoundary":
        return cls(HPoint(*map(float, p0)), HPoint(*map(float, p1)),
                   UnitDir.from_vector(tau0), UnitDir.from_vector(tau1))

    def points(self) -> tuple[HPoint, HPoint]:
        return self.p0, self.p1

    def tangents(self) -> tuple[UnitDir, UnitDir]:
        return self.tau0, self.tau1

    def is_degenerate(self) -> bool:
        return self.p0 == self.p1 and self.tau0 == self.tau1

    def to_dict(self) -> dict:
        return {
            "p0": [self.p0.a, self.p0.r],
            "p1": [self.p1.a, self.p1.r],
            "tau0": [self.tau0.t1, self.tau0.t2],
            "tau1": [self.tau1.t1, self.tau1.t2],
        }

    def mismatch(self, curve: "ProfileCurve") -> float:
        """Largest deviation of ``curve`` from this boundary data."""
        t0, t1 = curve.end_tangents()
        n = curve.nodes
        return float(max(
            np.max(np.abs(n[0] - self.p0.as_array())),
            np.max(np.abs(n[-1] - self.p1.as_array())),
            np.max(np.abs(t0 / np.hypot(*t0) - self.tau0.as_array())),
            np.max(np.abs(t1 / np.hypot(*t1) - self.tau1.as_array())),
        ))

    def check(self, curve: "ProfileCurve", tol: float = BOUNDARY_TOL) -> None:
        err = self.mismatch(curve)
        if err > tol:
            raise BoundaryMismatch(f"curve violates boundary data by {err:.3e} (tol {tol:.1e})")


class ProfileCurve:
    """Nodes ``u(x_i) = (a_i, r_i)`` on the uniform grid ``x_i = i/N``.

    The node array is copied and frozen on construction.
    """

    __slots__ = ("_nodes",)

    def __init__(self, nodes):
        arr = np.array(nodes, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("nodes must have shape (N+1, 2)")
        if arr.shape[0] < 9:
            raise ValueError(f"need N >= 8, got N = {arr.shape[0] - 1}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("nodes must be finite")
        if np.any(arr[:, 1] <= 0):
            raise ValueError("every node height must be positive")
        chords = np.hypot(*np.diff(arr, axis=0).T)
        if chords.max() == 0 or chords.min() < DEGENERACY_FLOOR * chords.max():
            raise DegenerateImmersion("consecutive nodes coincide")
        arr.setflags(write=False)
        self._nodes = arr

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], tuple], N: int) -> "ProfileCurve":
        x = np.linspace(0.0, 1.0, N + 1)
        a, r = f(x)
        return cls(np.column_stack([np.broadcast_to(a, x.shape), np.broadcast_to(r, x.shape)]))

    @property
    def nodes(self) -> np.ndarray:
        return self._nodes

    @property
    def N(self) -> int:
        return self._nodes.shape[0] - 1

    @property
    def a(self) -> np.ndarray:
        return self._nodes[:, 0]

    @property
    def r(self) -> np.ndarray:
        return self._nodes[:, 1]

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.N + 1)

    def with_nodes(self, nodes) -> "ProfileCurve":
        return ProfileCurve(nodes)

    def scaled(self, lam: float) -> "ProfileCurve":
        return ProfileCurve(lam * self._nodes)

    def translated(self, c: float) -> "ProfileCurve":
        return ProfileCurve(self._nodes + np.array([c, 0.0]))

    def reversed(self) -> "ProfileCurve":
        return ProfileCurve(self._nodes[::-1])

    def end_tangents(self) -> tuple[np.ndarray, np.ndarray]:
        """One-sided second-order derivatives at x = 0 and x = 1."""
        n, N = self._nodes, self.N
        t0 = (-3 * n[0] + 4 * n[1] - n[2]) * (N / 2.0)
        t1 = (3 * n[-1] - 4 * n[-2] + n[-3]) * (N / 2.0)
        return t0, t1

    def __repr__(self):
        return f"ProfileCurve(N={self.N}, a=[{self.a[0]:.4g}..{self.a[-1]:.4g}])"


# --------------------------------------------------------------------------
# difference operators
# --------------------------------------------------------------------------

@functools.lru_cache(maxsize=32)
def diff_operators(N: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Sparse first and second derivative matrices on ``x_i = i/N``."""
    h = 1.0 / N
    n = N + 1
    d1 = sp.lil_matrix((n, n))
    d2 = sp.lil_matrix((n, n))
    for i in range(1, N):
        d1[i, i - 1], d1[i, i + 1] = -0.5 / h, 0.5 / h
        d2[i, i - 1], d2[i, i], d2[i, i + 1] = 1 / h**2, -2 / h**2, 1 / h**2
    d1[0, 0:3] = np.array([-3.0, 4.0, -1.0]) / (2 * h)
    d1[N, N - 2:N + 1] = np.array([1.0, -4.0, 3.0]) / (2 * h)
    d2[0, 0:4] = np.array([2.0, -5.0, 4.0, -1.0]) / h**2
    d2[N, N - 3:N + 1] = np.array([-1.0, 4.0, -5.0, 2.0]) / h**2
    return d1.tocsr(), d2.tocsr()


@functools.lru_cache(maxsize=32)
def energy_operators(N: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Derivative matrices used inside the energy quadrature.

    Same as :func:`diff_operators` except that the endpoint second derivative
    repeats the neighbouring central one.  With trapezoid weights this closure
    sums by parts against the one-sided tangent stencil, so clamped variations
    see no spurious O(1/h) boundary forcing; the quadrature stays O(h^2).
    """
    d1, d2 = diff_operators(N)
    d2 = d2.tolil()
    d2[0, :] = d2[1, :]
    d2[N, :] = d2[N - 1, :]
    return d1, d2.tocsr()


@functools.lru_cache(maxsize=32)
def _fourth_order_d1(N: int) -> sp.csr_matrix:
    h = 1.0 / N
    n = N + 1
    d = sp.lil_matrix((n, n))
    for i in range(2, N - 1):
        d[i, i - 2:i + 3] = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12 * h)
    d[0, 0:5] = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12 * h)
    d[1, 0:5] = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / (12 * h)
    d[N, N - 4:N + 1] = np.array([3.0, -16.0, 36.0, -48.0, 25.0]) / (12 * h)
    d[N - 1, N - 4:N + 1] = np.array([-1.0, 6.0, -18.0, 10.0, 3.0]) / (12 * h)
    return d.tocsr()


def trapezoid_weights(N: int) -> np.ndarray:
    w = np.full(N + 1, 1.0 / N)
    w[0] = w[-1] = 0.5 / N
    return w


def derivatives(curve: ProfileCurve) -> tuple[np.ndarray, np.ndarray]:
    d1, d2 = diff_operators(curve.N)
    return d1 @ curve.nodes, d2 @ curve.nodes


def _speed_or_raise(du: np.ndarray) -> np.ndarray:
    speed = np.hypot(du[:, 0], du[:, 1])
    if speed.min() <= DEGENERACY_FLOOR * max(speed.max(), 1.0) or not np.all(np.isfinite(speed)):
        raise DegenerateImmersion(f"discrete speed underflows (min {speed.min():.3e})")
    return speed


# --------------------------------------------------------------------------
# geometry
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CurveGeometry:
    tangent: np.ndarray          # d_x u, shape (N+1, 2)
    unit_tangent: np.ndarray
    speed: np.ndarray            # |d_x u|
    hyperbolic_speed: np.ndarray  # |d_x u|_g = |d_x u| / r
    kappa: np.ndarray            # curvature vector, Euclidean components
    kappa_sq_g: np.ndarray       # |kappa|_g^2
    geodesic_curvature: np.ndarray  # signed, w.r.t. the left hyperbolic normal


def geometry(curve: ProfileCurve) -> CurveGeometry:
    du, ddu = derivatives(curve)
    r = curve.r
    speed = _speed_or_raise(du)
    t = du / speed[:, None]
    lam = (r / speed) ** 2
    scaled = lam[:, None] * ddu
    # d_s^2 u, chain rule in the hyperbolic arc length
    ds2 = scaled - np.sum(scaled * t, axis=1)[:, None] * t + (r * du[:, 1] / speed)[:, None] * t
    su = (r / speed)[:, None] * du
    christoffel = np.column_stack([-2 * su[:, 0] * su[:, 1], su[:, 0] ** 2 - su[:, 1] ** 2]) / r[:, None]
    kappa = ds2 + christoffel
    kappa_sq_g = np.sum(kappa**2, axis=1) / r**2
    cross = du[:, 0] * ddu[:, 1] - du[:, 1] * ddu[:, 0]
    kg = (r * cross + du[:, 0] * speed**2) / speed**3
    return CurveGeometry(du, t, speed, speed / r, kappa, kappa_sq_g, kg)


def metric_norm(v: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Half-plane norm ``|v|_g = |v| / r`` per node."""
    v = np.asarray(v, dtype=float)
    return np.hypot(v[..., 0], v[..., 1]) / r


def lengths(curve: ProfileCurve) -> tuple[float, float]:
    """Euclidean and hyperbolic length by trapezoidal quadrature.

    The speed is taken from fourth-order differences so that the quadrature
    error is dominated by the trapezoid rule alone.
    """
    du = _fourth_order_d1(curve.N) @ curve.nodes
    speed = np.hypot(du[:, 0], du[:, 1])
    w = trapezoid_weights(curve.N)
    return float(w @ speed), float(w @ (speed / curve.r))


# --------------------------------------------------------------------------
# elastic energy density and its derivatives
# --------------------------------------------------------------------------

def _density(p, q, P, R, r, order: int = 0):
    """Energy density in terms of (a', r', a'', r'', r).

    ``order=0`` returns F, ``order=1`` also the five first partials,
    ``order=2`` also the symmetric matrix of second partials as a dict
    keyed by variable-index pairs ``(i, j)`` with ``i <= j``.
    """
    S = p * p + q * q
    Q = r * (p * R - q * P) + p * S
    g = 1.0 / (r * S**2.5)
    F = Q * Q * g
    if order == 0:
        return F
    dQ = (r * R + S + 2 * p * p, -r * P + 2 * p * q, -r * q, r * p, p * R - q * P)
    zero = np.zeros_like(p)
    dg = (-5 * p * g / S, -5 * q * g / S, zero, zero, -g / r)
    dF = tuple(2 * Q * g * dQ[i] + Q * Q * dg[i] for i in range(5))
    if order == 1:
        return F, dF
    d2Q = {
        (0, 0): 6 * p, (0, 1): 2 * q, (0, 2): zero, (0, 3): r, (0, 4): R,
        (1, 1): 2 * p, (1, 2): -r, (1, 3): zero, (1, 4): -P,
        (2, 2): zero, (2, 3): zero, (2, 4): -q,
        (3, 3): zero, (3, 4): p,
        (4, 4): zero,
    }
    d2g = {key: zero for key in d2Q}
    d2g[(0, 0)] = g * (-5 / S + 35 * p * p / S**2)
    d2g[(0, 1)] = 35 * p * q * g / S**2
    d2g[(1, 1)] = g * (-5 / S + 35 * q * q / S**2)
    d2g[(0, 4)] = 5 * p * g / (r * S)
    d2g[(1, 4)] = 5 * q * g / (r * S)
    d2g[(4, 4)] = 2 * g / r**2
    d2F = {}
    for (i, j) in d2Q:
        d2F[(i, j)] = (
            2 * g * dQ[i] * dQ[j]
            + 2 * Q * g * d2Q[(i, j)]
            + 2 * Q * (dQ[i] * dg[j] + dg[i] * dQ[j])
            + Q * Q * d2g[(i, j)]
        )
    return F, dF, d2F


def _density_args(curve: ProfileCurve):
    d1, d2 = energy_operators(curve.N)
    du, ddu = d1 @ curve.nodes, d2 @ curve.nodes
    _speed_or_raise(du)
    return du[:, 0], du[:, 1], ddu[:, 0], ddu[:, 1], curve.r


def energy_density(curve: ProfileCurve) -> np.ndarray:
    """Pointwise integrand of the elastic energy in ``dx``."""
    return _density(*_density_args(curve))


def elastic_energy(curve: ProfileCurve) -> float:
    return float(trapezoid_weights(curve.N) @ energy_density(curve))


@functools.lru_cache(maxsize=32)
def _jacobian(N: int) -> sp.csr_matrix:
    """Map interleaved dofs [a0, r0, a1, r1, ...] to stacked (a', r', a'', r'', r)."""
    d1, d2 = energy_operators(N)
    n = N + 1
    ea = sp.csr_matrix((np.ones(n), (np.arange(n), 2 * np.arange(n))), shape=(n, 2 * n))
    er = sp.csr_matrix((np.ones(n), (np.arange(n), 2 * np.arange(n) + 1)), shape=(n, 2 * n))
    return sp.vstack([d1 @ ea, d1 @ er, d2 @ ea, d2 @ er, er]).tocsr()


def energy_gradient(curve: ProfileCurve) -> np.ndarray:
    """Exact derivative of the discrete energy w.r.t. the nodes, shape (N+1, 2)."""
    _, dF = _density(*_density_args(curve), order=1)
    w = trapezoid_weights(curve.N)
    stacked = np.concatenate([w * d for d in dF])
    return (_jacobian(curve.N).T @ stacked).reshape(-1, 2)


def energy_hessian(curve: ProfileCurve) -> sp.csr_matrix:
    """Exact Hessian of the discrete energy in interleaved dof order."""
    _, _, d2F = _density(*_density_args(curve), order=2)
    w = trapezoid_weights(curve.N)
    blocks = [[None] * 5 for _ in range(5)]
    for (i, j), val in d2F.items():
        block = sp.diags(w * val)
        blocks[i][j] = block
        if i != j:
            blocks[j][i] = block
    K = sp.bmat(blocks, format="csr")
    J = _jacobian(curve.N)
    return (J.T @ K @ J).tocsr()


# --------------------------------------------------------------------------
# gradient in the hyperbolic metric, restricted to clamped variations
# --------------------------------------------------------------------------

def hyperbolic_mass(curve: ProfileCurve) -> np.ndarray:
    """Per-node weights so that sum_i m_i <v_i, phi_i> = int <v, phi>_g ds."""
    du, _ = derivatives(curve)
    speed = _speed_or_raise(du)
    return trapezoid_weights(curve.N) * speed / curve.r**3


# nodes next to each endpoint that absorb the tangent-direction constraint
CLAMP_LAYER = 2


def clamp_constraints(curve: ProfileCurve) -> list[tuple[np.ndarray, np.ndarray]]:
    """Homogeneous linear constraints keeping both endpoint tangent directions.

    Each entry is (node indices, coefficient vectors) such that
    ``sum_k <c_k, delta_u[idx_k]> = 0`` for admissible variations.
    """
    N = curve.N
    t0, t1 = curve.end_tangents()
    n0 = np.array([-t0[1], t0[0]]) / np.hypot(*t0)
    n1 = np.array([-t1[1], t1[0]]) / np.hypot(*t1)
    return [
        (np.array([1, 2]), np.array([4 * n0, -n0])),
        (np.array([N - 1, N - 2]), np.array([4 * n1, -n1])),
    ]


def clamped_riesz(G: np.ndarray, weights: np.ndarray, curve: ProfileCurve) -> np.ndarray:
    """Riesz representative of the covector ``G`` on clamped variations.

    ``weights`` is a per-node diagonal metric.  Endpoints are fixed, and the
    result is orthogonal (in that metric) to the tangent-direction constraints.
    """
    v = G / weights[:, None]
    v[0] = 0.0
    v[-1] = 0.0
    for idx, c in clamp_constraints(curve):
        num = np.sum(c * v[idx])
        den = np.sum(np.sum(c * c, axis=1) / weights[idx])
        v[idx] -= (num / den) * c / weights[idx][:, None]
    return v


@dataclass(frozen=True)
class ElasticGradient:
    field: np.ndarray       # (N+1, 2), Euclidean components
    norm_g: np.ndarray      # |field|_g per node

    def max_interior_norm(self) -> float:
        """Max g-norm over nodes not touched by the tangent clamp."""
        return float(self.norm_g[CLAMP_LAYER + 1:-CLAMP_LAYER - 1].max())


def elastic_gradient(curve: ProfileCurve) -> ElasticGradient:
    """L2(ds, g) gradient of the discrete elastic energy.

    Interior values satisfy ``sum_i m_i <grad_i, phi_i>_g = dE[phi]`` for all
    clamped variations ``phi``.  Endpoint entries hold the unconstrained
    representative and carry no meaning for clamped problems.
    """
    G = energy_gradient(curve)
    m = hyperbolic_mass(curve)
    field = clamped_riesz(G, m, curve)
    field[0] = G[0] / m[0]
    field[-1] = G[-1] / m[-1]
    return ElasticGradient(field, metric_norm(field, curve.r))


def pairing(curve: ProfileCurve, v: np.ndarray, phi: np.ndarray) -> float:
    """Trapezoidal ``int <v, phi>_g ds``."""
    return float(hyperbolic_mass(curve) @ np.sum(v * phi, axis=1))


# --------------------------------------------------------------------------
# boundary re-imposition and resampling
# --------------------------------------------------------------------------

def reimpose_boundary(nodes: np.ndarray, boundary: ClampedBoundary) -> np.ndarray:
    """Clamp endpoints exactly and fix the end tangents by a minimal-norm shift.

    Only the two nodes next to each endpoint move.  The one-sided stencil
    direction is linear in those nodes, so a single projection suffices.
    """
    out = np.array(nodes, dtype=float)
    N = out.shape[0] - 1
    out[0] = boundary.p0.as_array()
    out[N] = boundary.p1.as_array()
    for end, tau, (i1, i2) in ((0, boundary.tau0, (1, 2)), (N, boundary.tau1, (N - 1, N - 2))):
        n = tau.normal
        sign = 1.0 if end == 0 else -1.0
        v = sign * (-3 * out[end] + 4 * out[i1] - out[i2])
        viol = float(n @ v)
        out[i1] -= sign * 4.0 * viol * n / 17.0
        out[i2] += sign * viol * n / 17.0
        if float(tau.as_array() @ (sign * (-3 * out[end] + 4 * out[i1] - out[i2]))) <= 0:
            raise BoundaryMismatch("end tangent points against the prescribed direction")
    return out


def _chords(pts: np.ndarray) -> np.ndarray:
    return np.hypot(*np.diff(pts, axis=0).T)


def resample(curve: ProfileCurve, N_new: int, tol: float = 1e-13, max_iter: int = 50) -> ProfileCurve:
    """Reparametrize to constant Euclidean speed (equal chords).

    A cubic spline through the nodes, parametrized by cumulative chord
    length, is sampled at parameters adjusted until consecutive chords agree.
    Endpoints are copied exactly.
    """
    if N_new < 8:
        raise ValueError("N_new must be >= 8")
    nodes = curve.nodes
    knots = np.concatenate([[0.0], np.cumsum(_chords(nodes))])
    spline = CubicSpline(knots, nodes, axis=0)
    L = knots[-1]
    target = np.linspace(0.0, 1.0, N_new + 1)
    sigma = target * L
    if N_new == curve.N:
        sigma = np.where(np.abs(sigma - knots) <= 1e-12 * L, knots, sigma)
    for _ in range(max_iter):
        pts = spline(sigma)
        cum = np.concatenate([[0.0], np.cumsum(_chords(pts))])
        cum /= cum[-1]
        if np.max(np.abs(cum - target)) < tol:
            break
        sigma = np.interp(target, cum, sigma)
    pts = spline(sigma)
    pts[0] = nodes[0]
    pts[-1] = nodes[-1]
    if np.any(pts[:, 1] <= 0):
        raise DegenerateImmersion("resampled curve leaves the half-plane")
    return ProfileCurve(pts)
