"""Willmore flow of clamped profile curves.

The profile moves by ``u_t = -grad E(u) / (4 r^4)``, where ``grad E`` is the
gradient in ``L2(ds, g)`` restricted to clamped variations.  Discretely
the velocity is the Riesz representative of ``-dE`` in the node metric
``4 r^4 m`` (``m`` the hyperbolic mass), which keeps both end tangent
directions to first order and gives the dissipation identity

    dW/dt = -(pi/2) sum_i 4 r_i^4 m_i |V_i|^2 = -int |f_t|^2 dmu.

Two time steppers are provided.  ``step`` is explicit RK4 with step
rejection; its stable step size is about ``chord^4``.  ``implicit_step`` is a
minimizing-movement step: it minimizes

    E(u) + 1/(2 dt) sum_i M_i |u_i - u_i^n|^2,   M = 4 r^4 m frozen at u^n,

by Newton's method on the linearly constrained problem, which keeps
energy descent for any step size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import BoundaryMismatch, DegenerateImmersion, StepFailure
from .hcurve import (
    CLAMP_LAYER,
    ClampedBoundary,
    ProfileCurve,
    derivatives,
    elastic_energy,
    energy_gradient,
    energy_hessian,
    hyperbolic_mass,
    lengths,
    reimpose_boundary,
    resample,
    clamp_constraints,
)
from .revolution import boundary_term
from .thresholds import c_ly_rot

OUTCOMES = ("Converged", "MaxSteps", "SingularitySuspected")
MAX_HALVINGS = 40
DESCENT_SLACK = 1e-12


@dataclass(frozen=True)
class FlowConfig:
    N: int = 128
    dt_init: float = 1e-3
    dt_safety: float = 0.5
    max_steps: int = 10_000
    tol_grad: float = 1e-3
    eps_axis: Optional[float] = None      # default 1e-3 * smaller boundary height
    L_hyp_max: float = 50.0
    resample_every: int = 50
    scheme: str = "rk4"                    # or "implicit"
    stiffness: float = 0.5                 # RK4 cap: dt <= stiffness * min_chord^4
    dt_max: float = 1.0                    # implicit: largest step
    dt_growth: float = 2.0                 # implicit: growth after an easy step
    check_li_yau: bool = True

    def __post_init__(self):
        for name in ("N", "dt_init", "dt_safety", "max_steps", "tol_grad", "L_hyp_max",
                     "resample_every", "stiffness", "dt_max", "dt_growth"):
            if not getattr(self, name) > 0:
                raise ValueError(f"FlowConfig.{name} must be positive")
        if self.eps_axis is not None and not self.eps_axis > 0:
            raise ValueError("FlowConfig.eps_axis must be positive")
        if not self.dt_safety < 1:
            raise ValueError("FlowConfig.dt_safety must be < 1")
        if self.N < 8:
            raise ValueError("FlowConfig.N must be >= 8")
        if self.scheme not in ("rk4", "implicit"):
            raise ValueError("FlowConfig.scheme must be 'rk4' or 'implicit'")

    def axis_alarm(self, boundary: ClampedBoundary) -> float:
        if self.eps_axis is not None:
            return self.eps_axis
        return 1e-3 * min(boundary.p0.r, boundary.p1.r)


@dataclass(frozen=True)
class FlowState:
    t: float
    curve: ProfileCurve
    step_count: int
    boundary: ClampedBoundary
    dt: float

    @classmethod
    def start(cls, curve: ProfileCurve, boundary: ClampedBoundary, dt: float) -> "FlowState":
        boundary.check(curve)
        return cls(0.0, curve, 0, boundary, dt)


def willmore(curve: ProfileCurve, boundary: ClampedBoundary | None = None) -> float:
    """W through the elastic energy and the end tangents."""
    return 0.5 * math.pi * (elastic_energy(curve) - 4.0 * boundary_term(curve))


# --------------------------------------------------------------------------
# gate

@dataclass(frozen=True)
class GateReport:
    W0: float
    threshold: float
    satisfied: bool
    margin: float

    def to_dict(self) -> dict:
        return {"W0": self.W0, "threshold": self.threshold, "satisfied": self.satisfied,
                "margin": self.margin}


def gate(initial: ProfileCurve, boundary: ClampedBoundary, W0: float | None = None) -> GateReport:
    """Compare the initial energy with C_LY^rot (non-strict)."""
    boundary.check(initial)
    from .revolution import bryant_griffiths

    W = bryant_griffiths(initial) if W0 is None else float(W0)
    threshold, _ = c_ly_rot(boundary)
    return GateReport(W, threshold, bool(W <= threshold), threshold - W)


# --------------------------------------------------------------------------
# velocity and explicit stepping

def mobility_weights(curve: ProfileCurve) -> np.ndarray:
    """Node metric ``4 r^4 m`` in which the velocity is a Riesz representative."""
    return 4.0 * curve.r**4 * hyperbolic_mass(curve)


def _node_normals(curve: ProfileCurve) -> np.ndarray:
    du, _ = derivatives(curve)
    speed = np.hypot(du[:, 0], du[:, 1])
    return np.column_stack([-du[:, 1], du[:, 0]]) / speed[:, None]


def normal_riesz(G: np.ndarray, weights: np.ndarray, curve: ProfileCurve) -> np.ndarray:
    """Riesz representative of ``G`` among normal, clamped variations.

    Returns per-node normal components ``s`` (the field is ``s n``), with
    zero endpoints and both tangent-direction constraints satisfied.
    """
    nrm = _node_normals(curve)
    sv = np.sum(G * nrm, axis=1) / weights
    sv[0] = 0.0
    sv[-1] = 0.0
    for idx, c in clamp_constraints(curve):
        cn = np.sum(c * nrm[idx], axis=1)
        num = float(cn @ sv[idx])
        den = float(np.sum(cn * cn / weights[idx]))
        sv[idx] -= (num / den) * cn / weights[idx]
    return sv


def velocity(curve: ProfileCurve) -> np.ndarray:
    """``-grad E / (4 r^4)`` on clamped variations; zero at the endpoints.

    Only the normal part moves the surface; the discrete gradient also has a
    tangential part, which reparametrizes the curve and is dropped.
    """
    return -normal_riesz(energy_gradient(curve), mobility_weights(curve), curve)[:, None] * _node_normals(curve)


def dissipation(curve: ProfileCurve, V: np.ndarray | None = None) -> float:
    """``-dW/dt`` along the velocity field: (pi/2) sum 4 r^4 m |V|^2."""
    if V is None:
        V = velocity(curve)
    return 0.5 * math.pi * float(mobility_weights(curve) @ np.sum(V * V, axis=1))


def min_chord(curve: ProfileCurve) -> float:
    return float(np.min(np.hypot(*np.diff(curve.nodes, axis=0).T)))


def stiffness_cap(curve: ProfileCurve, config: FlowConfig) -> float:
    return config.stiffness * min_chord(curve) ** 4


def _valid(nodes: np.ndarray) -> bool:
    if not np.all(np.isfinite(nodes)) or np.any(nodes[:, 1] <= 0):
        return False
    ch = np.hypot(*np.diff(nodes, axis=0).T)
    return bool(ch.min() >= 1e-12 * ch.max())


def _rk4_nodes(curve: ProfileCurve, dt: float) -> np.ndarray | None:
    u0 = curve.nodes
    try:
        k1 = velocity(curve)
        k2 = velocity(curve.with_nodes(u0 + 0.5 * dt * k1))
        k3 = velocity(curve.with_nodes(u0 + 0.5 * dt * k2))
        k4 = velocity(curve.with_nodes(u0 + dt * k3))
    except (DegenerateImmersion, ValueError):
        return None
    return u0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _accept(state: FlowState, nodes: np.ndarray | None, W_old: float):
    """Clamp, validate and check descent; returns (curve, W) or None."""
    if nodes is None or not _valid(nodes):
        return None
    try:
        nodes = reimpose_boundary(nodes, state.boundary)
        if not _valid(nodes):
            return None
        curve = ProfileCurve(nodes)
        if state.boundary.mismatch(curve) > 1e-8:
            return None
        W_new = willmore(curve)
    except (DegenerateImmersion, BoundaryMismatch, ValueError):
        return None
    if not math.isfinite(W_new) or W_new > W_old + DESCENT_SLACK:
        return None
    return curve, W_new


def step(state: FlowState, config: FlowConfig, W_old: float | None = None) -> tuple[FlowState, float]:
    """One accepted explicit RK4 step; returns (new state, its W).

    The trial step is ``min(state.dt, stiffness cap)``; rejected trials are
    shrunk by ``dt_safety`` at most 40 times.
    """
    if W_old is None:
        W_old = willmore(state.curve)
    dt = min(state.dt, stiffness_cap(state.curve, config))
    for _ in range(MAX_HALVINGS + 1):
        got = _accept(state, _rk4_nodes(state.curve, dt), W_old)
        if got is not None:
            curve, W_new = got
            # let the next trial grow back toward the requested size
            nxt = min(config.dt_init, dt / config.dt_safety)
            return FlowState(state.t + dt, curve, state.step_count + 1, state.boundary, nxt), W_new
        dt *= config.dt_safety
    raise StepFailure(f"step rejected {MAX_HALVINGS} times at t={state.t:.6g}")


# --------------------------------------------------------------------------
# implicit (minimizing movement) stepping

def _constraint_rows(boundary: ClampedBoundary, N: int) -> sp.csr_matrix:
    """Rows of n_y . (one-sided end tangent) = 0 in interior dof order."""
    ndof = 2 * (N - 1)
    rows, cols, vals = [], [], []
    # interior node i (1..N-1) has dofs 2(i-1), 2(i-1)+1
    for k, (tau, i1, i2, sign) in enumerate(((boundary.tau0, 1, 2, 1.0),
                                             (boundary.tau1, N - 1, N - 2, -1.0))):
        n = tau.normal
        for node, coef in ((i1, 4.0 * sign), (i2, -1.0 * sign)):
            for j in range(2):
                rows.append(k)
                cols.append(2 * (node - 1) + j)
                vals.append(coef * n[j])
    return sp.csr_matrix((vals, (rows, cols)), shape=(2, ndof))


def _kkt_solve(Hm: sp.spmatrix, A: sp.csr_matrix, g: np.ndarray) -> np.ndarray | None:
    K = sp.bmat([[Hm, A.T], [A, None]], format="csc")
    rhs = np.concatenate([-g, np.zeros(A.shape[0])])
    try:
        sol = spla.spsolve(K, rhs)
    except (RuntimeError, ValueError):
        return None
    if not np.all(np.isfinite(sol)):
        return None
    return sol[: Hm.shape[0]]


def implicit_nodes(curve: ProfileCurve, boundary: ClampedBoundary, dt: float,
                   max_newton: int = 30, tol: float = 1e-12) -> np.ndarray | None:
    """Minimizing-movement update from ``curve`` with step ``dt``.

    Interior nodes move along their normals at the old position,
    ``u_i = u_i^n + s_i n_i``: tangential motion is a reparametrization, and
    leaving it free lets the discrete energy drop by sliding nodes together.
    """
    N = curve.N
    u0 = curve.nodes
    n_in = N - 1
    Mnode = mobility_weights(curve)[1:-1]
    nrm = _node_normals(curve)[1:-1]
    Z = sp.csr_matrix((nrm.ravel(), (np.arange(2 * n_in), np.repeat(np.arange(n_in), 2))),
                      shape=(2 * n_in, n_in))
    A = (_constraint_rows(boundary, N) @ Z).tocsr()
    inner = slice(2, 2 * N)

    def nodes_of(svec):
        out = u0.copy()
        out[1:-1] += (Z @ svec).reshape(-1, 2)
        return out

    def objective(svec):
        return elastic_energy(ProfileCurve(nodes_of(svec))) + 0.5 / dt * float(Mnode @ (svec * svec))

    svec = np.zeros(Z.shape[1])
    phi = objective(svec)
    for _ in range(max_newton):
        c = ProfileCurve(nodes_of(svec))
        g = Z.T @ energy_gradient(c).ravel()[inner] + Mnode * svec / dt
        H = (Z.T @ energy_hessian(c)[inner, inner] @ Z).tocsr()
        shift = 0.0
        moved = False
        for _ in range(12):
            Hm = (H + sp.diags((1.0 + shift) * Mnode / dt)).tocsc()
            p = _kkt_solve(Hm, A, g)
            if p is not None and g @ p < 0:
                # Armijo backtracking on the objective
                step_len = 1.0
                for _ in range(30):
                    trial = svec + step_len * p
                    nodes = nodes_of(trial)
                    if _valid(nodes):
                        try:
                            val = objective(trial)
                        except (DegenerateImmersion, ValueError):
                            val = math.inf
                        if val <= phi + 1e-4 * step_len * (g @ p):
                            svec, phi, moved = trial, val, True
                            break
                    step_len *= 0.5
                if moved:
                    break
            shift = 1.0 if shift == 0.0 else 10.0 * shift
        if not moved:
            # no descent left at round-off level
            break
        if np.max(np.abs(step_len * p)) < tol * max(1.0, float(np.max(np.abs(u0)))):
            break
    return nodes_of(svec)


def implicit_step(state: FlowState, config: FlowConfig,
                  W_old: float | None = None) -> tuple[FlowState, float]:
    """One accepted minimizing-movement step; the step size adapts."""
    if W_old is None:
        W_old = willmore(state.curve)
    dt = min(state.dt, config.dt_max)
    for _ in range(MAX_HALVINGS + 1):
        try:
            nodes = implicit_nodes(state.curve, state.boundary, dt)
        except (DegenerateImmersion, ValueError):
            nodes = None
        got = _accept(state, nodes, W_old)
        if got is not None:
            curve, W_new = got
            nxt = min(config.dt_max, dt * config.dt_growth)
            return FlowState(state.t + dt, curve, state.step_count + 1, state.boundary, nxt), W_new
        dt *= config.dt_safety
    raise StepFailure(f"implicit step rejected {MAX_HALVINGS} times at t={state.t:.6g}")


# --------------------------------------------------------------------------
# diagnostics and runs

@dataclass(frozen=True)
class Diagnostics:
    min_height: float
    min_index: int
    min_x: float
    verticality: float
    L_euclid: float
    L_hyp: float
    E: float
    W: float
    grad_norm: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verticality(curve: ProfileCurve, frac: float = 0.05) -> float:
    """max |r'|/|u'| over the 5% of nodes nearest the lowest node."""
    du, _ = derivatives(curve)
    ratio = np.abs(du[:, 1]) / np.hypot(du[:, 0], du[:, 1])
    i0 = int(np.argmin(curve.r))
    k = max(1, int(round(frac * (curve.N + 1))))
    near = np.argsort(np.abs(np.arange(curve.N + 1) - i0), kind="stable")[:k]
    return float(ratio[near].max())


def normal_residual(curve: ProfileCurve) -> float:
    """Max g-norm of the normal clamped gradient off the clamp layer.

    The tangential part of the discrete gradient only measures how the
    energy depends on the parametrization; it vanishes in the continuum.
    """
    sv = normal_riesz(energy_gradient(curve), hyperbolic_mass(curve), curve) / curve.r
    return float(np.abs(sv[CLAMP_LAYER + 1:-CLAMP_LAYER - 1]).max())


def diagnostics(curve: ProfileCurve) -> Diagnostics:
    i0 = int(np.argmin(curve.r))
    Le, Lh = lengths(curve)
    E = elastic_energy(curve)
    W = 0.5 * math.pi * (E - 4.0 * boundary_term(curve))
    return Diagnostics(float(curve.r[i0]), i0, float(curve.x[i0]), verticality(curve),
                       Le, Lh, E, W, normal_residual(curve))


TRACE_HEADER = ["t", "W", "E", "L_euc", "L_hyp", "min_height", "grad_norm", "verticality", "dt"]


@dataclass
class FlowTrace:
    t: list = field(default_factory=list)
    W: list = field(default_factory=list)
    E: list = field(default_factory=list)
    L_euc: list = field(default_factory=list)
    L_hyp: list = field(default_factory=list)
    min_height: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    verticality: list = field(default_factory=list)
    dt: list = field(default_factory=list)

    def append(self, t: float, d: Diagnostics, dt: float) -> None:
        self.t.append(t)
        self.W.append(d.W)
        self.E.append(d.E)
        self.L_euc.append(d.L_euclid)
        self.L_hyp.append(d.L_hyp)
        self.min_height.append(d.min_height)
        self.grad_norm.append(d.grad_norm)
        self.verticality.append(d.verticality)
        self.dt.append(dt)

    def __len__(self):
        return len(self.t)

    def rows(self):
        return zip(*(getattr(self, k) for k in TRACE_HEADER))

    def descent_violations(self, tol: float = 1e-9) -> int:
        W = np.asarray(self.W)
        return int(np.sum(np.diff(W) > tol)) if len(W) > 1 else 0

    def write_csv(self, path: str) -> None:
        from .io import write_table
        write_table(path, TRACE_HEADER, self.rows())


@dataclass
class FlowResult:
    trace: FlowTrace
    outcome: str
    state: FlowState
    gate: GateReport | None = None
    residual: float | None = None
    li_yau: dict | None = None
    diagnostics: Diagnostics | None = None
    resamples: int = 0

    def __iter__(self):
        # unpacks as (trace, outcome)
        return iter((self.trace, self.outcome))

    def summary(self) -> dict:
        return {
            "outcome": self.outcome,
            "steps": self.state.step_count,
            "t": self.state.t,
            "gate": None if self.gate is None else self.gate.to_dict(),
            "final_residual": self.residual,
            "final": None if self.diagnostics is None else self.diagnostics.to_dict(),
            "W_initial": self.trace.W[0] if self.trace.W else None,
            "W_final": self.trace.W[-1] if self.trace.W else None,
            "descent_violations": self.trace.descent_violations(),
            "resamples": self.resamples,
            "li_yau": self.li_yau,
        }


def _li_yau_summary(curve: ProfileCurve, boundary: ClampedBoundary) -> dict:
    from .errors import LiYauViolation
    from .revolution import revolve
    from .varifold import li_yau_check

    try:
        res = li_yau_check(revolve(curve), boundary, "axis")
    except LiYauViolation as exc:
        return {"passes": True, "violation": str(exc)}
    return {"passes": res.passes, "margin": res.margin,
            "max_density": max(res.densities) if res.densities else None}


def run(initial: ProfileCurve, boundary: ClampedBoundary, config: FlowConfig,
        callback=None) -> FlowResult:
    """Integrate until convergence, a singularity alarm or the step budget."""
    boundary.check(initial)
    g = gate(initial, boundary)
    stepper = implicit_step if config.scheme == "implicit" else step
    state = FlowState(0.0, initial, 0, boundary, config.dt_init)
    trace = FlowTrace()
    alarm = config.axis_alarm(boundary)
    resamples = 0

    d = diagnostics(state.curve)
    trace.append(0.0, d, 0.0)
    W = d.W
    outcome = "MaxSteps"
    while True:
        if d.grad_norm < config.tol_grad:
            outcome = "Converged"
            break
        if d.min_height < alarm or d.L_hyp > config.L_hyp_max:
            outcome = "SingularitySuspected"
            break
        if state.step_count >= config.max_steps:
            break
        prev_dt = state.dt
        state, W = stepper(state, config, W)
        dt_used = state.t - trace.t[-1]
        if config.resample_every and state.step_count % config.resample_every == 0:
            state, W, did = _try_resample(state, W)
            resamples += did
        d = diagnostics(state.curve)
        trace.append(state.t, d, dt_used)
        W = d.W
        if callback is not None:
            callback(state, d)
    result = FlowResult(trace, outcome, state, g, diagnostics=d, resamples=resamples)
    if outcome == "Converged":
        result.residual = d.grad_norm
        if config.check_li_yau:
            result.li_yau = _li_yau_summary(state.curve, boundary)
    return result


def _try_resample(state: FlowState, W: float) -> tuple[FlowState, float, int]:
    """Resample to equal chords; kept only if W does not increase."""
    try:
        nodes = reimpose_boundary(resample(state.curve, state.curve.N).nodes, state.boundary)
        curve = ProfileCurve(nodes)
        W_new = willmore(curve)
    except (DegenerateImmersion, BoundaryMismatch, ValueError):
        return state, W, 0
    if W_new > W + DESCENT_SLACK or state.boundary.mismatch(curve) > 1e-8:
        return state, W, 0
    return replace(state, curve=curve), W_new, 1
