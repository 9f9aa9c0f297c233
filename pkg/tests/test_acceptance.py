"""Acceptance suite: one PASS/FAIL line per criterion with its runtime.

Run ``python3 tests/test_acceptance.py`` for the report alone, or
``pytest -s tests/test_acceptance.py`` to see the lines under pytest.
Each criterion also has to meet its runtime budget.
"""

import os
import sys
import time

import numpy as np
import pytest

from revwillmore import cli
from revwillmore import generators as gen
from revwillmore.flow import FlowConfig, FlowState, implicit_step, run, step, willmore
from revwillmore.hcurve import ClampedBoundary, HPoint, ProfileCurve, UnitDir, elastic_energy, elastic_gradient, pairing
from revwillmore.revolution import bryant_griffiths, revolve, willmore_energy
from revwillmore.thresholds import (
    Circle,
    boundary_integral,
    boundary_integral_axis,
    boundary_integral_closed,
    boundary_integral_quadrature,
    c_ly_rot,
    cap_identity_check,
    cap_side,
    construct_cap,
    spherical_cap_energy,
    threshold_report,
)
from revwillmore.varifold import density_estimate, li_yau_check, simon_profile

EIGHT_PI = 8 * np.pi
CONFIGS = os.path.join(os.path.dirname(os.path.abspath(__file__)), os.pardir, "configs")


class Check:
    """Collects named sub-checks; the criterion passes when all of them do."""

    def __init__(self):
        self.failed = []
        self.notes = []

    def __call__(self, name, ok, value=None):
        if not ok:
            self.failed.append(name if value is None else f"{name} ({value:.3g})")
        elif value is not None:
            self.notes.append(f"{name} {value:.3g}")


def report(number, budget, fn):
    t0 = time.perf_counter()
    chk = Check()
    fn(chk)
    elapsed = time.perf_counter() - t0
    if budget is not None and elapsed > budget:
        chk.failed.append(f"runtime above {budget:g} s")
    status = "PASS" if not chk.failed else "FAIL"
    detail = "; ".join(chk.failed if chk.failed else chk.notes)
    print(f"criterion {number}: {status} ({elapsed:.1f} s) {detail}", flush=True)
    return not chk.failed


def normal_bump(curve, amp, power=2):
    t = np.gradient(curve.nodes, axis=0)
    n = np.column_stack([-t[:, 1], t[:, 0]]) / np.hypot(t[:, 0], t[:, 1])[:, None]
    return ProfileCurve(curve.nodes + amp * (np.sin(np.pi * curve.x) ** power)[:, None] * n)


def directional_bump(N, center, width, direction):
    x = np.linspace(0, 1, N + 1)
    b = np.exp(-(((x - center) / width) ** 2))
    b[:3] = 0.0
    b[-3:] = 0.0
    return b[:, None] * np.asarray(direction)[None, :]


# ---------------------------------------------------------------- criteria

def identity(chk):
    worst = 0.0
    for th0, th1 in [(0.4, 2.3), (0.2, 1.2), (1.0, 2.9), (np.pi / 6, 5 * np.pi / 6)]:
        c = gen.semicircle_arc(th0, th1, 1024)
        worst = max(worst, abs(willmore_energy(revolve(c)) - bryant_griffiths(c)))
    # smooth corpus: three modes of small amplitude keep the energies O(10)
    rng = np.random.default_rng(2024)
    for _ in range(50):
        c, _ = gen.random_clamped_curve(rng, 1024, modes=3, amplitude=0.1)
        worst = max(worst, abs(willmore_energy(revolve(c)) - bryant_griffiths(c)))
    chk("max |W - BG|", worst <= 1e-3, worst)
    errs = []
    for N in (64, 128, 256, 512):
        c = gen.semicircle_arc(0.4, 2.3, N)
        errs.append(abs(willmore_energy(revolve(c)) - bryant_griffiths(c)))
    order = float(np.min(np.log2(np.array(errs[:-1]) / np.array(errs[1:]))))
    chk("refinement order", order >= 1.8, order)


def analytic_oracles(chk):
    sphere = willmore_energy(revolve(gen.sphere_profile(2048)))
    chk("sphere |W - 4pi|", abs(sphere - 4 * np.pi) <= 1e-2, abs(sphere - 4 * np.pi))
    zone = willmore_energy(revolve(gen.zone_profile(1024)))
    chk("zone |W - 2pi sqrt3|", abs(zone - 2 * np.pi * np.sqrt(3)) <= 1e-3, abs(zone - 2 * np.pi * np.sqrt(3)))
    cat = willmore_energy(revolve(gen.catenoid(1024)))
    chk("catenoid W", cat <= 1e-5, cat)
    rng = np.random.default_rng(5)
    worst, n = 0.0, 0
    while n < 20:
        tau = UnitDir.from_angle(rng.uniform(0, 2 * np.pi))
        if abs(tau.t1) < 0.1:
            continue
        # the cap closes end y=1, leaving p along -tau
        arc, _ = construct_cap(HPoint(rng.uniform(-5, 5), rng.uniform(0.1, 10)), tau, cap_side(tau, 1))
        worst = max(worst, abs(willmore_energy(revolve(arc)) - spherical_cap_energy(tau)))
        n += 1
    chk("cap energy", worst <= 1e-3, worst)


def threshold_values(chk):
    deg = ClampedBoundary.from_values((0.3, 1.2), (0.3, 1.2), (0.6, 0.8), (0.6, 0.8))
    rep = threshold_report(deg, grid=(128, 128))
    chk("degenerate C_LY^rot", abs(rep.c_ly_rot - EIGHT_PI) <= 1e-8, abs(rep.c_ly_rot - EIGHT_PI))
    chk("degenerate C_LY", abs(rep.c_ly - EIGHT_PI) <= 1e-8, abs(rep.c_ly - EIGHT_PI))
    chk("degenerate T", rep.T_tau == 4 * np.pi)
    sym = ClampedBoundary.from_values((-1, 1), (1, 1), (1, 0), (1, 0))
    val, _ = c_ly_rot(sym)
    chk("symmetric C_LY^rot", abs(val - 4 * np.pi) <= 1e-6, abs(val - 4 * np.pi))
    rng = np.random.default_rng(11)
    worst = 0.0
    for k in range(100):
        b = gen.random_boundary(rng)
        if k % 2 == 0:
            h = rng.uniform(-8, 8)
            exact, quad = float(boundary_integral_axis(b, h)), boundary_integral_quadrature(b, [h, 0, 0])
        else:
            z1, d = rng.uniform(-6, 6), rng.uniform(0.05, 12)
            exact, quad = float(boundary_integral_closed(b, z1, d)), boundary_integral_quadrature(b, [z1, d, 0])
        worst = max(worst, abs(exact - quad) / max(1.0, abs(quad)))
    chk("closed form vs quadrature", worst <= 1e-10, worst)
    bad_t = bad_order = 0
    for _ in range(1000):
        rep = threshold_report(gen.random_boundary(rng), grid=(128, 128))
        bad_t += rep.c_ly < rep.T_tau - 1e-6
        bad_order += rep.c_ly_rot < rep.c_ly - 1e-9
    chk("C_LY >= T violations", bad_t == 0, float(bad_t))
    chk("C_LY^rot >= C_LY violations", bad_order == 0, float(bad_order))


def gradient_fd(chk):
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(50):
        c, _ = gen.random_clamped_curve(rng, 64)
        grad = elastic_gradient(c).field
        for _ in range(5):
            phi = directional_bump(64, rng.uniform(0.2, 0.8), rng.uniform(0.05, 0.2), rng.normal(size=2))
            # truncation of the central difference is O(h^2); 1e-6 keeps it below 1e-5
            h = 1e-6
            fd = (elastic_energy(c.with_nodes(c.nodes + h * phi))
                  - elastic_energy(c.with_nodes(c.nodes - h * phi))) / (2 * h)
            exact = pairing(c, grad, phi)
            worst = max(worst, abs(fd - exact) / abs(exact))
    chk("max relative FD error", worst <= 1e-4, worst)


def _relaxed(curve, boundary, steps=30):
    state = FlowState.start(curve, boundary, 1.0)
    W = willmore(curve)
    for _ in range(steps):
        state, W = implicit_step(state, FlowConfig(N=curve.N, scheme="implicit"), W)
    return state.curve


def _gate_corpus(N=128):
    cat_b = gen.catenoid_boundary()
    zone = gen.zone_profile(N)
    sym = ClampedBoundary.from_values((-1, 1), (1, 1), (1, 0), (1, 0))
    rnd, rnd_b = gen.random_clamped_curve(np.random.default_rng(11), N)
    cap, _, _ = gen.axis_cap(0.0, 1.0, 2.0, 1, N=N, eps_axis=0.1)
    cap_b = ClampedBoundary.from_curve(cap)
    return [
        ("perturbed catenoid", gen.conform(gen.perturbed_catenoid(N, 0.05).nodes, cat_b), cat_b),
        ("bumped zone", gen.conform(normal_bump(zone, 0.05).nodes, ClampedBoundary.from_curve(zone)),
         ClampedBoundary.from_curve(zone)),
        ("graph bulge", gen.conform(gen.graph_curve(1.0, 1.0, N, 0.3).nodes, sym), sym),
        ("random curve", rnd, rnd_b),
        ("bumped cap", gen.conform(normal_bump(cap, 0.05, 4).nodes, cap_b), cap_b),
    ]


def flow_properties(chk):
    tol = FlowConfig().tol_grad
    violations = 0
    for name, curve in [("cap", gen.axis_cap(0.0, 1.0, 2.0, 1, N=64, eps_axis=0.1)[0]),
                        ("catenoid", gen.catenoid(64))]:
        b = ClampedBoundary.from_curve(curve)
        start = _relaxed(curve, b)
        state, W = FlowState.start(start, b, 1.0), willmore(start)
        cfg = FlowConfig(N=start.N)
        for _ in range(10_000):
            state, W_new = step(state, cfg, W)
            violations += W_new > W + 1e-9
            W = W_new
        drift = float(np.max(np.abs(state.curve.nodes - start.nodes)))
        chk(f"{name} drift over 1e4 RK4 steps", drift <= 10 * tol, drift)
    b = gen.catenoid_boundary()
    res = run(gen.conform(gen.perturbed_catenoid(256, 0.05).nodes, b), b,
              FlowConfig(N=256, scheme="implicit", max_steps=200_000))
    chk("N=256 catenoid grad_norm", res.outcome == "Converged" and res.trace.grad_norm[-1] < 1e-3,
        res.trace.grad_norm[-1])
    chk("N=256 catenoid monotone W", bool(np.all(np.diff(res.trace.W) <= 1e-9)))
    violations += res.trace.descent_violations()
    for name, curve, bd in _gate_corpus():
        res = run(curve, bd, FlowConfig(N=curve.N, scheme="implicit", check_li_yau=False))
        violations += res.trace.descent_violations()
        chk(f"{name} gate", res.gate.satisfied)
        chk(f"{name} Converged", res.outcome == "Converged")
    chk("descent violations", violations == 0, float(violations))


def monotonicity(chk):
    worst_defect = worst_limit = 0.0
    sphere = revolve(gen.sphere_profile(1024))
    radii = np.geomspace(0.03, 2.5, 30)
    flat = 0.0
    for z in ([0.0, 1.0, 0.0], [np.cos(1.0), np.sin(1.0), 0.0], [1.0, 0.0, 0.0]):
        P = simon_profile(sphere, None, z, radii)
        flat = max(flat, float(np.max(np.abs(P.A_values / np.pi - 1))))
        worst_defect = max(worst_defect, P.monotonicity_defect())
    chk("sphere flatness", flat <= 0.02, flat)
    arc, p, tau = gen.axis_cap(0.3, 1.2, 2.2, 1)
    cap, cap_c = revolve(arc), [Circle.end(p, tau, 1)]
    cat, cat_b = revolve(gen.catenoid(512)), gen.catenoid_boundary()
    rng = np.random.default_rng(6)
    cases = [(cap, cap_c, z, np.geomspace(0.01, 240, 40)) for z in ([0.1, 0.2, 0.3], [0.3, 0.0, 0.0], [-2.0, 1.0, 0.0])]
    cases += [(cat, cat_b, [rng.uniform(-0.5, 1.5), rng.uniform(0, 2), 0.0], np.geomspace(0.02, 300, 40))
              for _ in range(5)]
    for S, bd, z, r in cases:
        P = simon_profile(S, bd, z, r)
        worst_defect = max(worst_defect, P.monotonicity_defect())
        worst_limit = max(worst_limit, abs(P.A_values[-1] - P.limit))
    chk("monotonicity defect", worst_defect <= 1e-4, worst_defect)
    chk("large-t limit", worst_limit <= 1e-3, worst_limit)
    smooth = density_estimate(sphere, [0.0, 1.0, 0.0], 0.02, 0.2)
    chk("smooth density", abs(smooth - 1) <= 0.03, smooth)
    a0, p0, t0 = gen.axis_cap(0.0, 1.0, 2.0, 0)
    a1, p1, t1 = gen.axis_cap(0.0, 1.0, 1.0, 1)
    union = [revolve(a0), revolve(a1)]
    two = density_estimate(union, [0.0, 0.0, 0.0], 0.02, 0.2)
    chk("two-sheet density", abs(two - 2) <= 0.05 * 2, two)
    # Li-Yau bound at sampled points of every corpus surface
    worst = -np.inf
    for S, bd in [(cap, cap_c), (cat, cat_b), (sphere, None),
                  (union, [Circle.end(p0, t0, 0), Circle.end(p1, t1, 1)])]:
        W = sum(willmore_energy(s) for s in (S if isinstance(S, list) else [S]))
        for s in (S if isinstance(S, list) else [S]):
            prof = s.profile
            for i in np.linspace(1, prof.N - 1, 8).round().astype(int):
                z = [float(prof.a[i]), float(prof.r[i]), 0.0]
                theta = density_estimate(S, z, 0.02, 0.2)
                bound = W / 4 + (0.5 * boundary_integral(bd, z) if bd is not None else 0.0)
                worst = max(worst, (theta * np.pi - bound) / np.pi)
    chk("Li-Yau excess / pi", worst <= 0.05, worst)
    passes, _ = li_yau_check(cap, cap_c)
    chk("Li-Yau check on the cap", passes)


def cap_identity(chk):
    rng = np.random.default_rng(8)
    worst, n = 0.0, 0
    while n < 20:
        tau = UnitDir.from_angle(rng.uniform(0, 2 * np.pi))
        if abs(tau.t1) < 0.1:
            continue
        p = HPoint(rng.uniform(-5, 5), rng.uniform(0.1, 10))
        lhs, rhs = cap_identity_check((p, tau, int(rng.integers(0, 2))))
        worst = max(worst, abs(lhs - rhs))
        n += 1
    chk("max |lhs - rhs|", worst <= 1e-2, worst)


DETERMINISM_RUNS = [
    ("thresholds", "degenerate"), ("thresholds", "symmetric"), ("flow", "flow_perturbed_cap"),
    ("flow", "flow_catenoid"), ("flow", "flow_pinched"), ("minimize", "minimize_cap"),
    ("minimize", "minimize_graph"), ("analyze", "analyze_sphere"), ("analyze", "analyze_catenoid"),
    ("caps", "caps"),
]


def _artifacts(root):
    out = {}
    for dirpath, _, files in sorted(os.walk(root)):
        for f in sorted(files):
            path = os.path.join(dirpath, f)
            with open(path, "rb") as fh:
                out[os.path.relpath(path, root)] = fh.read()
    return out


def determinism(chk, tmp):
    trees = []
    for rep in ("a", "b"):
        for command, name in DETERMINISM_RUNS:
            cli.main([command, "--config", os.path.join(CONFIGS, name + ".json"),
                      "--out", os.path.join(tmp, rep, name), "--seed", "3", "--quiet"])
        trees.append(_artifacts(os.path.join(tmp, rep)))
    chk("artifact files", len(trees[0]) > 0, float(len(trees[0])))
    differ = sorted(k for k in set(trees[0]) | set(trees[1]) if trees[0].get(k) != trees[1].get(k))
    chk("byte-identical" if not differ else "differs: " + ", ".join(differ[:3]), not differ)


CRITERIA = [
    (1, 10, identity),
    (2, 5, analytic_oracles),
    (3, 60, threshold_values),
    (4, 30, gradient_fd),
    (5, 600, flow_properties),
    (6, 120, monotonicity),
    (7, 30, cap_identity),
]


@pytest.mark.parametrize("number,budget,fn", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, budget, fn, capsys):
    with capsys.disabled():
        print()
        ok = report(number, budget, fn)
    assert ok


def test_criterion_8(tmp_path, capsys):
    with capsys.disabled():
        print()
        ok = report(8, None, lambda chk: determinism(chk, str(tmp_path)))
    assert ok


if __name__ == "__main__":
    import tempfile

    results = [report(n, b, fn) for n, b, fn in CRITERIA]
    with tempfile.TemporaryDirectory() as tmp:
        results.append(report(8, None, lambda chk: determinism(chk, tmp)))
    sys.exit(0 if all(results) else 1)
