"""Command-line interface: ``revwillmore <command> --config config.json``.

Commands: thresholds, flow, minimize, analyze, caps.  The config is a JSON
document (see README); ``--dt``, ``--max-steps``, ``--out`` and ``--seed``
override the matching fields.  Exit codes: 0 success / Converged /
BelowThreshold, 1 configuration or data error, 2 SingularitySuspected,
3 MaxSteps, 4 no existence certificate.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import generators as gen
from .errors import BoundaryMismatch, BudgetExhausted, ConfigError, RevWillmoreError, SingularPoint
from .flow import FlowConfig, run
from .hcurve import ClampedBoundary, HPoint, ProfileCurve, UnitDir
from .io import dumps, ensure_dir, read_curve, write_curve, write_json, write_table
from .minimize import INITIALIZERS, MinimizeBudget, minimize_elastic
from .revolution import revolve
from .svg import write_chart
from .thresholds import bracket_curve, cap_identity_check, threshold_report
from .varifold import li_yau_check, simon_profile

EXIT_OK, EXIT_ERROR, EXIT_SINGULAR, EXIT_MAXSTEPS, EXIT_NO_CERT = 0, 1, 2, 3, 4
FLOW_EXIT = {"Converged": EXIT_OK, "SingularitySuspected": EXIT_SINGULAR, "MaxSteps": EXIT_MAXSTEPS}
FLOW_FIELDS = ("N", "dt_init", "dt_safety", "max_steps", "tol_grad", "eps_axis", "L_hyp_max",
               "resample_every", "scheme", "stiffness", "dt_max", "dt_growth", "check_li_yau")
BUDGET_FIELDS = ("descent_iters", "polish_steps", "tol", "N")


# --------------------------------------------------------------------------
# config parsing

def _get(d: dict, key: str, where: str, kind=float, default=None, required: bool = False):
    if key not in d:
        if required:
            raise ConfigError(f"{where}.{key}: missing")
        return default
    v = d[key]
    try:
        if kind is float:
            if isinstance(v, bool):
                raise TypeError
            v = float(v)
            if not math.isfinite(v):
                raise ValueError
        elif kind is int:
            if isinstance(v, bool) or int(v) != v:
                raise TypeError
            v = int(v)
        elif kind == "pair":
            if len(v) != 2:
                raise ValueError
            v = (float(v[0]), float(v[1]))
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key}: expected {kind if isinstance(kind, str) else kind.__name__}, "
                          f"got {v!r}") from None
    return v


def _parse_boundary(spec, where: str = "boundary") -> ClampedBoundary:
    if isinstance(spec, str):
        spec = {"name": spec}
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected an object or a name")
    name = spec.get("name")
    if name == "catenoid":
        return gen.catenoid_boundary()
    if name == "zone":
        return gen.zone_boundary()
    if name == "symmetric":
        a = _get(spec, "alpha", where, default=1.0)
        return ClampedBoundary.from_values((-1, a), (1, a), (1, 0), (1, 0))
    if name == "graph":
        am = _get(spec, "alpha_minus", where, required=True)
        ap = _get(spec, "alpha_plus", where, required=True)
        return ClampedBoundary.from_values((-1, am), (1, ap), (1, 0), (1, 0))
    if name == "degenerate":
        p = _get(spec, "p", where, "pair", required=True)
        tau = _get(spec, "tau", where, "pair", required=True)
        return _clamped(p, p, tau, tau, where)
    if name is not None:
        raise ConfigError(f"{where}.name: unknown boundary {name!r}")
    vals = [_get(spec, k, where, "pair", required=True) for k in ("p0", "p1", "tau0", "tau1")]
    return _clamped(*vals, where)


def _clamped(p0, p1, tau0, tau1, where) -> ClampedBoundary:
    for key, p in (("p0", p0), ("p1", p1)):
        if not p[1] > 0:
            raise ConfigError(f"{where}.{key}: height must be positive")
    for key, t in (("tau0", tau0), ("tau1", tau1)):
        if math.hypot(*t) == 0:
            raise ConfigError(f"{where}.{key}: zero tangent")
    return ClampedBoundary(HPoint(*p0), HPoint(*p1), UnitDir.from_vector(tau0), UnitDir.from_vector(tau1))


def _smooth_bump(curve: ProfileCurve, rng: np.random.Generator, amplitude: float) -> ProfileCurve:
    """Normal perturbation vanishing to second order at both ends."""
    du = np.gradient(curve.nodes, axis=0)
    n = np.column_stack([-du[:, 1], du[:, 0]]) / np.hypot(du[:, 0], du[:, 1])[:, None]
    x = curve.x
    prof = sum(rng.normal(scale=1.0 / k) * np.sin(k * np.pi * x) for k in range(1, 4))
    prof = amplitude * prof / max(np.max(np.abs(prof)), 1e-12)
    return ProfileCurve(curve.nodes + (np.sin(np.pi * x) ** 2 * prof)[:, None] * n)


def _generate(spec: dict, N: int, boundary: ClampedBoundary | None, seed: int, where: str = "initial"):
    """Initial curve and its boundary data (the given data win when present)."""
    if "file" in spec:
        path = spec["file"]
        if not isinstance(path, str) or not os.path.isfile(path):
            raise ConfigError(f"{where}.file: no such file {path!r}")
        try:
            curve = read_curve(path)
        except ValueError as exc:
            raise ConfigError(f"{where}.file: {exc}") from None
        return curve, boundary or ClampedBoundary.from_curve(curve)
    name = spec.get("generator")
    if name == "catenoid":
        curve = gen.catenoid(N)
    elif name == "cap":
        curve, _, _ = gen.axis_cap(_get(spec, "h", where, default=0.0), _get(spec, "R", where, default=1.0),
                                   _get(spec, "phi", where, default=2.0), _get(spec, "y", where, int, 1), N,
                                   _get(spec, "eps_axis", where, default=1e-6))
    elif name == "graph":
        curve = gen.graph_curve(_get(spec, "alpha_minus", where, default=1.0),
                                _get(spec, "alpha_plus", where, default=1.0), N,
                                _get(spec, "bulge", where, default=0.0))
    elif name == "zone":
        curve = gen.zone_profile(N)
    elif name == "sphere":
        curve = gen.sphere_profile(N)
    elif name == "pinched":
        curve = gen.pinched_catenoid(N, _get(spec, "depth", where, default=0.9))
        boundary = boundary or gen.catenoid_boundary()
    elif name == "perturbed":
        base = spec.get("base", {"generator": "catenoid"})
        if not isinstance(base, dict):
            raise ConfigError(f"{where}.base: expected an object")
        curve, bdata = _generate(base, N, boundary, seed, where + ".base")
        rng = np.random.default_rng(_get(spec, "seed", where, int, seed))
        curve = _smooth_bump(curve, rng, _get(spec, "amplitude", where, default=0.05))
        boundary = boundary or bdata
    elif name in INITIALIZERS:
        if boundary is None:
            raise ConfigError(f"{where}.generator: {name!r} needs a boundary")
        return INITIALIZERS[name](boundary, N), boundary
    elif name is None:
        raise ConfigError(f"{where}: needs 'generator' or 'file'")
    else:
        raise ConfigError(f"{where}.generator: unknown generator {name!r}")
    if boundary is None:
        return curve, ClampedBoundary.from_curve(curve)
    try:
        curve = gen.conform(curve.nodes, boundary)
    except BoundaryMismatch as exc:
        raise ConfigError(f"{where}: cannot match the boundary data ({exc})") from None
    return curve, boundary


def _flow_config(spec: dict, args) -> FlowConfig:
    fc = dict(spec.get("flow", {}))
    unknown = sorted(set(fc) - set(FLOW_FIELDS))
    if unknown:
        raise ConfigError(f"flow.{unknown[0]}: unknown field")
    fc.setdefault("N", spec.get("N", 128))
    if args.dt is not None:
        fc["dt_init"] = args.dt
    if args.max_steps is not None:
        fc["max_steps"] = args.max_steps
    for k in ("N", "max_steps", "resample_every"):
        if k in fc:
            fc[k] = _get(fc, k, "flow", int)
    for k in ("dt_init", "dt_safety", "tol_grad", "eps_axis", "L_hyp_max", "stiffness", "dt_max", "dt_growth"):
        if k in fc and fc[k] is not None:
            fc[k] = _get(fc, k, "flow")
    try:
        return FlowConfig(**fc)
    except ValueError as exc:
        raise ConfigError(str(exc).replace("FlowConfig.", "flow.")) from None


def _budget(spec: dict, args) -> MinimizeBudget:
    bc = dict(spec.get("minimize", {}))
    bc.pop("initializer", None)
    unknown = sorted(set(bc) - set(BUDGET_FIELDS))
    if unknown:
        raise ConfigError(f"minimize.{unknown[0]}: unknown field")
    bc.setdefault("N", spec.get("N", 128))
    if args.max_steps is not None:
        bc["polish_steps"] = args.max_steps
    for k in ("descent_iters", "polish_steps", "N"):
        if k in bc:
            bc[k] = _get(bc, k, "minimize", int)
    if "tol" in bc:
        bc["tol"] = _get(bc, "tol", "minimize")
    try:
        return MinimizeBudget(**bc)
    except ValueError as exc:
        raise ConfigError(str(exc).replace("MinimizeBudget.", "minimize.")) from None


def load_spec(path: str | None) -> dict:
    if path is None:
        raise ConfigError("--config: a config file is required")
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"--config: no such file {path!r}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(spec, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return spec


def _boundary_and_curve(spec: dict, N: int, seed: int, need_curve: bool = True):
    boundary = _parse_boundary(spec["boundary"]) if "boundary" in spec else None
    if "initial" not in spec:
        if need_curve:
            raise ConfigError("initial: missing")
        if boundary is None:
            raise ConfigError("boundary: missing")
        return None, boundary
    if not isinstance(spec["initial"], dict):
        raise ConfigError("initial: expected an object")
    curve, boundary = _generate(spec["initial"], N, boundary, seed)
    try:
        boundary.check(curve)
    except BoundaryMismatch as exc:
        raise ConfigError(f"initial: {exc}") from None
    return curve, boundary


# --------------------------------------------------------------------------
# commands

def _emit(args, obj) -> None:
    if not args.quiet:
        sys.stdout.write(dumps(obj))


def cmd_thresholds(spec: dict, args) -> int:
    curve, boundary = _boundary_and_curve(spec, int(spec.get("N", 128)), args.seed, need_curve=False)
    grid = spec.get("grid", [256, 256])
    if not (isinstance(grid, list) and len(grid) == 2 and all(isinstance(g, int) and g >= 8 for g in grid)):
        raise ConfigError(f"grid: expected two integers >= 8, got {grid!r}")
    W0 = None
    if curve is not None:
        from .revolution import bryant_griffiths
        W0 = bryant_griffiths(curve)
    rep = threshold_report(boundary, W0, tuple(grid))
    out = {"boundary": boundary.to_dict(), **rep.to_dict()}
    write_json(os.path.join(args.out, "thresholds.json"), out)
    hs, vals = bracket_curve(boundary)
    markers = [] if rep.h_star is None else [rep.h_star]
    write_chart(os.path.join(args.out, "bracket.svg"), [("bracket", hs, vals)],
                "axial bracket", "h", "bracket(h)", markers)
    _emit(args, out)
    return EXIT_OK


def _series_chart(path, t, y, title):
    write_chart(path, [(title, t, y)], title, "t", title)


def cmd_flow(spec: dict, args) -> int:
    cfg = _flow_config(spec, args)
    curve, boundary = _boundary_and_curve(spec, cfg.N, args.seed)
    res = run(curve, boundary, cfg)
    out = args.out
    write_json(os.path.join(out, "gate.json"), res.gate.to_dict())
    res.trace.write_csv(os.path.join(out, "trace.csv"))
    write_curve(os.path.join(out, "final_curve.csv"), res.state.curve)
    summary = res.summary()
    write_json(os.path.join(out, "summary.json"), summary)
    tr = res.trace
    _series_chart(os.path.join(out, "W.svg"), tr.t, tr.W, "W")
    _series_chart(os.path.join(out, "L_hyp.svg"), tr.t, tr.L_hyp, "L_hyp")
    _series_chart(os.path.join(out, "min_height.svg"), tr.t, tr.min_height, "min_height")
    _emit(args, {"outcome": res.outcome, "steps": res.state.step_count,
                 "W_initial": summary["W_initial"], "W_final": summary["W_final"]})
    return FLOW_EXIT[res.outcome]


def cmd_minimize(spec: dict, args) -> int:
    budget = _budget(spec, args)
    init_name = spec.get("minimize", {}).get("initializer")
    if "initial" in spec:
        curve, boundary = _boundary_and_curve(spec, budget.N, args.seed)
    else:
        _, boundary = _boundary_and_curve(spec, budget.N, args.seed, need_curve=False)
        if init_name is not None and init_name not in INITIALIZERS:
            raise ConfigError(f"minimize.initializer: unknown initializer {init_name!r}")
        curve = init_name
    exhausted = False
    try:
        res = minimize_elastic(boundary, curve, budget)
    except BudgetExhausted as exc:
        res, exhausted = exc.result, True
    out = {**res.to_dict(), "budget_exhausted": exhausted}
    write_json(os.path.join(args.out, "result.json"), out)
    write_curve(os.path.join(args.out, "final_curve.csv"), res.curve)
    _emit(args, out)
    return EXIT_OK if res.verdict == "BelowThreshold" else EXIT_NO_CERT


def _radii(spec) -> np.ndarray:
    r = spec.get("radii", {"t_min": 0.02, "t_max": 2.0, "n": 40})
    if isinstance(r, dict):
        lo = _get(r, "t_min", "radii", required=True)
        hi = _get(r, "t_max", "radii", required=True)
        n = _get(r, "n", "radii", int, 40)
        if not (0 < lo < hi) or n < 2:
            raise ConfigError("radii: need 0 < t_min < t_max and n >= 2")
        return np.geomspace(lo, hi, n)
    try:
        radii = np.array([float(v) for v in r])
    except (TypeError, ValueError):
        raise ConfigError(f"radii: expected numbers, got {r!r}") from None
    if radii.size < 1 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ConfigError("radii: must be positive and increasing")
    return radii


def cmd_analyze(spec: dict, args) -> int:
    curve, boundary = _boundary_and_curve(spec, int(spec.get("N", 512)), args.seed)
    closed = bool(spec.get("closed", False))
    circles = [] if closed else boundary
    surface = revolve(curve)
    radii = _radii(spec)
    zs = spec.get("z")
    if not isinstance(zs, list) or not zs:
        raise ConfigError("z: expected a non-empty list of points")
    entries, series = [], []
    for k, z in enumerate(zs):
        try:
            z = [float(v) for v in z]
            if len(z) not in (2, 3):
                raise ValueError
        except (TypeError, ValueError):
            raise ConfigError(f"z[{k}]: expected 2 or 3 numbers, got {z!r}") from None
        if len(z) == 2:
            z = [z[0], z[1], 0.0]
        try:
            P = simon_profile(surface, None if closed else boundary, z, radii)
        except SingularPoint as exc:
            entries.append({"z": z, "error": f"SingularPoint: {exc}"})
            continue
        P.write_csv(os.path.join(args.out, f"profile_{k:03d}.csv"))
        entries.append(P.summary())
        series.append((f"z{k}", P.radii, P.A_values))
    write_chart(os.path.join(args.out, "A_z.svg"), series, "A_z(t)", "t", "A", logx=True)
    try:
        ly = li_yau_check(surface, circles)
        li = {"passes": ly.passes, "margin": ly.margin,
              "max_density": max(ly.densities) if ly.densities else None}
    except RevWillmoreError as exc:
        li = {"error": f"{type(exc).__name__}: {exc}"}
    out = {"profiles": entries, "li_yau": li}
    write_json(os.path.join(args.out, "analyze.json"), out)
    _emit(args, out)
    return EXIT_OK


def cmd_caps(spec: dict, args) -> int:
    caps = spec.get("caps", {})
    count = _get(caps, "count", "caps", int, 20)
    N = _get(caps, "N", "caps", int, 1024)
    tol = _get(caps, "tol", "caps", default=1e-2)
    if count < 1 or N < 8:
        raise ConfigError("caps: count >= 1 and N >= 8 required")
    rng = np.random.default_rng(args.seed)
    rows = []
    while len(rows) < count:
        ang = rng.uniform(0, 2 * np.pi)
        tau = UnitDir.from_angle(ang)
        if abs(tau.t1) < 0.1:
            continue
        p = HPoint(rng.uniform(-5, 5), rng.uniform(0.1, 10))
        y = int(rng.integers(0, 2))
        lhs, rhs = cap_identity_check((p, tau, y), N=N)
        rows.append((p.a, p.r, ang, y, lhs, rhs, abs(lhs - rhs)))
    write_table(os.path.join(args.out, "caps.csv"), ["p_a", "p_r", "angle", "y", "lhs", "rhs", "diff"], rows)
    worst = max(r[-1] for r in rows)
    out = {"count": count, "max_diff": worst, "passes": bool(worst <= tol)}
    write_json(os.path.join(args.out, "caps.json"), out)
    _emit(args, out)
    return EXIT_OK if out["passes"] else EXIT_ERROR


COMMANDS = {"thresholds": cmd_thresholds, "flow": cmd_flow, "minimize": cmd_minimize,
            "analyze": cmd_analyze, "caps": cmd_caps}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    common.add_argument("--quiet", action="store_true", help="no JSON on stdout")
    common.add_argument("--dt", type=float, default=None, help="override flow.dt_init")
    common.add_argument("--max-steps", type=int, default=None, help="override the step budget")
    p = argparse.ArgumentParser(prog="revwillmore", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=COMMANDS[name].__name__.replace("cmd_", "run "))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed < 0:
            raise ConfigError("--seed: must be non-negative")
        spec = {} if args.command == "caps" and args.config is None else load_spec(args.config)
        try:
            ensure_dir(args.out)
        except OSError as exc:
            raise ConfigError(f"--out: cannot create {args.out!r} ({exc.strerror})") from None
        return COMMANDS[args.command](spec, args)
    except (ConfigError, BoundaryMismatch) as exc:
        print(f"revwillmore {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
