import json

import numpy as np
import pytest

from revwillmore import generators as gen
from revwillmore.errors import SingularPoint
from revwillmore.hcurve import ClampedBoundary, ProfileCurve
from revwillmore.io import read_table
from revwillmore.revolution import revolve, willmore_energy
from revwillmore.thresholds import Circle, boundary_integral
from revwillmore.varifold import (
    ball_mass,
    density_estimate,
    li_yau_check,
    simon_profile,
)


@pytest.fixture(scope="module")
def sphere():
    return revolve(gen.sphere_profile(1024))


def cap_union(shift=0.0):
    a0, p0, t0 = gen.axis_cap(0.0, 1.0, 2.0, 0)
    a1, p1, t1 = gen.axis_cap(shift, 1.0, 1.0, 1)
    return [revolve(a0), revolve(a1)], [Circle.end(p0, t0, 0), Circle.end(p1, t1, 1)]


def bumped(arc: ProfileCurve, eps: float) -> ProfileCurve:
    """Push an arc along its normal with a bump that keeps end data."""
    nodes = arc.nodes.copy()
    t = np.gradient(nodes, axis=0)
    n = np.column_stack([-t[:, 1], t[:, 0]]) / np.hypot(t[:, 0], t[:, 1])[:, None]
    x = arc.x
    return ProfileCurve(nodes + eps * (np.sin(np.pi * x) ** 2)[:, None] * n)


def test_ball_mass_examples(sphere):
    t = 0.05
    assert abs(ball_mass(sphere, [1.0, 0, 0], t) / (np.pi * t * t) - 1) <= 0.02
    assert abs(ball_mass(sphere, [0.0, 0.6, 0.8], t) / (np.pi * t * t) - 1) <= 0.02
    small = revolve(gen.sphere_profile(256).scaled(0.5))
    assert ball_mass(small, [10.0, 0, 0], 1.0) == 0.0
    assert abs(ball_mass(sphere, [0, 0, 0], 3.0) - 4 * np.pi) <= 1e-3


def test_ball_mass_vectorized_and_rotation_invariant(sphere):
    t = np.array([0.1, 0.5, 1.0])
    m = ball_mass(sphere, [0.2, 0.5, 0.0], t)
    for i, ti in enumerate(t):
        assert abs(ball_mass(sphere, [0.2, 0.3, 0.4], ti) - m[i]) <= 1e-12


def test_ball_mass_exact_spherical_cap_area(sphere):
    # ball centred on the sphere: area of the cut cap is pi t^2
    for t in (0.3, 0.9, 1.7):
        assert abs(ball_mass(sphere, [0.0, 1.0, 0.0], t) - np.pi * t * t) <= 1e-4


def test_sphere_profile_is_flat(sphere):
    radii = np.geomspace(0.03, 2.5, 30)
    for z in ([0.0, 1.0, 0.0], [np.cos(1.0), np.sin(1.0), 0.0], [1.0, 0.0, 0.0]):
        P = simon_profile(sphere, None, z, radii)
        assert np.max(np.abs(P.A_values - np.pi)) <= 0.02 * np.pi
        assert P.monotonicity_defect() <= 1e-4


def test_sphere_gap_vanishes(sphere):
    # A_z(t) constant means the gap integral between any two radii is zero
    P = simon_profile(sphere, None, [0.0, 0.8, 0.6], [0.2, 2.5])
    assert abs(P.A_values[1] - P.A_values[0]) <= 1e-4


def test_large_radius_limit_on_cap():
    arc, p, tau = gen.axis_cap(0.3, 1.2, 2.2, 1)
    S = revolve(arc)
    cs = [Circle.end(p, tau, 1)]
    W = willmore_energy(S)
    for z in ([0.1, 0.2, 0.3], [0.3, 0.0, 0.0], [-2.0, 1.0, 0.0]):
        P = simon_profile(S, cs, z, np.geomspace(0.01, 100 * 2.4, 40))
        assert abs(P.A_values[-1] - (W / 4 + 0.5 * boundary_integral(cs, z))) <= 1e-3
        assert P.monotonicity_defect() <= 1e-4


def test_monotone_on_catenoid_piece():
    c = gen.catenoid(512)
    S = revolve(c)
    b = gen.catenoid_boundary()
    rng = np.random.default_rng(0)
    for _ in range(5):
        z = [rng.uniform(-0.5, 1.5), rng.uniform(0, 2), 0.0]
        P = simon_profile(S, b, z, np.geomspace(0.02, 300, 40))
        assert P.monotonicity_defect() <= 1e-4
        assert abs(P.A_values[-1] - P.limit) <= 1e-3


def test_singular_point():
    b = gen.catenoid_boundary()
    with pytest.raises(SingularPoint):
        simon_profile(revolve(gen.catenoid(64)), b, [0.0, 1.0, 0.0], [0.1, 0.2])


def test_density_examples(sphere):
    assert abs(density_estimate(sphere, [0.0, 1.0, 0.0], 0.02, 0.2) - 1) <= 0.03
    assert density_estimate(sphere, [0.0, 0.0, 0.0], 0.02, 0.2) == 0.0
    U, _ = cap_union()
    assert abs(density_estimate(U, [0.0, 0.0, 0.0], 0.02, 0.2) - 2) <= 0.05 * 2


def test_density_lower_bound_with_slack():
    U, cs = cap_union(0.5)
    W = sum(willmore_energy(s) for s in U)
    rng = np.random.default_rng(1)
    for _ in range(10):
        z = [rng.uniform(-1.5, 1.5), rng.uniform(0, 1.2), 0.0]
        theta = density_estimate(U, z, 0.02, 0.2)
        assert theta * np.pi <= W / 4 + 0.5 * boundary_integral(cs, z) + 0.05 * np.pi


def test_li_yau_cap_passes():
    arc, p, tau = gen.axis_cap(0.0, 1.0, 2.0, 1)
    res = li_yau_check(revolve(arc), [Circle.end(p, tau, 1)])
    assert res.passes
    assert max(res.densities) <= 1.05
    passes, margin = res
    assert passes and margin > 0


def test_li_yau_union_above_threshold_fails():
    a0, p0, t0 = gen.axis_cap(0.0, 1.0, 2.0, 0)
    a1, p1, t1 = gen.axis_cap(0.0, 1.0, 1.0, 1)
    U = [revolve(bumped(a0, 0.05)), revolve(a1)]
    res = li_yau_check(U, [Circle.end(p0, t0, 0), Circle.end(p1, t1, 1)])
    assert not res.passes
    assert res.margin < -1e-3
    assert res.densities == []


def test_li_yau_degenerate_margin():
    arc, p, tau = gen.axis_cap(0.0, 1.0, np.pi / 2, 1)
    b = ClampedBoundary(p, p, tau, tau)
    res = li_yau_check(revolve(arc), b)
    assert abs(res.margin - 6 * np.pi) <= 1e-6


def test_profile_exports(tmp_path, sphere):
    P = simon_profile(sphere, None, [0.0, 1.0, 0.0], [0.1, 0.2, 0.4])
    P.write_csv(tmp_path / "p.csv")
    header, data = read_table(tmp_path / "p.csv")
    assert header == ["t", "A", "mass_term", "willmore_term", "pairing_term", "boundary_term"]
    assert np.array_equal(data[:, 1], P.A_values)
    P.write_json(tmp_path / "p.json")
    assert "theta_hat" in json.loads((tmp_path / "p.json").read_text())


def test_radii_must_increase(sphere):
    with pytest.raises(ValueError):
        simon_profile(sphere, None, [0.0, 1.0, 0.0], [0.2, 0.1])
