"""Two-link pendulum scenario: channels, branch roots, curves, step-1 times."""

import math

import numpy as np
import pytest
from scipy.integrate import simpson

from stepsynth import (
    CurveSwitch,
    NoRealRoot,
    PendulumParams,
    pendulum,
    pendulum_H,
    pendulum_T1_analytic,
    pendulum_energy,
    pendulum_u1pm,
    pendulum_u2pm,
    pendulum_w1,
    pendulum_w2,
    rk4_step,
)

P = PendulumParams()


# --- params ---


def test_params_defaults():
    assert P.m1 == P.m2 == P.l1 == P.l2 == P.g == 1.0
    assert P.alpha == pytest.approx(1.0 / 9.0)
    assert (P.eps1p, P.eps1m) == (20.0, 10.0)


def test_params_validation():
    with pytest.raises(ValueError):
        PendulumParams(m1=-1.0)
    with pytest.raises(ValueError):
        PendulumParams(l2=0.0)
    with pytest.raises(ValueError):
        PendulumParams(eps1p=0.0)
    with pytest.raises(ValueError):
        PendulumParams(alpha=0.0)
    # cap is (4/27) l1^2 / g^2; 1/9 sits below it, 0.15 above
    with pytest.raises(ValueError):
        PendulumParams(alpha=0.15)
    PendulumParams(alpha=4.0 / 27.0)  # boundary admissible
    PendulumParams(alpha=0.15, l1=2.0)  # cap scales with l1^2


# --- channels ---


def test_H_rest_point():
    assert pendulum_H(P, (0.0, 0.0, 0.0, 0.0), 0.0) == (0.0, 0.0)


def test_H_plane_form():
    # with the relative coordinates at zero the channels collapse to
    # H1 = alpha u^3 - u - (g/l1) sin z3 and H2 = u
    rng = np.random.default_rng(3)
    for _ in range(25):
        z3, z4, u = rng.uniform(-3, 3, size=3)
        h1, h2 = pendulum_H(P, (0.0, 0.0, z3, z4), u)
        assert h1 == pytest.approx(P.alpha * u**3 - u - math.sin(z3), abs=1e-12)
        assert h2 == pytest.approx(u, abs=1e-12)


def test_H_matches_acceleration_difference():
    # the block channels and the original-chart accelerations are coded
    # independently; (H1, H2) must equal (b1 - b2, b2) through the chart
    from stepsynth.pendulum import _beta

    scn = pendulum()
    rng = np.random.default_rng(7)
    for _ in range(25):
        z = tuple(rng.uniform(-2, 2, size=4))
        u = float(rng.uniform(-5, 5))
        b1, b2 = _beta(P, scn.from_z(z), u)
        h1, h2 = pendulum_H(P, z, u)
        scale = max(1.0, abs(b1), abs(b2))
        assert abs(h1 - (b1 - b2)) <= 1e-9 * scale
        assert abs(h2 - b2) <= 1e-9 * scale


# --- step-1 branch roots ---


def test_u1pm_values_at_origin():
    up = pendulum_u1pm(P, (0.0, 0.0, 0.0, 0.0), +1)
    um = pendulum_u1pm(P, (0.0, 0.0, 0.0, 0.0), -1)
    assert up == pytest.approx(6.176123115575650, rel=1e-12)
    assert um == pytest.approx(-5.146584047301351, rel=1e-12)
    assert up**3 / 9.0 - up - 20.0 == pytest.approx(0.0, abs=1e-10)
    assert um**3 / 9.0 - um + 10.0 == pytest.approx(0.0, abs=1e-10)


def test_u1pm_defining_residual():
    rng = np.random.default_rng(12)
    for _ in range(40):
        z = tuple(rng.uniform(-1, 1, size=4))
        up = pendulum_u1pm(P, z, +1)
        um = pendulum_u1pm(P, z, -1)
        h1p = pendulum_H(P, z, up)[0]
        h1m = pendulum_H(P, z, um)[0]
        scale = max(1.0, abs(h1p), abs(h1m), P.eps1p)
        assert abs(h1p - P.eps1p) <= 1e-10 * scale
        assert abs(h1m + P.eps1m) <= 1e-10 * scale
        assert up > 0.0 > um


def test_u1pm_no_root_on_branch():
    # drift overwhelms the margin: the cubic has no root on the asked side
    assert issubclass(NoRealRoot, RuntimeError)
    with pytest.raises(NoRealRoot):
        pendulum_u1pm(P, (-0.5, -4.0, -1.0, -4.0), +1)
    with pytest.raises(NoRealRoot):
        pendulum_u1pm(P, (0.5, 4.0, 1.0, 4.0), -1)


def test_w1_values():
    assert pendulum_w1(P, 0.0) == 0.0
    assert pendulum_w1(P, 0.1) == pytest.approx(-2.0, rel=1e-14)
    assert pendulum_w1(P, -1.0) == pytest.approx(math.sqrt(20.0), rel=1e-14)


# --- step-2 branch roots and curve ---


def test_u2pm_at_zero():
    assert pendulum_u2pm(P, 0.0, +1) == pytest.approx(3.0, rel=1e-12)
    assert pendulum_u2pm(P, 0.0, -1) == pytest.approx(-3.0, rel=1e-12)


def test_u2pm_frozen_value():
    assert pendulum_u2pm(P, -math.pi / 2.0, +1) == pytest.approx(
        2.226681596905678, rel=1e-12
    )


def test_u2pm_sign_bounds_and_residual():
    for z3 in np.linspace(-math.pi, math.pi, 101):
        up = pendulum_u2pm(P, float(z3), +1)
        um = pendulum_u2pm(P, float(z3), -1)
        assert up > 0.0 > um
        assert abs(P.alpha * up**3 - up - math.sin(z3)) <= 1e-10
        assert abs(P.alpha * um**3 - um - math.sin(z3)) <= 1e-10


def test_u2pm_odd_symmetry():
    for z3 in (0.3, 1.1, 2.5):
        assert pendulum_u2pm(P, -z3, -1) == pytest.approx(
            -pendulum_u2pm(P, z3, +1), rel=1e-11
        )


def simpson_w2(z3, points=4097):
    """Independent composite-Simpson evaluation of the curve integral."""
    if z3 == 0.0:
        return 0.0
    if z3 > 0.0:
        xs = np.linspace(0.0, z3, points)
        ys = [pendulum_u2pm(P, float(x), +1) for x in xs]
        return -math.sqrt(2.0 * simpson(ys, x=xs))
    xs = np.linspace(z3, 0.0, points)
    ys = [pendulum_u2pm(P, float(x), -1) for x in xs]
    return math.sqrt(-2.0 * simpson(ys, x=xs))


def test_w2_matches_simpson_oracle():
    for z3 in (-3.0, -2.0, -1.0, -0.4, -0.05, 0.05, 0.4, 1.0, 2.0, 3.0):
        assert abs(pendulum_w2(P, z3) - simpson_w2(z3)) <= 1e-8


def test_w2_shape():
    assert pendulum_w2(P, 0.0) == 0.0
    vals = [pendulum_w2(P, z3) for z3 in (0.5, 1.0, 2.0, 4.0)]
    assert all(v < 0.0 for v in vals)
    assert all(b < a for a, b in zip(vals, vals[1:]))  # decreasing
    # odd forcing makes the curve odd
    assert pendulum_w2(P, -1.3) == pytest.approx(-pendulum_w2(P, 1.3), rel=1e-9)


def test_w2_table_matches_quadrature():
    w_fast = pendulum().policies[1].w
    assert w_fast(0.0) == 0.0
    for z3 in np.linspace(-6.5, 6.5, 27):
        assert abs(w_fast(float(z3)) - pendulum_w2(P, float(z3))) <= 1e-8
    # beyond the table span the closure defers to quadrature
    assert w_fast(7.5) == pytest.approx(pendulum_w2(P, 7.5), rel=1e-12)
    assert w_fast(-7.5) == pytest.approx(pendulum_w2(P, -7.5), rel=1e-12)


# --- analytic step-1 times ---


def test_T1_analytic_frozen():
    t11, t12, t1 = pendulum_T1_analytic(P, (-1.0, 0.5, -1.0, 0.5))
    assert t11 == pytest.approx(0.158143841465299, rel=1e-12)
    assert t1 == pytest.approx(0.524431524395898, rel=1e-12)
    assert t11 + t12 == pytest.approx(t1, rel=1e-14)


def test_T1_analytic_origin_and_curve():
    assert pendulum_T1_analytic(P, (0.0, 0.0, 3.0, -1.0)) == (0.0, 0.0, 0.0)
    # starting on the curve leaves only the arrival arc
    t11, t12, t1 = pendulum_T1_analytic(P, (0.1, pendulum_w1(P, 0.1), 0.0, 0.0))
    assert t11 == 0.0
    assert t1 == pytest.approx(0.1, rel=1e-12)  # -z2/eps1p = 2/20
    t11, t12, t1 = pendulum_T1_analytic(P, (-1.0, pendulum_w1(P, -1.0), 0.0, 0.0))
    assert t11 == 0.0
    assert t1 == pytest.approx(math.sqrt(20.0) / 10.0, rel=1e-12)


def arcs_land_at_origin(z1, z2):
    """Propagate the two parabolic arcs by the returned times; assert arrival."""
    t11, t12, _ = pendulum_T1_analytic(P, (z1, z2, 0.0, 0.0))
    assert t11 >= 0.0 and t12 >= 0.0
    w = pendulum_w1(P, z1)
    acc1, acc2 = (P.eps1p, -P.eps1m) if z2 < w else (-P.eps1m, P.eps1p)
    z1a = z1 + z2 * t11 + 0.5 * acc1 * t11**2
    z2a = z2 + acc1 * t11
    # the switch lands on the curve
    assert abs(z2a - pendulum_w1(P, z1a)) <= 1e-9 * max(1.0, abs(z2a))
    z1f = z1a + z2a * t12 + 0.5 * acc2 * t12**2
    z2f = z2a + acc2 * t12
    assert abs(z1f) <= 1e-9 and abs(z2f) <= 1e-9


def test_T1_analytic_arc_consistency():
    rng = np.random.default_rng(5)
    count = 0
    while count < 30:
        z1, z2 = rng.uniform(-2, 2, size=2)
        if abs(z2 - pendulum_w1(P, float(z1))) < 1e-3:
            continue
        arcs_land_at_origin(float(z1), float(z2))
        count += 1


# --- scenario assembly ---


def test_scenario_structure():
    scn = pendulum()
    assert scn.n == 4
    assert scn.blocks.sizes == (2, 2)
    assert all(isinstance(pol, CurveSwitch) for pol in scn.policies)
    assert scn.to_z((-2.0, 1.0, -1.0, 0.5)) == (-1.0, 0.5, -1.0, 0.5)
    assert scn.from_z((-1.0, 0.5, -1.0, 0.5)) == (-2.0, 1.0, -1.0, 0.5)
    assert scn.params["alpha"] == pytest.approx(1.0 / 9.0)
    sched = scn.analytic_schedule((-1.0, 0.5, -1.0, 0.5))
    assert sched == pytest.approx([0.524431524395898], rel=1e-12)


def test_scenario_custom_params():
    scn = pendulum(PendulumParams(eps1p=8.0, eps1m=8.0))
    assert scn.params["eps1p"] == 8.0
    # symmetric margins give the symmetric two-arc time from (0, z2)
    t11, _, t1 = pendulum_T1_analytic(
        PendulumParams(eps1p=8.0, eps1m=8.0), (0.0, 1.0, 0.0, 0.0)
    )
    assert t1 == pytest.approx(t11 * (1.0 + math.sqrt(2.0)) / (1 + 1 / math.sqrt(2)), rel=1e-9)


# --- energy ---


def test_energy_reference_values():
    assert pendulum_energy(P, (0.0, 0.0, 0.0, 0.0)) == pytest.approx(-3.0)
    # raising the first link to horizontal removes its potential terms
    assert pendulum_energy(P, (math.pi / 2.0, 0.0, 0.0, 0.0)) == pytest.approx(-1.0)


def test_energy_conserved_without_control():
    scn = pendulum()
    rhs = lambda x: scn.f(x, 0.0)
    x = (0.9, 0.0, -0.4, 0.0)
    e0 = pendulum_energy(P, x)
    h = 1e-5
    for _ in range(100_000):
        x = rk4_step(rhs, x, h)
    assert abs(pendulum_energy(P, x) - e0) <= 1e-6
