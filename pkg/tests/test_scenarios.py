"""Bundled scenarios: charts, channels, policies, and analytic schedules."""

import math
from fractions import Fraction

import numpy as np
import pytest

from stepsynth import (
    RootBracketFailure,
    SCENARIO_NAMES,
    ConstSign,
    CurveSwitch,
    ThetaSwitch,
    eval_control,
    example51,
    get_scenario,
    intro2d,
    polyodd,
    polyodd_coeffs,
)

ALL_NAMES = ("intro2d", "example51", "polyodd:3", "pendulum")


def fd_chart_rate(scn, x, u, eps=1e-6):
    """Finite-difference d/dt of to_z along f, for the chart consistency check."""
    x = np.asarray(x, dtype=float)
    fx = np.asarray(scn.f(tuple(x), u), dtype=float)
    zp = np.asarray(scn.to_z(tuple(x + eps * fx)), dtype=float)
    zm = np.asarray(scn.to_z(tuple(x - eps * fx)), dtype=float)
    return (zp - zm) / (2.0 * eps)


# --- registry ---


def test_registry_names_resolve():
    for name in ALL_NAMES:
        scn = get_scenario(name)
        assert scn.n == scn.blocks.n
        assert len(scn.policies) == scn.blocks.m


def test_registry_unknown_and_malformed():
    with pytest.raises(ValueError):
        get_scenario("nosuch")
    with pytest.raises(ValueError):
        get_scenario("polyodd:x")
    with pytest.raises(ValueError):
        get_scenario("polyodd:1")


def test_registry_param_passthrough():
    scn = get_scenario("polyodd:3", alpha=0.9)
    assert scn.params["alpha"] == 0.9
    pend = get_scenario("pendulum", alpha=0.1)
    assert pend.params["alpha"] == 0.1


def test_scenario_names_listing():
    assert "intro2d" in SCENARIO_NAMES
    assert "pendulum" in SCENARIO_NAMES
    assert any(n.startswith("polyodd") for n in SCENARIO_NAMES)
    assert "example51" in SCENARIO_NAMES


# --- intro2d ---


def test_intro2d_channels():
    scn = intro2d()
    assert scn.to_z((0.3, -0.4)) == (0.3, -0.4)
    h = scn.H((1.0, 1.0), math.pi / 2.0)
    assert h[0] == pytest.approx(1.0, abs=1e-15)
    assert h[1] == pytest.approx(-math.pi / 2.0, abs=1e-12)
    # step-2 level pi moves only the second channel
    h2 = scn.H((1.0, 1.0), math.pi)
    assert h2[0] == pytest.approx(0.0, abs=1e-12)
    assert h2[1] == pytest.approx(math.pi, abs=1e-12)


def test_intro2d_policy_values():
    scn = intro2d()
    assert eval_control(scn.policies[0], (3.0, 5.0), scn.blocks, 1) == -math.pi / 2.0
    assert eval_control(scn.policies[1], (0.0, -2.0), scn.blocks, 2) == math.pi


def test_intro2d_schedule():
    scn = intro2d()
    assert scn.analytic_schedule((1.0, 1.0)) == pytest.approx(
        [1.0, 1.8183098861837907], rel=1e-12
    )
    t = scn.analytic_schedule((-2.0, 3.0))
    assert t[0] == 2.0
    assert t[1] == pytest.approx(2.0 + abs(-1.0 + 3.0 / math.pi), rel=1e-12)


# --- polyodd coefficients ---


def test_polyodd_coeffs_exact_values():
    assert polyodd_coeffs(3, 1) == (Fraction(4, 81), Fraction(-5, 9))
    assert polyodd_coeffs(3, 2) == (Fraction(-1, 9),)
    assert polyodd_coeffs(3, 3) == ()
    assert all(isinstance(c, Fraction) for c in polyodd_coeffs(5, 2))


def test_polyodd_coeffs_validation():
    with pytest.raises(ValueError):
        polyodd_coeffs(3, 0)
    with pytest.raises(ValueError):
        polyodd_coeffs(3, 4)


def eval_p(coeffs, u):
    # P(u) = u^(2d+1) + sum c_k u^(2k-1), exact when both are Fractions
    d = len(coeffs)
    acc = u ** (2 * d + 1)
    for k, c in enumerate(coeffs, start=1):
        acc += c * u ** (2 * k - 1)
    return acc


@pytest.mark.parametrize("n", [3, 4, 5])
def test_polyodd_root_nesting_exact(n):
    # every root lam_k of P_(i+1) is a root of P_i as well: pinning is exact
    for i in range(1, n):
        ci = polyodd_coeffs(n, i)
        for k in range(1, n - i + 1):
            lam = Fraction(k, n)
            assert eval_p(ci, lam) == 0
            assert eval_p(ci, -lam) == 0
    # the step-1 level alpha=1 is a root of no P_i, so it moves block 1
    assert eval_p(polyodd_coeffs(n, 1), Fraction(1)) != 0


# --- polyodd scenario ---


def test_polyodd_levels_and_policies():
    scn = polyodd(3)
    assert scn.blocks.sizes == (1, 1, 1)
    levels = [p.level for p in scn.policies]
    assert levels == pytest.approx([1.0, 2.0 / 3.0, 1.0 / 3.0], rel=1e-15)
    assert all(isinstance(p, ConstSign) for p in scn.policies)
    # step 2 pushes against the sign of z2 at its level
    assert eval_control(scn.policies[1], (0.0, -0.4, 0.7), scn.blocks, 2) == pytest.approx(
        2.0 / 3.0, rel=1e-15
    )


def test_polyodd_schedule_frozen_values():
    scn = polyodd(3)
    sched = scn.analytic_schedule((1.0, 1.0, 1.0))
    assert sched == pytest.approx([2.025, 5.625, 9.75], rel=1e-12)


def test_polyodd_schedule_skips_zero_blocks():
    scn = polyodd(3)
    sched = scn.analytic_schedule((0.0, 1.0, 0.0))
    assert sched[0] == 0.0
    assert sched[1] == pytest.approx(4.5, rel=1e-12)  # 1 / P2(2/3) = 1/(2/9)
    assert sched[2] > sched[1]  # block 3 picked up drift during step 2


def test_polyodd_validation():
    with pytest.raises(ValueError):
        polyodd(1)
    with pytest.raises(ValueError):
        polyodd(3, lambdas=(0.5, 0.4))
    with pytest.raises(ValueError):
        polyodd(3, lambdas=(0.5, 1.0))
    with pytest.raises(ValueError):
        polyodd(3, lambdas=(0.5,))
    with pytest.raises(ValueError):
        polyodd(3, alpha=0.0)
    with pytest.raises(ValueError):
        polyodd(3, alpha=1.2)
    # alpha inside the lambda ladder cannot drive block 1 toward zero
    with pytest.raises(ValueError):
        polyodd(3, alpha=0.5)
    with pytest.raises(ValueError):
        polyodd(3, alpha=2.0 / 3.0)


def test_polyodd_chart_roundtrip():
    scn = polyodd(4)
    rng = np.random.default_rng(11)
    for _ in range(20):
        x = tuple(rng.uniform(-2, 2, size=4))
        back = scn.from_z(scn.to_z(x))
        assert np.max(np.abs(np.array(back) - np.array(x))) <= 1e-10


def test_polyodd_custom_lambdas():
    scn = polyodd(3, lambdas=(0.25, 0.5), alpha=0.75)
    assert [p.level for p in scn.policies] == pytest.approx([0.75, 0.5, 0.25])
    sched = scn.analytic_schedule((1.0, 0.0, 0.0))
    # P1(u) = u(u^2-1/16)(u^2-1/4); rate at -3/4 is -P1(3/4)
    rate = 0.75 * (0.75**2 - 0.0625) * (0.75**2 - 0.25)
    assert sched[0] == pytest.approx(1.0 / rate, rel=1e-12)


# --- example51 ---


def test_example51_step1_controls():
    scn = example51()
    u1p = scn.policies[0].u_plus((0.5, 0.2, -0.3))
    u1m = scn.policies[0].u_minus((0.5, 0.2, -0.3))
    u10 = scn.policies[0].u_zero((0.5, 0.2, -0.3))
    assert 0.7 <= u1p <= 1.1
    assert -1.2 <= u1m <= -0.8
    assert u10 == 0.0
    # the channel is pushed at exactly the +-0.2 levels
    assert u1p**3 - u1p == pytest.approx(0.2, abs=1e-10)
    assert u1m**3 - u1m == pytest.approx(-0.2, abs=1e-10)


def test_example51_synth_saturates_bound():
    scn = example51()
    s = scn.policies[0].synth
    assert s.d == 0.2
    assert s.a0 == pytest.approx(0.04, rel=1e-15)  # a0_max = d^2 for k=1


def test_example51_step2_controls_hold_block1():
    scn = example51()
    z = (0.0, -0.7, 0.4)
    u2p = scn.policies[1].u_plus(z)
    u2m = scn.policies[1].u_minus(z)
    assert u2p == pytest.approx(1.0, abs=1e-12)
    assert u2m == pytest.approx(-1.0, abs=1e-12)
    # both controls are roots of the first channel: block 1 stays pinned
    assert abs(scn.H(z, u2p)[0]) <= 1e-10
    assert abs(scn.H(z, u2m)[0]) <= 1e-10


def test_example51_switch_curve():
    scn = example51()
    w = scn.policies[1].w
    assert w(0.0) == 0.0
    assert w(0.5) == pytest.approx(-1.0, rel=1e-12)
    assert w(-0.5) == pytest.approx(1.0, rel=1e-12)
    assert isinstance(scn.policies[1], CurveSwitch)
    assert isinstance(scn.policies[0], ThetaSwitch)


def test_example51_schedule():
    scn = example51()
    assert scn.analytic_schedule((0.5, 9.0, -2.0)) == pytest.approx([2.5])


def test_example51_chart_roundtrip():
    scn = example51()
    rng = np.random.default_rng(2)
    for _ in range(20):
        x = tuple(rng.uniform(-2, 2, size=3))
        back = scn.from_z(scn.to_z(x))
        assert np.max(np.abs(np.array(back) - np.array(x))) <= 1e-10


def test_example51_custom_f1():
    f1 = lambda x1, x2, x3, u: 0.4 * x1 + 0.1 * x3
    scn = example51(f1=f1)
    z = (0.5, 0.2, -0.3)
    u1p = scn.policies[0].u_plus(z)
    # the root is found numerically on the full channel
    assert scn.H(z, u1p)[0] == pytest.approx(0.2, abs=1e-10)
    u2p = scn.policies[1].u_plus((0.0, -0.7, 0.4))
    assert abs(scn.H((0.0, -0.7, 0.4), u2p)[0]) <= 1e-10


def test_example51_custom_f2():
    f2 = lambda v: v + 0.2 * math.sin(v)
    scn = example51(f2=f2)
    rng = np.random.default_rng(8)
    for _ in range(10):
        x = tuple(rng.uniform(-2, 2, size=3))
        back = scn.from_z(scn.to_z(x))
        assert np.max(np.abs(np.array(back) - np.array(x))) <= 1e-9
    # table-built curve: odd-symmetric, decreasing, through the origin
    w = scn.policies[1].w
    assert abs(w(0.0)) <= 1e-9
    assert w(0.4) < 0.0 < w(-0.4)
    assert w(-0.4) == pytest.approx(-w(0.4), abs=1e-6)


def test_example51_precondition_errors():
    with pytest.raises(ValueError):
        example51(f1=lambda x1, x2, x3, u: 1.0)
    with pytest.raises(ValueError):
        example51(f2=lambda v: v + 1.0)


# --- chart/block consistency across every bundled scenario ---


@pytest.mark.parametrize("name", ALL_NAMES)
def test_block_form_matches_chart_derivative(name):
    scn = get_scenario(name)
    rng = np.random.default_rng(hash(name) % 2**31)
    for _ in range(10):
        x = tuple(rng.uniform(-0.8, 0.8, size=scn.n))
        u = float(rng.uniform(-0.9, 0.9))
        z = scn.to_z(x)
        want = fd_chart_rate(scn, x, u)
        got = np.asarray(scn.system.rhs(tuple(z), u), dtype=float)
        assert np.max(np.abs(got - want)) <= 1e-6 * max(1.0, np.max(np.abs(want)))


@pytest.mark.parametrize("name", ALL_NAMES)
def test_charts_invert_on_box(name):
    scn = get_scenario(name)
    rng = np.random.default_rng(len(name))
    for _ in range(10):
        x = tuple(rng.uniform(-1, 1, size=scn.n))
        z = scn.to_z(x)
        back = scn.from_z(z)
        assert np.max(np.abs(np.array(back) - np.array(x))) <= 1e-10
        there = scn.to_z(back)
        assert np.max(np.abs(np.array(there) - np.array(z))) <= 1e-10
