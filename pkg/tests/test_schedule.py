import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import any_params, generalized_params, proportional_params, rel
from linevac.schedule import (
    Kind,
    RangeError,
    ScheduleError,
    ScheduleParams,
    TurningPointRef,
    leg_fractions,
    locate,
    locate_beyond,
    position_at,
    positions,
    scale,
    turning_point,
)

P25 = ScheduleParams.proportional(5, 2.0)


# ------------------------------------------------------------ parameters

@pytest.mark.parametrize("n,f", [(4, 1), (3, 2), (1, -1)])
def test_rejects_n_not_2f_plus_1(n, f):
    with pytest.raises(ScheduleError):
        ScheduleParams(n=n, f=f, r=2.0, kind=Kind.PROPORTIONAL)


@pytest.mark.parametrize("r", [1.0, 0.5, -3.0, math.inf, math.nan])
def test_rejects_bad_r(r):
    with pytest.raises(ScheduleError):
        ScheduleParams.proportional(3, r)


def test_generalized_parameter_box():
    r = 4.0
    with pytest.raises(ScheduleError):
        ScheduleParams.from_s(3, r, -0.1, 1.0)
    with pytest.raises(ScheduleError):
        ScheduleParams.from_s(3, r, r + 1.5, r)
    with pytest.raises(ScheduleError):
        ScheduleParams.from_s(3, r, 3.0, 1.5)  # a below s-1
    with pytest.raises(ScheduleError):
        ScheduleParams.from_s(3, r, 0.5, r + 0.1)
    ScheduleParams.from_s(3, r, 3.0, 2.0)


def test_proportional_forces_q_and_a():
    p = ScheduleParams(n=3, f=1, r=3.0, q=99.0, a=7.0, kind="proportional")
    assert p.q == pytest.approx(1.5) and p.a == 1.0 and p.s == pytest.approx(0.0, abs=1e-15)


def test_dict_round_trip_and_q_s_exclusive():
    p = ScheduleParams(n=5, f=2, r=3.5, q=1.6, a=1.2)
    assert ScheduleParams.from_dict(p.to_dict()) == p
    doc = {"n": 5, "r": 3.5, "s": p.s, "a": 1.2}
    assert ScheduleParams.from_dict(doc).q == pytest.approx(1.6, rel=1e-14)
    with pytest.raises(ScheduleError):
        ScheduleParams.from_dict({"n": 5, "r": 3.5, "q": 1.6, "s": 0.4, "a": 1.0})
    with pytest.raises(ScheduleError):
        ScheduleParams.from_dict({"n": 5, "r": 3.5, "a": 1.0})


def test_s_for_three_agent_published_point(p31_rounded):
    # s and d^(2) recomputed from the rounded (r, q, a).
    assert p31_rounded.s == pytest.approx(2.027507469, abs=1e-8)
    d2 = turning_point(p31_rounded, TurningPointRef(0, 0, 2))
    assert d2 == pytest.approx(p31_rounded.s - p31_rounded.a, rel=1e-15)
    assert d2 == pytest.approx(0.327950469, abs=1e-8)


# ------------------------------------------------------------ turning points

def test_turning_point_examples():
    assert turning_point(P25, TurningPointRef(0, 0)) == 1.0
    assert turning_point(P25, TurningPointRef(1, 1)) == pytest.approx(-(2 ** 0.4) * 2, rel=1e-15)
    assert turning_point(P25, TurningPointRef(1, 1)) == pytest.approx(-2.6390158, abs=1e-7)


def test_sub_index_rules():
    with pytest.raises(ScheduleError):
        turning_point(P25, TurningPointRef(0, 0, 1))
    p = ScheduleParams(n=3, f=1, r=4.0, q=1.5, a=1.0)
    with pytest.raises(ScheduleError):
        turning_point(p, TurningPointRef(0, 0, 3))


def test_range_error_on_overflow():
    with pytest.raises(RangeError):
        turning_point(P25, TurningPointRef(0, 5000))
    with pytest.raises(RangeError):
        turning_point(P25, TurningPointRef(0, -5000))


@given(any_params, st.integers(-30, 30), st.integers(-6, 6), st.integers(-9, 9), st.integers(-3, 3))
def test_shift_identities(params, i, j, k, m):
    base = turning_point(params, TurningPointRef(i, j))
    moved = turning_point(params, TurningPointRef(i + k, j))
    assert rel(moved, scale(params, 2 * k / params.n) * base) <= 1e-12
    assert rel(turning_point(params, TurningPointRef(i, j + m)), (-params.r) ** m * base) <= 1e-12


@given(any_params, st.integers(-30, 30), st.integers(-6, 6), st.integers(-4, 4))
def test_label_reduction_is_exact(params, i, j, c):
    lhs = turning_point(params, TurningPointRef(i + c * params.n, j))
    assert lhs == turning_point(params, TurningPointRef(i, j + 2 * c))


@given(generalized_params(), st.integers(0, 8), st.integers(-3, 3))
def test_sub_points_lie_between_consecutive_turns(params, i, j):
    d = turning_point(params, TurningPointRef(i, j))
    nxt = turning_point(params, TurningPointRef(i, j + 1))
    lo, hi = sorted((d, nxt))
    tol = 1e-12 * abs(nxt)
    for l in (1, 2):
        v = turning_point(params, TurningPointRef(i, j, l))
        assert lo - tol <= v <= hi + tol


# ------------------------------------------------------------ locate

def test_locate_examples():
    eps = 1e-12
    loc = locate(P25, 1 + eps)
    assert (loc.i, loc.j) == (0, 0) and loc.z == pytest.approx(1 + eps, abs=1e-15)
    loc = locate(P25, 2 ** 0.4)
    assert (loc.i, loc.j) == (0, 0) and loc.z == pytest.approx(2 ** 0.4, rel=1e-15)
    loc = locate(P25, -3.0)
    assert loc.j % 2 == 1
    assert loc.z * abs(turning_point(P25, TurningPointRef(loc.i, loc.j))) == pytest.approx(3.0, rel=1e-14)


def test_locate_rejects_origin():
    with pytest.raises(ScheduleError):
        locate(P25, 0.0)


@given(any_params, st.floats(min_value=-1e6, max_value=1e6).filter(lambda v: abs(v) > 1e-6))
def test_locate_reconstructs(params, x):
    width = scale(params, 2 / params.n)
    for loc, ok in ((locate(params, x), lambda z: 1 < z <= width),
                    (locate_beyond(params, x), lambda z: 1 <= z < width)):
        assert 0 <= loc.i < params.n
        assert ok(loc.z)
        assert rel(loc.z * turning_point(params, TurningPointRef(loc.i, loc.j)), x) <= 1e-12


def test_locate_unique_by_scan():
    x = -3.0
    width = scale(P25, 2 / 5)
    hits = []
    for i in range(5):
        for j in range(-6, 7):
            d = turning_point(P25, TurningPointRef(i, j))
            z = x / d
            if 1 < z <= width:
                hits.append((i, j))
    loc = locate(P25, x)
    assert hits == [(loc.i, loc.j)]


# ------------------------------------------------------------ positions

def test_position_examples(p31_rounded):
    assert position_at(P25, 0, 3.0) == pytest.approx(1.0, rel=1e-14)
    p = p31_rounded
    t1 = 2 * p.q + p.a
    assert t1 == pytest.approx(4.737455, abs=1e-6)
    assert position_at(p, 0, t1) == pytest.approx(-1.699557, rel=1e-12)


def test_positions_reject_nonpositive_time():
    with pytest.raises(ScheduleError):
        position_at(P25, 0, 0.0)
    with pytest.raises(ScheduleError):
        positions(P25, [0, 1], [-1.0, 1.0])


@given(any_params, st.integers(0, 8), st.floats(min_value=0.01, max_value=500.0),
       st.floats(min_value=1e-6, max_value=5.0))
def test_unit_speed(params, agent, t, dt):
    agent %= params.n
    a = position_at(params, agent, t)
    b = position_at(params, agent, t + dt)
    assert abs(b - a) <= dt * (1 + 1e-9) + 1e-12 * t


@given(any_params, st.integers(0, 8), st.integers(-3, 3))
def test_positions_hit_turning_points_on_time(params, agent, j):
    agent %= params.n
    d = abs(turning_point(params, TurningPointRef(agent, j)))
    q, r, a = params.q, params.r, params.a
    factors = [2 * q - 1]
    if params.generalized:
        factors += [2 * q + a, q * (r + 1) - r + a]
    for l, fac in enumerate(factors):
        want = turning_point(params, TurningPointRef(agent, j, l))
        assert abs(position_at(params, agent, fac * d) - want) <= 1e-12 * fac * d


def test_zero_length_leg_when_s_zero():
    p = ScheduleParams.from_s(3, 3.0, 0.0, 1.5)
    assert leg_fractions(p)[1] == pytest.approx(0.0, abs=1e-15)
    d1 = turning_point(p, TurningPointRef(0, 0, 1))
    d2 = turning_point(p, TurningPointRef(0, 0, 2))
    assert d1 == pytest.approx(d2, abs=1e-15)
    ts = np.linspace(0.5, 40, 500)
    prop = ScheduleParams.proportional(3, 3.0)
    assert np.allclose(positions(p, 0, ts), positions(prop, 0, ts), rtol=0, atol=1e-12 * 40)


@given(any_params, st.integers(-12, 12), st.integers(-5, 5))
def test_locate_exact_turning_points(params, i, j):
    x = turning_point(params, TurningPointRef(i, j))
    width = scale(params, 2 / params.n)
    loc = locate(params, x)
    assert loc.z == pytest.approx(width, rel=1e-14)
    beyond = locate_beyond(params, x)
    assert beyond.z == pytest.approx(1.0, abs=1e-14) or beyond.z == pytest.approx(width, rel=1e-14)
