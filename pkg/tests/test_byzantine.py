import math

import numpy as np
import pytest

from linevac import closed_form as cf
from linevac.byzantine import (
    Accounting,
    ByzScenario,
    Case,
    Path,
    byz_competitive_ratio,
    case1_corner,
    case2_corner,
    default_params,
    evaluate,
    lie_profile,
    respond,
    schedule_path,
)
from linevac.kinematics import turn_time
from linevac.schedule import ScheduleError, ScheduleParams, TurningPointRef, scale, turning_point

ALPHA = 7.437011


@pytest.fixture(scope="module")
def params():
    return default_params()


@pytest.fixture(scope="module")
def edge(params):
    """``d^(1)_{2,-1}``: the case boundary inside ``I_{0,0}``."""
    return turning_point(params, TurningPointRef(2, -1, 1))


# ------------------------------------------------------------ paths

def test_path_first_visits_against_dense_sampling():
    p = Path(np.array([0.0, 1.0, 4.0, 6.0]), np.array([0.0, 1.0, -2.0, 0.0]))
    ys = np.array([0.5, 1.0, -1.0, -2.0, 1.5, -3.0])
    got = p.first_visits(ys)
    ts = np.linspace(0, 6, 600001)
    xs = np.interp(ts, p.times, p.coords)
    for y, g in zip(ys, got):
        hit = np.nonzero(np.abs(xs - y) <= 1e-5)[0]
        if hit.size == 0:
            assert math.isinf(g)
        else:
            assert g == pytest.approx(ts[hit[0]], abs=1e-4)


def test_path_redirect_and_park():
    p = Path(np.array([0.0, 10.0]), np.array([0.0, 10.0]))
    q = p.redirect(3.0, (1.0,), 0)
    assert q.at(3.0) == pytest.approx(3.0)
    assert q.at(5.0) == pytest.approx(1.0)
    assert q.at(1e6) == pytest.approx(1.0)
    r = p.redirect(3.0, (), -1)
    assert r.at(13.0) == pytest.approx(-7.0)


def test_schedule_path_matches_turn_times(params):
    path = schedule_path(params, 1)
    for l in (0, 1, 2):
        ref = TurningPointRef(1, 0, l)
        assert path.at(turn_time(params, ref)) == pytest.approx(turning_point(params, ref), rel=1e-12)


# ------------------------------------------------------------ response plans

def test_protocol_needs_three_generalized_agents():
    with pytest.raises(ScheduleError):
        respond(ScheduleParams.proportional(3, 2.0), 0, 1.2)


def test_case_boundary_is_near(params, edge):
    assert edge == pytest.approx(params.a * scale(params, 1 / 3), rel=1e-14)
    assert respond(params, 1, edge).case is Case.NEAR
    assert respond(params, 1, edge * (1 + 1e-9)).case is Case.FAR


def test_far_case_detour(params):
    x = turning_point(params, TurningPointRef(1, 0))
    plan = respond(params, 1, x)
    assert plan.case is Case.FAR
    waypoints, direction = plan.legs[0]
    assert waypoints[0] == pytest.approx(turning_point(params, TurningPointRef(0, 1)))
    assert waypoints[-1] == pytest.approx(x)
    assert direction == 1
    for m in (1, 2):
        assert plan.legs[m][1] == -1


def test_last_visitor_announcing_is_exposed(params):
    x = 1.3
    t = schedule_path(params, 0).first_visit(x)
    plan = respond(params, 0, x, t)
    assert plan.case is Case.EXPOSED
    dirs = sorted(plan.legs[m][1] for m in (1, 2))
    assert dirs == [-1, 1]


def test_false_position_or_origin_is_exposed(params):
    assert respond(params, 1, 0.0, 0.0).case is Case.EXPOSED
    # Agent 2 is nowhere near x at agent 1's visit time.
    t = schedule_path(params, 1).first_visit(1.3)
    assert respond(params, 2, 1.3, t).case is Case.EXPOSED


# ------------------------------------------------------------ corners

def test_case2_corner(params):
    out = case2_corner(params)
    assert out.case is Case.FAR
    assert out.ratio == pytest.approx(2.897498, abs=1e-5)
    # Claim at d_{1,0}; the target hides just past d_{0,1} on the other side.
    assert out.scenario.lie == pytest.approx(turning_point(params, TurningPointRef(1, 0)))
    far = turning_point(params, TurningPointRef(0, 1))
    assert abs(out.scenario.true_target) > abs(far)
    assert out.scenario.true_target == pytest.approx(far, rel=1e-8)


def test_case1_corner_liar_next(params):
    out = case1_corner(params, liar=1)
    assert out.case is Case.NEAR
    a, q = cf.params_31(params.r)
    assert out.ratio == pytest.approx(cf.ra_31(a, q), abs=1e-5)
    assert out.ratio == pytest.approx(ALPHA, abs=1e-5)


def test_case1_corner_liar_second_cannot_occur(params):
    # Agent 0 has already passed d^(1)_{0,0} again by the time agent 2 first
    # reaches the claimed point, so that target was seen before the claim.
    assert case1_corner(params, liar=2) is None


# ------------------------------------------------------------ accounting

def test_no_lie_first_reliable_stops_at_announcement(params):
    out = evaluate(params, ByzScenario(1, 1 + 1e-10, None, suppressed=True))
    assert out.completion == pytest.approx(out.t_announce, rel=1e-12)
    assert out.ratio == pytest.approx(turn_time(params, TurningPointRef(0, 0, 2)), rel=1e-8)


def test_no_lie_public_matches_crash_bound(params):
    out = evaluate(params, ByzScenario(1, 1 + 1e-10, None, suppressed=True), Accounting.PUBLIC)
    assert out.ratio == pytest.approx(ALPHA, abs=1e-5)


def test_invalid_lie_is_rejected(params):
    # Agent 2 reaches d_{1,0} first, so agent 1 cannot lie about a point
    # that agent 2 has already visited as the true target.
    x_a = turning_point(params, TurningPointRef(1, 0))
    assert evaluate(params, ByzScenario(1, x_a, lie=x_a)) is None


# ------------------------------------------------------------ liar ordering

def test_second_liar_no_worse_pointwise_far_case(params, edge):
    width = scale(params, 2 / 3)
    lies = np.linspace(edge * (1 + 1e-9), width, 25)
    one = lie_profile(params, 1, lies, 100)
    two = lie_profile(params, 2, lies, 100)
    assert np.all(two <= one + 1e-9)


def test_liars_share_the_near_case_maximum(params, edge):
    lies = np.concatenate([np.linspace(1 + 1e-6, edge, 40), [edge]])
    one = lie_profile(params, 1, lies, 100)
    two = lie_profile(params, 2, lies, 100)
    assert one.max() == pytest.approx(ALPHA, abs=1e-5)
    assert two.max() == pytest.approx(one.max(), abs=1e-6)


# ------------------------------------------------------------ full scan

def test_grid_minimum_size(params):
    with pytest.raises(ScheduleError):
        byz_competitive_ratio(params, 99, 100)


def test_scan_worker_invariant(params):
    one = byz_competitive_ratio(params, 100, 100, jobs=1)
    many = byz_competitive_ratio(params, 100, 100, jobs=4)
    assert one.ratio == many.ratio
    assert one.to_text() == many.to_text()
    assert one.ratio <= ALPHA + 1e-6
