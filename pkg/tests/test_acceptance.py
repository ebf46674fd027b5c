"""Acceptance criteria 1 to 9.

Each test records one PASS/FAIL line, printed in the ``acceptance`` section of
the pytest summary, and then asserts.
"""

import math
import random

import pytest

from conftest import ACCEPTANCE_LINES
from linevac import closed_form as cf
from linevac.adversary import competitive_ratio, grid_check_turning_point_supremum
from linevac.byzantine import Accounting, byz_competitive_ratio, case2_corner, default_params
from linevac.optimizer import optimize_31, optimize_f
from linevac.schedule import ScheduleParams
from linevac.verify import identity_checks, oracle_checks

BEST = {(3, 1): 7.437011, (5, 2): 7.253767, (7, 3): 7.253767, (9, 4): 7.147026}
# (n, f) -> (r, u, q, s, a, R)
TABLE = {
    (5, 2): (3.58545, 5, 1.45340, 0.17225, 1.67348, 7.25377),
    (7, 3): (5.97532, 6, 1.45340, 1.25582, 1.67348, 7.25377),
    (9, 4): (4.21585, 8, 1.38190, 0.22813, 2.84964, 7.14703),
    (11, 5): (3.22306, 10, 1.44983, 0.0, 2.32740, 7.10648),
}
CERT_TOL = 1e-5
PARAM_TOL = 1e-3
RATIO_TOL = 1e-4


def record(k: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def optima():
    return {(n, f): optimize_f(n, f) for (n, f) in TABLE}


def test_criterion_1_best_ratios(optima):
    got = {(3, 1): optimize_31().certified}
    got.update({key: optima[key].certified for key in BEST if key != (3, 1)})
    errs = {key: abs(got[key] - want) for key, want in BEST.items()}
    detail = ", ".join(f"{key}={got[key]:.7f}" for key in BEST)
    record(1, max(errs.values()) <= CERT_TOL, f"certified ratios {detail} (tol {CERT_TOL:g})")


def test_criterion_2_parameter_table(optima):
    bad = []
    for key, (r, u, q, s, a, ratio) in TABLE.items():
        res = optima[key]
        if res.u != u:
            bad.append(f"{key} u={res.u}")
        for name, g, w in (("r", res.r_star, r), ("q", res.q, q), ("s", res.s, s), ("a", res.a, a)):
            if abs(g - w) > PARAM_TOL:
                bad.append(f"{key} {name}={g:.6f}")
        if abs(res.ratio - ratio) > RATIO_TOL:
            bad.append(f"{key} R={res.ratio:.6f}")
    a, b = optima[(5, 2)], optima[(7, 3)]
    root_gap = abs(a.r_star ** (1 / 5) - b.r_star ** (1 / 7))
    if abs(a.ratio - b.ratio) > RATIO_TOL or root_gap > 1e-6:
        bad.append(f"(5,2)/(7,3) coincidence gap {root_gap:.2e}")
    # Scenario B: the closed form is only an upper bound; report its gap to the
    # exact worst just-beyond-d^(1) value wherever the B branch applies.
    gaps = []
    for (n, f), res in optima.items():
        if res.q <= cf.a_only_threshold(res.r_star, n):
            continue
        cert = competitive_ratio(ScheduleParams(n=n, f=f, r=res.r_star, q=res.q, a=res.a))
        exact_b = max(v for t, v in cert.scan if t.ref.l == 1)
        gaps.append(f"{(n, f)} R_B gap {cf.scenario_ratios_f(res.r_star, res.q, n)[1] - exact_b:.1e}")
    summary = f"4 rows match, r^(1/n) gap {root_gap:.2e}; " + ", ".join(gaps)
    record(2, not bad, "; ".join(bad) or summary)


def test_criterion_3_sandwich():
    rng = random.Random(3)
    worst = math.inf
    for _ in range(50):
        n = rng.randrange(3, 42, 2)
        r = rng.uniform(1.2, 15.0)
        ratio = competitive_ratio(ScheduleParams.proportional(n, r)).ratio
        lo, hi = cf.prop_bounds(r, n)
        worst = min(worst, ratio - lo, hi - ratio)
    record(3, worst >= -1e-9, f"50 draws, minimum slack {worst:.3e}")


def test_criterion_4_asymptotics():
    r = cf.R_STAR_ASYMPTOTIC
    gap = abs(cf.asymptotic_cr(r) - cf.CR_ASYMPTOTIC)
    ratio = competitive_ratio(ScheduleParams.proportional(201, r)).ratio
    lo, hi = cf.prop_bounds(r, 201)
    ok = gap <= 1e-12 and lo - 1e-9 <= ratio <= hi + 1e-9 and hi - lo < 0.05
    record(4, ok, f"limit gap {gap:.1e}; n=201 ratio {ratio:.6f} in [{lo:.6f}, {hi:.6f}]")


def test_criterion_5_three_agents():
    rng = random.Random(5)
    worst = 0.0
    for _ in range(100):
        r = rng.uniform(2 * math.sqrt(2) + 1e-3, 40.0)
        a, q = cf.params_31(r)
        ra, rb = cf.ra_31(a, q), cf.rb_31(r, a, q)
        worst = max(worst, abs(ra - rb), abs(cf.ratio_31(r) - ra))
    a, q = cf.params_31(6.833921)
    cert = competitive_ratio(ScheduleParams(n=3, f=1, r=6.833921, q=q, a=a))
    subs = {t.ref.l for t in cert.attaining(1e-9)}
    ok = worst <= 1e-10 and abs(cert.ratio - BEST[(3, 1)]) <= CERT_TOL and {0, 1} <= subs
    record(5, ok, f"100 draws worst {worst:.1e}; certified {cert.ratio:.7f}, "
                  f"scenario A {'attains' if 0 in subs else 'misses'}, "
                  f"scenario B {'attains' if 1 in subs else 'misses'}")


def test_criterion_6_oracle():
    checks = list(oracle_checks(seed=6, draws=200))
    record(6, all(c.ok for c in checks), "; ".join(f"{c.name}: {c.detail}" for c in checks))


def test_criterion_7_interior_targets():
    a, q = cf.params_31(6.833921)
    q9 = cf.q_hat(4.21585, 8, 9)
    schedules = [
        ScheduleParams(n=3, f=1, r=6.833921, q=q, a=a),
        ScheduleParams(n=9, f=4, r=4.21585, q=q9, a=cf.a_hat(4.21585, q9, 9)),
        ScheduleParams.proportional(5, 2.0),
        ScheduleParams.proportional(7, 4.5),
    ]
    reports = [grid_check_turning_point_supremum(p, 1000, seed=7) for p in schedules]
    worst = max(rep.max_slack for rep in reports)
    record(7, all(rep.ok for rep in reports),
           f"{len(schedules)} schedules x 1000 targets, largest excess {worst:.3e}")


def test_criterion_8_byzantine():
    params = default_params()
    cert = byz_competitive_ratio(params, 120, 120, Accounting.FIRST_RELIABLE)
    corner = case2_corner(params).ratio
    public = byz_competitive_ratio(params, 120, 120, Accounting.PUBLIC)
    ok = cert.ratio <= BEST[(3, 1)] + 1e-6 and abs(corner - 2.897498) <= 1e-5
    # Finding: if completion waits for the latest public announcement, lies
    # push the maximum far past the crash bound.
    record(8, ok, f"max {cert.ratio:.7f} over {cert.scenarios_examined} scenarios, "
                  f"case-2 corner {corner:.7f}; public-announcement accounting gives {public.ratio:.4f}")


def test_criterion_9_invariants():
    checks = list(identity_checks(seed=9, draws=1000))
    record(9, all(c.ok for c in checks), "; ".join(f"{c.name}: {c.detail}" for c in checks))
