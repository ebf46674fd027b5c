"""Self-check suites shared by the ``verify`` command and the test-suite.

Each suite yields :class:`Check` records; a suite passes when every record
does.  Randomized suites take an explicit seed.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from . import closed_form as cf
from .adversary import TargetSpec, competitive_ratio, evacuation_time, outcome_for
from .kinematics import UncoveredIntersection, cone_slope, intersection
from .optimizer import optimize_31, optimize_f, optimize_proportional
from .schedule import ScheduleParams, TurningPointRef, position_at, positions, scale, turning_point
from .sim import SimConfig, run, worst_case

# Reference optima: (n, f) -> (r, u, q, s, a, R, R_proportional)
OPTIMA = {
    (5, 2): (3.58545, 5, 1.45340, 0.17225, 1.67348, 7.25377, 7.37001),
    (7, 3): (5.97532, 6, 1.45340, 1.25582, 1.67348, 7.25377, 7.40756),
    (9, 4): (4.21585, 8, 1.38190, 0.22813, 2.84964, 7.14703, 7.23077),
    (11, 5): (3.22306, 10, 1.44983, 0.0, 2.32740, 7.10648, 7.10648),
}
BEST_RATIO = {(3, 1): 7.437011, (5, 2): 7.253767, (7, 3): 7.253767, (9, 4): 7.147026}

PARAM_TOL = 1e-3
RATIO_TOL = 1e-4
CERT_TOL = 1e-5
ORACLE_TOL = 1e-6
IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}" + (f"  {self.detail}" if self.detail else "")


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


# ---------------------------------------------------------------- tables

def table_checks(jobs: int = 1) -> Iterator[Check]:
    res31 = optimize_31()
    yield Check("best ratio (3,1)", _close(res31.certified, BEST_RATIO[(3, 1)], CERT_TOL),
                f"certified={res31.certified:.9f} r={res31.r_star:.6f}")
    found = {}
    for (n, f), row in OPTIMA.items():
        res = optimize_f(n, f, jobs=jobs)
        found[(n, f)] = res
        r, u, q, s, a, ratio, ratio_p = row
        if (n, f) in BEST_RATIO:
            yield Check(f"best ratio ({n},{f})", _close(res.certified, BEST_RATIO[(n, f)], CERT_TOL),
                        f"certified={res.certified:.9f}")
        got = (res.r_star, res.u, res.q, res.s, res.a)
        ok = all(_close(g, w, PARAM_TOL) for g, w in zip(got, (r, u, q, s, a)))
        yield Check(f"optimum ({n},{f}) params", ok,
                    "r={:.6f} u={} q={:.6f} s={:.6f} a={:.6f}".format(*got))
        yield Check(f"optimum ({n},{f}) ratio", _close(res.ratio, ratio, RATIO_TOL), f"{res.ratio:.7f}")
        prop = optimize_proportional(n)
        yield Check(f"optimum ({n},{f}) proportional", _close(prop.ratio, ratio_p, RATIO_TOL),
                    f"{prop.ratio:.7f} at r={prop.r_star:.4f}")
    a, b = found[(5, 2)], found[(7, 3)]
    r1 = a.r_star ** (1 / 5)
    r2 = b.r_star ** (1 / 7)
    yield Check("optimum (5,2)/(7,3) coincidence",
                _close(a.ratio, b.ratio, RATIO_TOL) and _close(r1, r2, 1e-6),
                f"r^(1/n): {r1:.9f} vs {r2:.9f}")


# ---------------------------------------------------------------- draws

def random_generalized(rng: random.Random, n: int | None = None) -> ScheduleParams:
    """Any admissible generalized schedule (not necessarily in the feasible set)."""
    n = n or rng.choice((3, 5, 7, 9))
    r = rng.uniform(1.2, 12.0)
    s = rng.uniform(0.0, r + 1.0)
    a = rng.uniform(max(s - 1.0, 0.0), r)
    return ScheduleParams.from_s(n, r, s, a)


def random_proportional(rng: random.Random, n: int | None = None) -> ScheduleParams:
    n = n or rng.choice((3, 5, 7, 9))
    return ScheduleParams.proportional(n, rng.uniform(1.2, 12.0))


def random_feasible(rng: random.Random) -> ScheduleParams:
    """A construction point ``(r, u)`` inside the feasible set, with its ``q``/``a``."""
    while True:
        n = rng.choice((5, 7, 9, 11, 13))
        f = (n - 1) // 2
        u = rng.randint(f + 3, n)
        r = rng.uniform(1.5, 20.0)
        rep = cf.regime(r, u, n)
        if rep.in_P:
            return ScheduleParams(n=n, f=f, r=r, q=rep.q, a=cf.a_hat(r, rep.q, n))


def _random_target(rng: random.Random, params: ScheduleParams) -> float:
    i = rng.randrange(params.n)
    j = rng.randint(-2, 3)
    width = scale(params, 2.0 / params.n)
    z = 1.0 + (width - 1.0) * rng.uniform(1e-4, 1.0 - 1e-4)
    return z * turning_point(params, TurningPointRef(i, j))


# ---------------------------------------------------------------- oracle

def oracle_family(family: str, draws: int, seed: int) -> tuple[float, int]:
    """Worst relative gap between closed-form and simulated evacuation times."""
    rng = random.Random(seed)
    make = random_generalized if family == "generalized" else random_proportional
    worst = 0.0
    for _ in range(draws):
        params = make(rng)
        x = _random_target(rng, params)
        size = rng.randint(0, params.f)
        faults = tuple(sorted(rng.sample(range(params.n), size)))
        closed = outcome_for(params, TargetSpec.exact(x), faults).E
        sim = run(SimConfig(params, x, frozenset(faults))).E
        worst = max(worst, abs(closed - sim) / closed)
        # Adversarial maximum over every admissible fault set.
        adv = evacuation_time(params, TargetSpec.exact(x)).E
        sim_adv = worst_case(params, x).E
        worst = max(worst, abs(adv - sim_adv) / adv)
    return worst, draws


def oracle_checks(seed: int = 0, draws: int = 200) -> Iterator[Check]:
    for family in ("proportional", "generalized"):
        worst, count = oracle_family(family, draws, seed)
        yield Check(f"oracle {family}", worst <= ORACLE_TOL, f"{count} draws, worst rel gap {worst:.3e}")


# ---------------------------------------------------------------- identities

def shift_identity_gap(params: ScheduleParams, rng: random.Random) -> float:
    i, j = rng.randint(-20, 20), rng.randint(-6, 6)
    k = rng.randint(-params.n, params.n)
    base = turning_point(params, TurningPointRef(i, j))
    g1 = abs(turning_point(params, TurningPointRef(i + k, j)) / (scale(params, 2.0 * k / params.n) * base) - 1.0)
    m = rng.randint(-3, 3)
    g2 = abs(turning_point(params, TurningPointRef(i, j + m)) / ((-params.r) ** m * base) - 1.0)
    # Label reduction must hit the same coordinate exactly.
    c = rng.randint(-3, 3)
    lhs = turning_point(params, TurningPointRef(i + c * params.n, j))
    rhs = turning_point(params, TurningPointRef(i, j + 2 * c))
    g3 = 0.0 if lhs == rhs else math.inf
    return max(g1, g2, g3)


def qs_identity_gap(rng: random.Random) -> float:
    r = rng.uniform(1.01, 30.0)
    s = rng.uniform(0.0, r + 1.0)
    q = cf.q_from_s(r, s)
    return max(
        _rel(q, (r + s) / (r - 1.0)),
        _rel(q - 1.0, (1.0 + s) / (r - 1.0)),
        _rel(q + s, r * (q - 1.0)),
        _rel(cf.s_from_q(r, q), s),
    )


def degeneration_gap(rng: random.Random) -> float:
    n = rng.choice((3, 5, 7, 9))
    r = rng.uniform(1.2, 12.0)
    gen = ScheduleParams.from_s(n, r, 0.0, rng.uniform(0.0, r))
    prop = ScheduleParams.proportional(n, r)
    agents = np.arange(n)
    gap = 0.0
    for _ in range(3):
        t = math.exp(rng.uniform(-2.0, 5.0))
        a, b = positions(gen, agents, t), positions(prop, agents, t)
        gap = max(gap, float(np.max(np.abs(a - b))) / t)
    x = _random_target(rng, prop)
    e1 = evacuation_time(gen, TargetSpec.exact(x)).E
    e2 = evacuation_time(prop, TargetSpec.exact(x)).E
    return max(gap, _rel(e1, e2) / max(1.0, 1.0 / abs(x)))


def cone_gap(params: ScheduleParams, rng: random.Random) -> float:
    """Largest relative miss of the cone law ``tau = beta |rho|`` for one draw."""
    i, j = rng.randrange(params.n), rng.randint(-3, 3)
    worst = 0.0
    for k in range(params.f + 1):
        pt = intersection(params, i, j, k)
        cone = cone_slope(params, k, pt.variant)
        if cone.infinite:
            worst = max(worst, abs(pt.rho) / pt.tau)
            continue
        worst = max(worst, abs(pt.tau - cone.beta * abs(pt.rho)) / pt.tau)
        # Both trajectories pass through the point.
        for m in (i, i + k):
            miss = abs(position_at(params, m % params.n, pt.tau) - pt.rho) / pt.tau
            if miss > 1e-9:
                return math.inf
    return worst


def identity_checks(seed: int = 0, draws: int = 1000) -> Iterator[Check]:
    rng = random.Random(seed)
    families: list[tuple[str, Callable[[], float]]] = [
        ("shift identities", lambda: shift_identity_gap(
            (random_generalized if rng.random() < 0.5 else random_proportional)(rng), rng)),
        ("q-s identity triple", lambda: qs_identity_gap(rng)),
        ("s=0 degeneration", lambda: degeneration_gap(rng)),
        ("cone membership proportional", lambda: cone_gap(random_proportional(rng), rng)),
        ("cone membership generalized", lambda: cone_gap(random_feasible(rng), rng)),
    ]
    for name, fn in families:
        worst, uncovered = 0.0, 0
        for _ in range(draws):
            try:
                worst = max(worst, fn())
            except UncoveredIntersection:
                uncovered += 1
        detail = f"{draws} draws, worst {worst:.3e}"
        if uncovered:
            detail += f", {uncovered} uncovered"
        yield Check(name, worst <= IDENTITY_TOL and not uncovered, detail)


# ---------------------------------------------------------------- byzantine

def byzantine_checks(jobs: int = 1, grid: int = 120) -> Iterator[Check]:
    from .byzantine import Accounting, byz_competitive_ratio, case2_corner, default_params

    params = default_params()
    cert = byz_competitive_ratio(params, grid, grid, Accounting.FIRST_RELIABLE, jobs=jobs)
    yield Check("byzantine max", cert.ratio <= BEST_RATIO[(3, 1)] + 1e-6,
                f"{cert.ratio:.9f} over {cert.scenarios_examined} scenarios")
    corner = case2_corner(params).ratio
    yield Check("byzantine case-2 corner", _close(corner, 2.897498, 1e-5), f"{corner:.9f}")


def crash_31_checks() -> Iterator[Check]:
    r = 6.833921
    a, q = cf.params_31(r)
    cert = competitive_ratio(ScheduleParams(n=3, f=1, r=r, q=q, a=a))
    witnesses = {(t.ref.i, t.ref.l) for t in cert.attaining(1e-9)}
    yield Check("(3,1) certificate", _close(cert.ratio, BEST_RATIO[(3, 1)], CERT_TOL) and cert.stabilized,
                f"{cert.ratio:.9f}")
    yield Check("(3,1) both scenarios attain", any(l == 0 for _, l in witnesses) and any(l == 1 for _, l in witnesses),
                f"attaining (i,l): {sorted(witnesses)}")


SUITES = {
    "tables": lambda seed, jobs: itertools.chain(table_checks(jobs), crash_31_checks()),
    "oracle": lambda seed, jobs: oracle_checks(seed),
    "identities": lambda seed, jobs: identity_checks(seed),
    "byzantine": lambda seed, jobs: byzantine_checks(jobs),
}


def run_suite(name: str, seed: int = 0, jobs: int = 1) -> Iterator[Check]:
    names = list(SUITES) if name == "all" else [name]
    for n in names:
        yield from SUITES[n](seed, jobs)
