"""Search by three agents when one of them may lie.

Agents follow the three-agent generalized schedule until the first
announcement.  Say it claims ``x`` in ``I_{i,j}``; first visits to ``x`` come
in the order ``i+1, i+2, i``.  The response depends on where ``x`` lies
relative to ``d^(1)_{i+2,j-1}`` (mirrored for ``x < 0``):

* near case, ``x <= d^(1)_{i+2,j-1}``: every agent that has not yet seen ``x``
  walks there.  Agents ``i+1`` and ``i+2`` then sweep towards the origin side
  and beyond, while agent ``i`` keeps going outward;
* far case: agent ``i`` first finishes its trip to ``d_{i,j+1}`` (if still
  ahead) and then does the same.  The others check ``x`` and sweep back;
* if everybody else already passed ``x`` the announcer is exposed and the two
  remaining agents sweep in opposite directions.

Only the first announcement changes the plan.  The liar may lie once, at
the first time its own path reaches the claimed point, and stays silent
otherwise.

Two completion rules are offered.  ``"first-reliable"`` ends the search the
first time a reliable agent stands on the target.  That agent has seen the
target and knows it is honest, and this is the rule the worst-case
arithmetic of the construction uses.  ``"public"`` ends it once the shared
record of announcements and silent visits pins down the target for every
hypothesis about who is lying.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .closed_form import params_31
from .kinematics import turn_time
from .schedule import ScheduleError, ScheduleParams, TurningPointRef, locate, scale, turning_point

FAR = 1e7
J_LO, J_HI = -40, 8
CORNER_EPS = 1e-10


class Accounting(str, enum.Enum):
    FIRST_RELIABLE = "first-reliable"
    PUBLIC = "public"


class Case(str, enum.Enum):
    NEAR = "case1"
    FAR = "case2"
    EXPOSED = "exposed"


@dataclass(frozen=True)
class ByzScenario:
    byz_agent: int
    true_target: float
    lie: float | None = None
    suppressed: bool = True


@dataclass(frozen=True)
class ResponsePlan:
    case: Case
    announcer: int
    x: float
    t: float
    # agent -> (waypoints..., final direction in {-1, 0, +1})
    legs: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ByzOutcome:
    scenario: ByzScenario
    case: Case | None
    announcer: int
    t_announce: float
    completion: float
    ratio: float


@dataclass(frozen=True)
class ByzCertificate:
    ratio: float
    witness: ByzOutcome
    scenarios_examined: int
    accounting: Accounting
    params: ScheduleParams
    category_maxima: dict

    def to_text(self) -> str:
        w, s = self.witness, self.witness.scenario
        lines = [
            f"ratio: {self.ratio:.12g}",
            f"accounting: {self.accounting.value}",
            f"scenarios_examined: {self.scenarios_examined}",
            "params:",
            f"  n: {self.params.n}",
            f"  r: {self.params.r:.12g}",
            f"  q: {self.params.q:.12g}",
            f"  a: {self.params.a:.12g}",
            "witness:",
            f"  byz_agent: {s.byz_agent}",
            f"  lie: {'-' if s.lie is None else f'{s.lie:.12g}'}",
            f"  true_target: {s.true_target:.12g}",
            f"  suppressed: {'true' if s.suppressed else 'false'}",
            f"  case: {w.case.value if w.case else '-'}",
            f"  announcer: {w.announcer}",
            f"  t_announce: {w.t_announce:.12g}",
            f"  completion: {w.completion:.12g}",
            "category_maxima:",
        ]
        lines += [f"  {k}: {v:.12g}" for k, v in sorted(self.category_maxima.items())]
        return "\n".join(lines) + "\n"


def default_params(r: float = 6.833921) -> ScheduleParams:
    a, q = params_31(r)
    return ScheduleParams(n=3, f=1, r=r, q=q, a=a)


# -- polylines ---------------------------------------------------------------


@dataclass(frozen=True)
class Path:
    times: np.ndarray
    coords: np.ndarray

    def at(self, t: float) -> float:
        return float(np.interp(t, self.times, self.coords))

    def first_visits(self, ys) -> np.ndarray:
        ys = np.atleast_1d(np.asarray(ys, dtype=float))
        out = np.full(ys.shape, math.inf)
        lo = hi = self.coords[0]
        for s in range(len(self.coords) - 1):
            p0, p1, t0 = self.coords[s], self.coords[s + 1], self.times[s]
            if p1 > hi:
                m = (ys > hi) & (ys <= p1)
                out[m] = t0 + (ys[m] - p0)
                hi = p1
            elif p1 < lo:
                m = (ys < lo) & (ys >= p1)
                out[m] = t0 + (p0 - ys[m])
                lo = p1
        return out

    def first_visit(self, y: float) -> float:
        return float(self.first_visits([y])[0])

    def extent(self, t: float) -> tuple[float, float]:
        keep = self.coords[self.times <= t]
        here = self.at(t)
        return float(min(keep.min(), here)), float(max(keep.max(), here))

    def redirect(self, t: float, waypoints, direction: int) -> "Path":
        keep = self.times < t
        times = list(self.times[keep]) + [t]
        coords = list(self.coords[keep]) + [self.at(t)]
        for w in waypoints:
            times.append(times[-1] + abs(w - coords[-1]))
            coords.append(w)
        # Either run off to infinity or park for good.
        end = direction * FAR if direction else coords[-1]
        times.append(times[-1] + (abs(end - coords[-1]) if direction else FAR))
        coords.append(end)
        return Path(np.array(times), np.array(coords))


def schedule_path(params: ScheduleParams, agent: int) -> Path:
    refs = [TurningPointRef(agent, j, l) for j in range(J_LO, J_HI + 1) for l in (0, 1, 2)]
    times = [0.0] + [turn_time(params, ref) for ref in refs]
    coords = [0.0] + [turning_point(params, ref) for ref in refs]
    return Path(np.array(times), np.array(coords))


# -- protocol ----------------------------------------------------------------


def respond(params: ScheduleParams, announcer: int, x: float, t: float | None = None,
            paths: list[Path] | None = None) -> ResponsePlan:
    """Post-announcement plan for a claim at ``x`` by ``announcer`` at time ``t``."""
    if params.n != 3 or not params.generalized:
        raise ScheduleError("the byzantine protocol is defined for three generalized agents")
    paths = paths or [schedule_path(params, m) for m in range(3)]
    if t is None:
        t = paths[announcer].first_visit(x) if x != 0 else 0.0
    others = [m for m in range(3) if m != announcer]
    exposed = x == 0 or abs(paths[announcer].at(t) - x) > 1e-9 * max(1.0, abs(x))
    if not exposed:
        exposed = all(paths[m].first_visit(x) <= t for m in others)
    if exposed:
        here = {m: paths[m].at(t) for m in others}
        low, high = sorted(others, key=lambda m: (here[m], -m))
        legs = {low: ((), -1), high: ((), +1), announcer: ((), 0)}
        return ResponsePlan(Case.EXPOSED, announcer, x, t, legs)
    loc = locate(params, x)
    i = loc.i
    sigma = 1 if x > 0 else -1
    near = loc.z <= params.a * scale(params, 1.0 / 3.0) * (1 + 1e-12)
    legs = {}
    for m in range(3):
        seen = paths[m].first_visit(x) <= t
        check = () if seen else (x,)
        if m == i:
            detour = ()
            if not near:
                ref = TurningPointRef(i, loc.j + 1)
                if t < turn_time(params, ref):
                    detour = (turning_point(params, ref),)
            legs[m] = (detour + check, sigma)
        else:
            legs[m] = (check, -sigma)
    return ResponsePlan(Case.NEAR if near else Case.FAR, announcer, x, t, legs)


def _apply(plan: ResponsePlan, paths: list[Path]) -> list[Path]:
    return [paths[m].redirect(plan.t, *plan.legs[m]) for m in range(3)]


def _completion(
    accounting: Accounting,
    byz: int,
    fv_x: np.ndarray,  # (3, N) first visits of the true target after the response
    fv_a: np.ndarray,  # (3,) first visits of the claimed point (lie scenarios)
    lie: bool,
    t_a: float,
    truthful: np.ndarray,  # (3,) who announces the target on reaching it
) -> np.ndarray:
    reliable = [m for m in range(3) if m != byz]
    if accounting is Accounting.FIRST_RELIABLE:
        return fv_x[reliable].min(axis=0)
    n = fv_x.shape[1]
    cands = np.vstack([fv_x, np.broadcast_to(fv_a[:, None], (3, n)), np.full((1, n), t_a)])
    done = np.full(n, math.inf)
    for row in cands:
        t = row
        ann_x = truthful[:, None] & (fv_x <= t)
        vis_x = fv_x <= t
        if lie:
            ann_a = np.zeros((3, n), dtype=bool)
            ann_a[byz] = t >= t_a
            vis_a = fv_a[:, None] <= t
        ok = np.ones(n, dtype=bool)
        for b in range(3):
            nb = [m for m in range(3) if m != b]
            any_x = ann_x[nb].any(axis=0)
            bad_x = (vis_x[nb] & ~ann_x[nb]).any(axis=0)
            if lie:
                any_a = ann_a[nb].any(axis=0)
                bad_a = (vis_a[nb] & ~ann_a[nb]).any(axis=0)
                # A hypothesis is harmless once it is contradicted or points at x'.
                good = (any_a & any_x) | (any_a & ~any_x & bad_a) | (~any_a & any_x)
            else:
                good = any_x
            ok &= good
        done = np.where(ok & (t < done), t, done)
    return done


@dataclass
class _Context:
    params: ScheduleParams
    paths: list[Path]


def _lie_batch(ctx: _Context, byz: int, x_a: float, targets: np.ndarray, accounting: Accounting):
    paths = ctx.paths
    t_a = paths[byz].first_visit(x_a)
    reliable = [m for m in range(3) if m != byz]
    sched = np.vstack([p.first_visits(targets) for p in paths])
    valid = (sched[reliable].min(axis=0) > t_a) & (targets != x_a)
    plan = respond(ctx.params, byz, x_a, t_a, paths)
    new = _apply(plan, paths)
    # Visits up to the announcement come from the untouched schedule.
    fv_x = np.vstack([p.first_visits(targets) for p in new])
    fv_x = np.where(sched <= t_a, sched, fv_x)
    fv_a = np.array([p.first_visit(x_a) for p in new])
    before = np.array([p.first_visit(x_a) for p in paths])
    fv_a = np.where(before <= t_a, before, fv_a)
    truthful = np.array([m != byz for m in range(3)])
    done = _completion(accounting, byz, fv_x, fv_a, True, t_a, truthful)
    ratios = np.where(valid, done / np.abs(targets), -math.inf)
    return plan, t_a, ratios


def evaluate(params: ScheduleParams, scenario: ByzScenario,
             accounting: Accounting | str = Accounting.FIRST_RELIABLE) -> ByzOutcome | None:
    """Completion of one scenario; ``None`` if the scenario cannot occur."""
    accounting = Accounting(accounting)
    ctx = _Context(params, [schedule_path(params, m) for m in range(3)])
    if scenario.lie is not None:
        plan, t_a, ratios = _lie_batch(ctx, scenario.byz_agent, scenario.lie,
                                       np.array([scenario.true_target]), accounting)
        if not np.isfinite(ratios[0]):
            return None
        return ByzOutcome(scenario, plan.case, plan.announcer, t_a,
                          ratios[0] * abs(scenario.true_target), float(ratios[0]))
    return _honest(ctx, scenario, accounting)


def _honest(ctx: _Context, scenario: ByzScenario, accounting: Accounting) -> ByzOutcome:
    paths, byz, y = ctx.paths, scenario.byz_agent, scenario.true_target
    sched = np.array([p.first_visit(y) for p in paths])
    truthful = np.array([m != byz or not scenario.suppressed for m in range(3)])
    order = sorted((sched[m], m) for m in range(3) if truthful[m])
    t_a, announcer = order[0]
    plan = respond(ctx.params, announcer, y, t_a, paths)
    new = _apply(plan, paths)
    fv_x = np.array([[p.first_visit(y)] for p in new])
    fv_x = np.where(sched[:, None] <= t_a, sched[:, None], fv_x)
    fv_a = np.full(3, math.inf)
    done = float(_completion(accounting, byz, fv_x, fv_a, False, t_a, truthful)[0])
    return ByzOutcome(scenario, plan.case, announcer, t_a, done, done / abs(y))


def case2_corner(params: ScheduleParams, accounting=Accounting.FIRST_RELIABLE,
                 eps: float = CORNER_EPS) -> ByzOutcome:
    """Far-case lie by agent 1 at ``d_{1,0}``; target just past ``d_{0,1}``."""
    x_a = turning_point(params, TurningPointRef(1, 0))
    target = turning_point(params, TurningPointRef(0, 1)) * (1 + eps)
    return evaluate(params, ByzScenario(1, target, lie=x_a), accounting)


def case1_corner(params: ScheduleParams, liar: int = 1, accounting=Accounting.FIRST_RELIABLE,
                 eps: float = CORNER_EPS) -> ByzOutcome:
    """Near-case lie at ``d^(1)_{2,-1}``; target just past the matching point."""
    x_a = turning_point(params, TurningPointRef(2, -1, 1))
    if liar == 1:
        edge = turning_point(params, TurningPointRef(2, -1))
    else:
        edge = turning_point(params, TurningPointRef(0, 0, 1))
    return evaluate(params, ByzScenario(liar, edge * (1 + eps), lie=x_a), accounting)


def lie_grid(params: ScheduleParams, count: int) -> np.ndarray:
    """Claimed points in ``I_{0,0}``: a uniform grid in z plus both case edges."""
    width = scale(params, 2.0 / 3.0)
    edge = params.a * scale(params, 1.0 / 3.0)
    zs = np.linspace(1.0, width, count + 1)[1:]
    extra = [1.0 + CORNER_EPS, edge, edge * (1 + CORNER_EPS), width]
    return np.unique(np.concatenate([zs, extra]))


def target_grid(params: ScheduleParams, count: int, anchors=()) -> np.ndarray:
    """Targets on both sides: log-spaced magnitudes plus points hugging anchors."""
    mags = np.exp(np.linspace(math.log(0.05), 3.5 * params.lnr, count))
    pts = [mags, -mags]
    marks = []
    for m in range(3):
        for j in range(-3, 5):
            for l in (0, 1, 2):
                marks.append(turning_point(params, TurningPointRef(m, j, l)))
    marks += list(anchors)
    marks = np.array([v for v in marks if v != 0])
    pts += [marks * (1 + CORNER_EPS), marks * (1 - CORNER_EPS)]
    return np.unique(np.concatenate(pts))


def _lie_task(args):
    params, byz, x_a, targets, accounting = args
    ctx = _Context(params, [schedule_path(params, m) for m in range(3)])
    plan, t_a, ratios = _lie_batch(ctx, byz, x_a, targets, accounting)
    k = int(np.argmax(ratios))
    return float(ratios[k]), byz, float(x_a), float(targets[k]), plan.case, plan.announcer, t_a, int(np.isfinite(ratios).sum())


def byz_competitive_ratio(
    params: ScheduleParams | None = None,
    lie_grid_count: int = 120,
    target_grid_count: int = 120,
    accounting: Accounting | str = Accounting.FIRST_RELIABLE,
    jobs: int = 1,
) -> ByzCertificate:
    """Worst ratio over liar, claimed point, true target and silence choices."""
    if lie_grid_count < 100 or target_grid_count < 100:
        raise ScheduleError("grids need at least 100 points each")
    params = params or default_params()
    accounting = Accounting(accounting)
    paths = [schedule_path(params, m) for m in range(3)]
    lies = lie_grid(params, lie_grid_count) * turning_point(params, TurningPointRef(0, 0))
    tasks = []
    for byz in range(3):
        for x_a in lies:
            t_a = paths[byz].first_visit(x_a)
            anchors = [x_a]
            for p in paths:
                anchors += list(p.extent(t_a))
            tasks.append((params, byz, float(x_a), target_grid(params, target_grid_count, anchors), accounting))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_lie_task, tasks, chunksize=8))
    else:
        results = [_lie_task(t) for t in tasks]
    best = None
    maxima: dict[str, float] = {}
    examined = 0
    for ratio, byz, x_a, y, case, announcer, t_a, count in results:
        examined += count
        key = f"lie_{case.value}_by_{'i' if case is Case.EXPOSED else _role(params, x_a, byz)}"
        maxima[key] = max(maxima.get(key, -math.inf), ratio)
        cand = (ratio, -byz, -x_a, -y)
        if best is None or cand > best[0]:
            best = (cand, ByzOutcome(ByzScenario(byz, y, lie=x_a), case, announcer, t_a, ratio * abs(y), ratio))
    ctx = _Context(params, paths)
    width = scale(params, 2.0 / 3.0)
    zs = np.unique(np.concatenate([
        np.linspace(1.0, width, target_grid_count + 1)[1:],
        [1.0 + CORNER_EPS, params.a * scale(params, 1.0 / 3.0) * (1 + CORNER_EPS)],
    ]))
    for byz in range(3):
        for suppressed in (True, False):
            for z in zs:
                out = _honest(ctx, ByzScenario(byz, float(z), None, suppressed), accounting)
                examined += 1
                key = "no_lie_silent" if suppressed else "no_lie_honest"
                maxima[key] = max(maxima.get(key, -math.inf), out.ratio)
                cand = (out.ratio, -byz, math.inf, -z)
                if cand > best[0]:
                    best = (cand, out)
    witness = best[1]
    return ByzCertificate(witness.ratio, witness, examined, accounting, params, maxima)


def _role(params: ScheduleParams, x: float, agent: int) -> str:
    """Label of ``agent`` relative to the owner ``i`` of the interval holding ``x``."""
    k = (agent - locate(params, x).i) % 3
    return ("i", "i+1", "i+2")[k]


def lie_profile(params: ScheduleParams, liar_offset: int, lies: np.ndarray, targets_count: int = 120,
                accounting: Accounting | str = Accounting.FIRST_RELIABLE) -> np.ndarray:
    """Worst ratio over targets for each claimed point, liar given by its offset from ``i``."""
    accounting = Accounting(accounting)
    paths = [schedule_path(params, m) for m in range(3)]
    ctx = _Context(params, paths)
    out = []
    for x_a in lies:
        byz = (locate(params, x_a).i + liar_offset) % 3
        t_a = paths[byz].first_visit(x_a)
        anchors = [x_a] + [v for p in paths for v in p.extent(t_a)]
        _, _, ratios = _lie_batch(ctx, byz, float(x_a), target_grid(params, targets_count, anchors), accounting)
        out.append(float(ratios.max()))
    return np.array(out)
