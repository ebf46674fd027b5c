"""Scalar optimization of the expansion factor ``r``.

Each objective is seeded on a coarse grid and refined by golden-section
search between the neighbours of the best grid cell.  Infeasible points score
``inf``, so a minimizer sitting on a feasibility boundary is approached from
the feasible side.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from . import closed_form as cf
from .adversary import TargetSpec, competitive_ratio, evacuation_time
from .schedule import ScheduleError, ScheduleParams

GRID = (1.01, 20.0, 0.01)
CONFIRM_TOL = 1e-5
GOLDEN_XTOL = 1e-12


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptResult:
    n: int
    f: int
    u: int | None
    r_star: float
    q: float
    s: float
    a: float
    ratio: float
    objective_evals: int
    certified: float | None = None

    def params(self) -> ScheduleParams:
        return ScheduleParams(n=self.n, f=self.f, r=self.r_star, q=self.q, a=self.a)


@dataclass
class _Counter:
    fn: Callable[[float], float]
    calls: int = 0

    def __call__(self, r: float) -> float:
        self.calls += 1
        return self.fn(r)


def grid(lo: float = GRID[0], hi: float = GRID[1], step: float = GRID[2]) -> np.ndarray:
    return np.round(np.arange(lo, hi + step / 2, step), 10)


def golden_refine(fn: Callable[[float], float], rs: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    """Golden-section polish around the best finite grid value."""
    finite = np.isfinite(values)
    if not finite.any():
        return math.nan, math.inf
    k = int(np.argmin(np.where(finite, values, np.inf)))
    lo = float(rs[max(k - 1, 0)])
    hi = float(rs[min(k + 1, len(rs) - 1)])
    best_r, best_v = float(rs[k]), float(values[k])
    if hi > lo and values[k] <= min(fn(lo), fn(hi)):
        try:
            res = minimize_scalar(fn, bracket=(lo, best_r, hi), method="golden",
                                  options={"xtol": GOLDEN_XTOL, "maxiter": 500})
            if np.isfinite(res.fun) and res.fun < best_v:
                best_r, best_v = float(res.x), float(res.fun)
        except ValueError:
            # Flat bracket; the grid value stands.
            pass
        # A minimizer on an inf wall is approached by bisection from inside.
        best_r, best_v = _edge_polish(fn, best_r, best_v, lo, hi)
    return float(best_r), float(best_v)


def _edge_polish(fn, r, v, lo, hi):
    for edge in (lo, hi):
        a, b = r, edge
        fa = v
        for _ in range(200):
            mid = 0.5 * (a + b)
            fm = fn(mid)
            if np.isfinite(fm) and fm <= fa:
                a, fa = mid, fm
            else:
                b = mid
            if abs(b - a) <= 1e-15 * max(1.0, abs(a)):
                break
        if fa < v:
            r, v = a, fa
    return float(r), float(v)


def _best_for_u(args) -> tuple[float, float, int, int]:
    n, u = args
    counter = _Counter(lambda r: cf.objective_f(r, u, n))
    rs = grid()
    values = np.array([counter(r) for r in rs])
    r, v = golden_refine(counter, rs, values)
    return v, r, u, counter.calls


def optimize_f(n: int, f: int | None = None, jobs: int = 1, confirm: bool = True) -> OptResult:
    """Best ``(u, r)`` for the generalized construction with ``n = 2f+1 >= 5``."""
    f = (n - 1) // 2 if f is None else f
    if n != 2 * f + 1 or f < 2:
        raise ScheduleError("the construction needs n = 2f+1 with f >= 2")
    tasks = [(n, u) for u in range(f + 3, n + 1)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            found = list(pool.map(_best_for_u, tasks))
    else:
        found = [_best_for_u(t) for t in tasks]
    evals = sum(c for *_, c in found)
    feasible = [(v, u, r) for v, r, u, _ in found if math.isfinite(v)]
    if not feasible:
        raise OptimizationError(f"no feasible (r, u) for n={n}")
    v, u, r = min(feasible)
    q = cf.q_hat(r, u, n)
    a = cf.a_hat(r, q, n)
    s = cf.s_from_q(r, q)
    result = OptResult(n, f, u, r, q, s, a, v, evals)
    return _confirm(result) if confirm else result


def optimize_31(confirm: bool = True) -> OptResult:
    counter = _Counter(lambda r: cf.ratio_31(r) if r > cf.R_MIN_31 else math.inf)
    rs = grid(math.ceil(cf.R_MIN_31 * 100) / 100, GRID[1])
    values = np.array([counter(r) for r in rs])
    r, v = golden_refine(counter, rs, values)
    a, q = cf.params_31(r)
    result = OptResult(3, 1, None, r, q, cf.s_from_q(r, q), a, v, counter.calls)
    return _confirm(result) if confirm else result


def _confirm(result: OptResult) -> OptResult:
    cert = competitive_ratio(result.params())
    if not cert.stabilized or abs(cert.ratio - result.ratio) > CONFIRM_TOL:
        raise OptimizationError(
            f"certificate {cert.ratio:.9f} disagrees with closed form {result.ratio:.9f}"
        )
    return OptResult(**{**result.__dict__, "certified": cert.ratio})


def proportional_ratio(r: float, n: int) -> float:
    """Certified ratio of the proportional schedule.

    Every turning point is equivalent under scaling, so one one-sided limit
    is enough here; ``competitive_ratio`` checks this on the final answer.
    """
    if not r > 1.0:
        return math.inf
    return evacuation_time(ScheduleParams.proportional(n, r), TargetSpec.just_beyond(0, 0)).ratio


def optimize_proportional(n: int, confirm: bool = True) -> OptResult:
    counter = _Counter(lambda r: proportional_ratio(r, n))
    rs = grid()
    values = np.array([counter(r) for r in rs])
    r, v = golden_refine(counter, rs, values)
    f = (n - 1) // 2
    q = r / (r - 1.0)
    result = OptResult(n, f, None, r, q, 0.0, 1.0, v, counter.calls)
    if confirm:
        cert = competitive_ratio(ScheduleParams.proportional(n, r))
        if abs(cert.ratio - v) > CONFIRM_TOL:
            raise OptimizationError("proportional certificate disagrees with scan")
        result = OptResult(**{**result.__dict__, "certified": cert.ratio})
    return result


@dataclass(frozen=True)
class SweepRow:
    f: int
    n: int
    generalized: OptResult
    proportional: OptResult
    bounds: tuple[float, float]


def sweep(f_max: int, jobs: int = 1) -> list[SweepRow]:
    if f_max < 1:
        raise ScheduleError("f_max must be at least 1")
    rows = []
    for f in range(1, f_max + 1):
        n = 2 * f + 1
        gen = optimize_31() if f == 1 else optimize_f(n, f, jobs=jobs)
        prop = optimize_proportional(n)
        rows.append(SweepRow(f, n, gen, prop, cf.prop_bounds(prop.r_star, n)))
    return rows


CSV_HEADER = ("f", "n", "u", "r", "q", "s", "a", "ratio", "ratio_prop")


def sweep_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(CSV_HEADER)
    for row in rows:
        g = row.generalized
        out.writerow([
            row.f,
            row.n,
            "" if g.u is None else g.u,
            *(f"{v:.6f}" for v in (g.r_star, g.q, g.s, g.a, g.ratio, row.proportional.ratio)),
        ])
    return buf.getvalue()
