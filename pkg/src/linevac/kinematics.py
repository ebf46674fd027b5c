"""Closed-form visit times, trajectory intersections and bounding cones."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .schedule import (
    IntervalLocator,
    ScheduleError,
    ScheduleParams,
    TurningPointRef,
    positions,
    scale,
    turning_point,
)

# Relative width of the band in which two branch conditions count as equal.
BRANCH_TOL = 1e-12


class Branch(str, enum.Enum):
    CIRC = "circ"
    PLUS = "plus"
    PROPORTIONAL = "proportional"


class UncoveredIntersection(ScheduleError):
    """The two trajectories do not meet on the legs the closed forms describe."""


@dataclass(frozen=True)
class VisitTime:
    value: float
    branch: Branch


@dataclass(frozen=True)
class IntersectionPoint:
    rho: float
    tau: float
    variant: Branch


@dataclass(frozen=True)
class ConeSlope:
    k: int
    variant: Branch
    beta: float
    infinite: bool = False


def _ge(lhs: float, rhs: float, strict: bool) -> bool:
    """``lhs >= rhs`` (or ``>`` if strict) with a relative tie band."""
    band = BRANCH_TOL * max(abs(lhs), abs(rhs), 1.0)
    if abs(lhs - rhs) <= band:
        return not strict
    return lhs > rhs


def turn_time(params: ScheduleParams, ref: TurningPointRef) -> float:
    d = abs(turning_point(params, TurningPointRef(ref.i, ref.j, 0)))
    q, r, a = params.q, params.r, params.a
    factor = (2 * q - 1, 2 * q + a, q * (r + 1) - r + a)[ref.l]
    return factor * d


def visit_branch(params: ScheduleParams, k: int, z: float, strict: bool = False) -> Branch:
    if not params.generalized:
        return Branch.PROPORTIONAL
    threshold = z * scale(params, 1.0 - 2.0 * k / params.n)
    return Branch.CIRC if _ge(params.a, threshold, strict) else Branch.PLUS


def visit_factor(params: ScheduleParams, k: int, z: float, branch: Branch) -> float:
    """First-visit time of agent ``i+k`` divided by ``|d_{i,j}|``."""
    rk = scale(params, 2.0 * k / params.n)
    if branch is Branch.PROPORTIONAL:
        return z + 2.0 * rk / (params.r - 1.0)
    if branch is Branch.CIRC:
        return z + 2.0 * params.q * rk / params.r
    return z + 2.0 * (params.q - 1.0) * rk


def visit_factors(params: ScheduleParams, z: float, strict: bool = False) -> np.ndarray:
    """``visit_factor`` for k = 1..n at once (index k-1)."""
    k = np.arange(1, params.n + 1)
    rk = np.exp((2.0 * k / params.n) * params.lnr)
    if not params.generalized:
        return z + 2.0 * rk / (params.r - 1.0)
    circ = z + 2.0 * params.q * rk / params.r
    plus = z + 2.0 * (params.q - 1.0) * rk
    threshold = z * params.r / rk
    band = BRANCH_TOL * np.maximum(np.maximum(threshold, params.a), 1.0)
    tie = np.abs(params.a - threshold) <= band
    use_circ = np.where(tie, not strict, params.a > threshold)
    return np.where(use_circ, circ, plus)


def first_visit_time(
    params: ScheduleParams, k: int, loc: IntervalLocator, strict: bool = False
) -> VisitTime:
    """Time agent ``i+k`` first reaches ``z d_{i,j}``.

    ``strict`` selects the one-sided limit from beyond ``z`` (ties go to Plus);
    the default uses the inclusive boundary convention (ties go to Circ).
    """
    if not 1 <= k <= params.n:
        raise ScheduleError(f"offset k must lie in 1..{params.n}, got {k}")
    branch = visit_branch(params, k, loc.z, strict)
    d = abs(turning_point(params, TurningPointRef(loc.i, loc.j)))
    return VisitTime(visit_factor(params, k, loc.z, branch) * d, branch)


def intersection(params: ScheduleParams, i: int, j: int, k: int) -> IntersectionPoint:
    """Meeting point of agent ``i`` leaving ``d_{i,j}`` with agent ``i+k``.

    For k >= 1 agent ``i+k`` is on its way out to ``d_{i+k,j}``.
    """
    if not 0 <= k <= params.f:
        raise ScheduleError(f"k must lie in 0..{params.f}, got {k}")
    r, q, n = params.r, params.q, params.n
    d = turning_point(params, TurningPointRef(i, j))
    rk = scale(params, 2.0 * k / n)
    if not params.generalized:
        rho = (r - rk) / (r - 1.0) * d
        tau = (r + rk) / (r - 1.0) * abs(d)
        return IntersectionPoint(rho, tau, Branch.CIRC)
    if params.a < scale(params, 1.0 / n) * (1 - BRANCH_TOL):
        raise UncoveredIntersection(
            f"intersection formulas assume a >= r^(1/n); a={params.a:.6g}"
        )
    if k == 0:
        return IntersectionPoint(d, turn_time(params, TurningPointRef(i, j)), Branch.PLUS)
    if _ge(params.a, q * (r / rk - 1.0), strict=False):
        variant = Branch.CIRC
        rho = q * (1.0 - rk / r) * d
        tau = q * (1.0 + rk / r) * abs(d)
    else:
        variant = Branch.PLUS
        rho = (q - (q - 1.0) * rk) * d
        tau = (q + (q - 1.0) * rk) * abs(d)
    # Agent i must still be on its first leg d -> d^(1).
    t0 = turn_time(params, TurningPointRef(i, j, 0))
    t1 = turn_time(params, TurningPointRef(i, j, 1))
    band = 1e-12 * t1
    ok_i = t0 - band <= tau <= t1 + band
    # Agent i+k is heading out on its side: first leg of round j-1 (Circ) or
    # the leg d^(2) -> d_{i+k,j} (Plus).
    if variant is Branch.CIRC:
        lo = turn_time(params, TurningPointRef(i + k, j - 1, 0))
        hi = turn_time(params, TurningPointRef(i + k, j - 1, 1))
    else:
        lo = turn_time(params, TurningPointRef(i + k, j - 1, 2))
        hi = turn_time(params, TurningPointRef(i + k, j, 0))
    band = 1e-12 * hi
    ok_k = lo - band <= tau <= hi + band
    if not (ok_i and ok_k):
        raise UncoveredIntersection(
            f"uncovered intersection case for i={i}, j={j}, k={k} ({variant.value})"
        )
    return IntersectionPoint(rho, tau, variant)


def cone_slope(params: ScheduleParams, k: int, variant: Branch = Branch.CIRC) -> ConeSlope:
    if not 0 <= k <= params.f:
        raise ScheduleError(f"k must lie in 0..{params.f}, got {k}")
    r = params.r
    rk = scale(params, 2.0 * k / params.n)
    if not params.generalized or variant is not Branch.PLUS:
        num, den = r + rk, r - rk
        variant = Branch.CIRC
    else:
        q = params.q
        num, den = q + (q - 1.0) * rk, abs(q - (q - 1.0) * rk)
    if den <= BRANCH_TOL * num:
        return ConeSlope(k, variant, math.inf, infinite=True)
    return ConeSlope(k, variant, num / den)


def most_distant_agent(params: ScheduleParams, x: float, t: float, agents=None) -> tuple[int, float]:
    """Agent farthest from ``x`` at time ``t``; ties go to the smallest label."""
    labels = np.arange(params.n) if agents is None else np.asarray(sorted(agents))
    if labels.size == 0:
        raise ScheduleError("no agents to compare")
    gaps = np.abs(positions(params, labels, t) - x)
    best = int(np.argmax(gaps))
    return int(labels[best]), float(gaps[best])
