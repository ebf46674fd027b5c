"""Closed-form ratios and construction parameters for proportional and generalized schedules."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .schedule import ScheduleError

SQRT2 = math.sqrt(2.0)
R_STAR_ASYMPTOTIC = 3.0 + 2.0 * SQRT2
CR_ASYMPTOTIC = 4.0 + 2.0 * SQRT2
R_MIN_31 = 2.0 * SQRT2


class Regime(str, enum.Enum):
    A_ONLY = "scenario_a_only"
    AB = "scenario_ab"


@dataclass(frozen=True)
class RegimeReport:
    in_P: bool
    q: float
    q_constraint_low: float
    q_constraint_high: float
    branch: Regime
    reason: str = ""


def _check_r(r: float) -> None:
    if not r > 1.0:
        raise ScheduleError(f"need r > 1, got {r}")


def prop_bounds(r: float, n: int) -> tuple[float, float]:
    """Lower and upper bounds on the proportional schedule's ratio."""
    _check_r(r)
    if n < 3 or n % 2 == 0:
        raise ScheduleError("n must be odd and at least 3")
    r2n = r ** (2.0 / n)
    tail = 4.0 * r ** (2.0 + 1.0 / n) / (r - 1.0)
    lower = 1.0 + 2.0 * r / (r + r2n) + tail / (r + r2n)
    upper = 1.0 + 2.0 * r / (r + 1.0) + tail / (r + 1.0)
    return lower, upper


def asymptotic_cr(r: float) -> float:
    _check_r(r)
    return 7.0 - 2.0 * (r - 3.0) / (r * r - 1.0)


def q_hat(r: float, u: int, n: int) -> float:
    """Construction value of q; NaN when the denominator is not positive."""
    _check_r(r)
    den = (1.0 + r ** (2.0 / n)) * r ** (2.0 * (u - 1) / n - 1.0) - 2.0 * r ** (1.0 / n)
    if den <= 0.0:
        return math.nan
    return (r ** (2.0 * u / n - 1.0) + 1.0) / den


def a_only_threshold(r: float, n: int) -> float:
    return r / (r - r ** (2.0 / n))


def a_hat(r: float, q: float, n: int) -> float:
    if q <= a_only_threshold(r, n):
        return q * (r ** (1.0 - 2.0 / n) - 1.0)
    return q * (r ** (1.0 - 4.0 / n) - 1.0)


def q_bracket(r: float, n: int) -> tuple[float, float]:
    low = r / (r - 1.0)
    high = r / (r - r ** (1.0 - 2.0 / n))
    if n > 4:
        high = min(high, r / (r - r ** (4.0 / n)))
    return low, high


def regime(r: float, u: int, n: int) -> RegimeReport:
    """Feasibility of ``(r, u)`` and the applicable analysis branch."""
    _check_r(r)
    f = (n - 1) // 2
    low, high = q_bracket(r, n)
    q = q_hat(r, u, n)
    branch = Regime.A_ONLY if (math.isfinite(q) and q <= a_only_threshold(r, n)) else Regime.AB
    if not f + 3 <= u <= n:
        return RegimeReport(False, q, low, high, branch, f"u={u} outside {f + 3}..{n}")
    if not math.isfinite(q):
        return RegimeReport(False, q, low, high, branch, "q-hat denominator not positive")
    if q < low:
        return RegimeReport(False, q, low, high, branch, "q-hat below r/(r-1)")
    if q > high:
        return RegimeReport(False, q, low, high, branch, "q-hat above upper bracket")
    return RegimeReport(True, q, low, high, branch)


def scenario_ratios_f(r: float, q: float, n: int) -> tuple[float, float]:
    """``(R_A, R_B_bound)``; the combined ratio depends on the regime."""
    r1n = r ** (1.0 / n)
    r2n = r1n * r1n
    core = (1.0 + 2.0 * q * r1n) / (q + (q - 1.0) * r2n)
    ra = 1.0 + 2.0 * q * core
    rb = 3.0 + 2.0 * (q - 1.0) / (q * (r ** (1.0 - 4.0 / n) - 1.0)) * (
        2.0 * r - r ** (3.0 / n) * core
    )
    return ra, rb


def combined_ratio(r: float, q: float, n: int) -> float:
    ra, rb = scenario_ratios_f(r, q, n)
    if q <= a_only_threshold(r, n):
        return ra
    return max(ra, rb)


def objective_f(r: float, u: int, n: int) -> float:
    """Combined ratio of the construction at ``(r, u)``; inf when infeasible."""
    if not r > 1.0:
        return math.inf
    rep = regime(r, u, n)
    if not rep.in_P:
        return math.inf
    return combined_ratio(r, rep.q, n)


def _31_pieces(r: float) -> tuple[float, float, float]:
    if not r > R_MIN_31:
        raise ScheduleError(f"need r > 2*sqrt(2), got {r}")
    c = r ** (1.0 / 3.0)
    b = r + 1.0 + c * c
    lead = r - 2.0 * c
    disc = b * b + 4.0 * c * c * (r + 1.0) * lead
    return c, b, disc


def params_31(r: float) -> tuple[float, float]:
    """``(a, q)`` equalizing both worst cases of the three-agent schedule."""
    c, b, disc = _31_pieces(r)
    # Positive root of lead*a^2 + b*a - c^2 (r+1) = 0 in conjugate form,
    # which stays accurate as the leading coefficient vanishes.
    a = 2.0 * c * c * (r + 1.0) / (b + math.sqrt(disc))
    q = (r + 1.0 - a) / (r + 1.0 - 2.0 * c)
    return a, q


def ra_31(a: float, q: float) -> float:
    return 1.0 + 2.0 * (q + a)


def rb_31(r: float, a: float, q: float) -> float:
    return 1.0 + 2.0 * q * r ** (2.0 / 3.0) / a


def ratio_31(r: float) -> float:
    c, _, disc = _31_pieces(r)
    return 2.0 + (c * (2.0 - c) + math.sqrt(disc)) / (r + 1.0 - 2.0 * c)


def poly_31(r: float) -> float:
    """Sign witness ``(r - r^{1/3})(r^{1/3} - 1)`` used by the equalization argument."""
    c = r ** (1.0 / 3.0)
    return (r - c) * (c - 1.0)


def q_from_s(r: float, s: float) -> float:
    return (r + s) / (r - 1.0)


def s_from_q(r: float, q: float) -> float:
    return q * (r - 1.0) - r
