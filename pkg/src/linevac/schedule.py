"""Agent trajectories for proportional and generalized proportional schedules.

Agent ``i`` of ``n`` turns at ``d_{i,j} = r^{2i/n} (-r)^j`` for every integer
round ``j``.  Generalized schedules insert two sub-turning points per round,
``d^(1) = -a d`` and ``d^(2) = (s - a) d`` with ``s = q(r-1) - r``, so that the
agent path within a round is ``d -> d^(1) -> d^(2) -> d_{i,j+1}``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

# Slack used when validating user-supplied (q, a); optimizers land exactly on
# constraint boundaries and round-trip through q = (r+s)/(r-1).
PARAM_TOL = 1e-9
_ULPS = 8 * 2.0 ** -52


class ScheduleError(ValueError):
    """Invalid parameters or arguments."""


class RangeError(ArithmeticError):
    """A turning point over- or underflowed double precision."""


class Kind(str, enum.Enum):
    PROPORTIONAL = "proportional"
    GENERALIZED = "generalized"

    @classmethod
    def parse(cls, value: "str | Kind") -> "Kind":
        if isinstance(value, Kind):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ScheduleError(f"unknown schedule kind {value!r}") from None


@dataclass(frozen=True)
class ScheduleParams:
    n: int
    f: int
    r: float
    q: float = math.nan
    a: float = 1.0
    kind: Kind = Kind.GENERALIZED
    lnr: float = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        kind = Kind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        n, f = int(self.n), int(self.f)
        if n != self.n or f != self.f:
            raise ScheduleError("n and f must be integers")
        if f < 0 or n != 2 * f + 1:
            raise ScheduleError(f"need n = 2f+1 with f >= 0, got n={self.n}, f={self.f}")
        r = float(self.r)
        if not (math.isfinite(r) and r > 1.0):
            raise ScheduleError(f"need r > 1, got {self.r}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "lnr", math.log(r))
        if kind is Kind.PROPORTIONAL:
            object.__setattr__(self, "q", r / (r - 1.0))
            object.__setattr__(self, "a", 1.0)
            return
        q, a = float(self.q), float(self.a)
        if not (math.isfinite(q) and math.isfinite(a)):
            raise ScheduleError("generalized schedules need finite q and a")
        s = q * (r - 1.0) - r
        tol = PARAM_TOL * max(1.0, r)
        if s < -tol or s > r + 1.0 + tol:
            raise ScheduleError(f"s = q(r-1) - r = {s:.6g} outside [0, r+1]")
        if a < max(s - 1.0, 0.0) - tol or a > r + tol:
            raise ScheduleError(f"a = {a:.6g} outside [max(s-1, 0), r]")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "a", a)

    @property
    def s(self) -> float:
        return self.q * (self.r - 1.0) - self.r

    @property
    def generalized(self) -> bool:
        return self.kind is Kind.GENERALIZED

    @classmethod
    def proportional(cls, n: int, r: float) -> "ScheduleParams":
        return cls(n=n, f=(n - 1) // 2, r=r, kind=Kind.PROPORTIONAL)

    @classmethod
    def from_s(cls, n: int, r: float, s: float, a: float) -> "ScheduleParams":
        return cls(n=n, f=(n - 1) // 2, r=r, q=(r + s) / (r - 1.0), a=a)

    def to_dict(self) -> dict:
        out = {"n": self.n, "f": self.f, "r": self.r, "kind": self.kind.value}
        if self.generalized:
            out.update(q=self.q, a=self.a)
        return out

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ScheduleParams":
        doc = dict(doc)
        kind = Kind.parse(doc.get("kind", Kind.GENERALIZED))
        if "n" not in doc and "f" not in doc:
            raise ScheduleError("need n or f")
        n = int(doc["n"]) if "n" in doc else 2 * int(doc["f"]) + 1
        f = int(doc["f"]) if "f" in doc else (n - 1) // 2
        if "r" not in doc:
            raise ScheduleError("need r")
        r = float(doc["r"])
        if kind is Kind.PROPORTIONAL:
            return cls(n=n, f=f, r=r, kind=kind)
        if "q" in doc and "s" in doc:
            raise ScheduleError("q and s are mutually exclusive")
        if "s" in doc:
            q = (r + float(doc["s"])) / (r - 1.0)
        elif "q" in doc:
            q = float(doc["q"])
        else:
            raise ScheduleError("generalized schedules need q or s")
        if "a" not in doc:
            raise ScheduleError("generalized schedules need a")
        return cls(n=n, f=f, r=r, q=q, a=float(doc["a"]), kind=kind)


@dataclass(frozen=True, order=True)
class TurningPointRef:
    """Names ``d^(l)_{i,j}``.  Labels are reduced to ``i in 0..n-1`` on demand."""

    i: int
    j: int
    l: int = 0

    def reduced(self, n: int) -> "TurningPointRef":
        k, i = divmod(self.i, n)
        return TurningPointRef(i, self.j + 2 * k, self.l)


@dataclass(frozen=True)
class IntervalLocator:
    i: int
    j: int
    z: float


def scale(params: ScheduleParams, exponent: float) -> float:
    """``r ** exponent``; every power of r in the package goes through here."""
    return math.exp(exponent * params.lnr)


def _magnitude(params: ScheduleParams, i: int, j: int) -> float:
    # |d_{i,j}| for a reduced label; the exponent is formed the same way
    # everywhere so that ratios of turning points are bit-stable.
    try:
        value = scale(params, (2 * i) / params.n + j)
    except OverflowError:
        value = math.inf
    if value == 0.0 or not math.isfinite(value):
        raise RangeError(f"|d_{{{i},{j}}}| not representable for r={params.r}")
    return value


def sub_multipliers(params: ScheduleParams) -> tuple[float, float, float]:
    """Ratios ``d^(l)/d`` for l = 0, 1, 2."""
    return 1.0, -params.a, params.s - params.a


def turning_point(params: ScheduleParams, ref: TurningPointRef) -> float:
    if ref.l not in (0, 1, 2):
        raise ScheduleError(f"sub-index must be 0, 1 or 2, got {ref.l}")
    if ref.l and not params.generalized:
        raise ScheduleError("proportional schedules have no sub-turning points")
    red = ref.reduced(params.n)
    d = _magnitude(params, red.i, red.j)
    if red.j % 2:
        d = -d
    return d * sub_multipliers(params)[red.l]


def _locate(params: ScheduleParams, x: float, closed_right: bool) -> IntervalLocator:
    if x == 0.0 or not math.isfinite(x):
        raise ScheduleError("the origin is never a target; need finite x != 0")
    n = params.n
    parity = 0 if x > 0 else 1
    mag = abs(x)
    width = scale(params, 2.0 / n)
    # x = z r^{2M/n + parity} with M = i + n k and j = 2k + parity.
    guess = (math.log(mag) / params.lnr - parity) * n / 2.0
    slack = _ULPS * (1.0 + abs(math.log(mag)))
    m = math.ceil(guess) - 1 if closed_right else math.floor(guess)
    for _ in range(8):
        k, i = divmod(m, n)
        j = 2 * k + parity
        z = mag / _magnitude(params, i, j)
        # The closed endpoint gets rounding slack (growing with |log x|): at
        # an exact turning point both neighbouring candidates can miss.
        if closed_right:
            if z <= 1.0:
                m -= 1
            elif z > width * (1.0 + slack):
                m += 1
            else:
                return IntervalLocator(i, j, min(z, width))
        else:
            if z < 1.0 - slack:
                m -= 1
            elif z >= width:
                m += 1
            else:
                return IntervalLocator(i, j, max(z, 1.0))
    raise RangeError(f"could not locate {x}")  # pragma: no cover


def locate(params: ScheduleParams, x: float) -> IntervalLocator:
    """The unique ``(i, j, z)`` with ``x = z d_{i,j}`` and ``z in (1, r^{2/n}]``."""
    return _locate(params, x, closed_right=True)


def locate_beyond(params: ScheduleParams, x: float) -> IntervalLocator:
    """Locator of points just beyond ``x``: ``z in [1, r^{2/n})``."""
    return _locate(params, x, closed_right=False)


def leg_fractions(params: ScheduleParams) -> tuple[float, float, float]:
    """Leg lengths of one round in units of ``|d_{i,j}|``."""
    a, s = params.a, params.s
    return 1.0 + a, s, params.r + s - a


def positions(params: ScheduleParams, agents, t) -> np.ndarray:
    """Vectorized position of ``agents`` at times ``t`` (broadcast together)."""
    agents = np.asarray(agents)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ScheduleError("trajectories are only evaluated at t > 0")
    agents, t = np.broadcast_arrays(agents, t)
    r, q = params.r, params.q
    lnr = params.lnr
    l0, l1, l2 = leg_fractions(params)
    period = l0 + l1 + l2
    base_exp = (2.0 * agents) / params.n
    j = np.floor((np.log(t / (2.0 * q - 1.0)) / lnr) - base_exp)
    for _ in range(3):
        mag = np.exp((base_exp + j) * lnr)
        u = t / mag - (2.0 * q - 1.0)
        j = np.where(u < 0, j - 1, np.where(u >= period, j + 1, j))
    mag = np.exp((base_exp + j) * lnr)
    u = t / mag - (2.0 * q - 1.0)
    a, s = params.a, params.s
    local = np.where(
        u <= l0, 1.0 - u, np.where(u <= l0 + l1, -a + (u - l0), (s - a) - (u - l0 - l1))
    )
    sign = np.where(np.mod(j, 2) == 0, 1.0, -1.0)
    return sign * mag * local


def position_at(params: ScheduleParams, agent: int, t: float) -> float:
    if not 0 <= agent < params.n:
        raise ScheduleError(f"agent label {agent} outside 0..{params.n - 1}")
    if not t > 0:
        raise ScheduleError("trajectories are only evaluated at t > 0")
    return float(positions(params, agent, t))


def round_time_factor(params: ScheduleParams) -> float:
    """``t_{i,j} / |d_{i,j}|``, common to every agent and round."""
    return 2.0 * params.q - 1.0
