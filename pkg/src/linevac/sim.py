"""Event-driven playback of the evacuation protocol.

Trajectories are rebuilt from turning-point coordinates alone: each agent
starts at the origin at time zero, walks to its earliest materialized turning
point and then visits every later one at unit speed.  Times are accumulated
leg by leg, so nothing here depends on the closed-form timing results.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .schedule import ScheduleError, ScheduleParams, TurningPointRef, locate, turning_point

PAST_DEPTH = 1e-12
EPSILON_REL = 1e-9


class SimConfigError(ScheduleError):
    """The materialized horizon does not cover the requested run."""


@dataclass(frozen=True)
class Event:
    time: float
    agent: int
    kind: str  # turn | detect | announce | arrive
    coordinate: float
    ref: TurningPointRef | None = None

    def line(self) -> str:
        tail = "" if self.ref is None else f" {self.ref.i} {self.ref.j} {self.ref.l}"
        return f"{self.time:.17g} {self.agent} {self.kind} {self.coordinate:.17g}{tail}"

    @classmethod
    def parse(cls, line: str) -> "Event":
        parts = line.split()
        ref = None
        if len(parts) == 7:
            ref = TurningPointRef(int(parts[4]), int(parts[5]), int(parts[6]))
        return cls(float(parts[0]), int(parts[1]), parts[2], float(parts[3]), ref)


@dataclass(frozen=True)
class SimConfig:
    params: ScheduleParams
    target_x: float
    fault_set: frozenset = field(default_factory=frozenset)
    epsilon_rel: float = EPSILON_REL
    rounds_before: int | None = None
    rounds_after: int = 4

    def __post_init__(self) -> None:
        object.__setattr__(self, "fault_set", frozenset(int(m) for m in self.fault_set))
        if len(self.fault_set) > self.params.f:
            raise ScheduleError(f"at most f={self.params.f} faulty agents")
        if self.target_x == 0:
            raise ScheduleError("the origin is never a target")


@dataclass(frozen=True)
class SimResult:
    events: tuple[Event, ...]
    S: float
    E: float
    x: float
    announcer: int
    fault_set: frozenset = frozenset()

    @property
    def ratio(self) -> float:
        return self.E / abs(self.x)

    def log_text(self) -> str:
        return "".join(e.line() + "\n" for e in self.events)


def realize_just_beyond(params: ScheduleParams, ref: TurningPointRef, epsilon_rel: float = EPSILON_REL) -> float:
    """A concrete point a relative ``epsilon_rel`` past the turning point."""
    return turning_point(params, ref) * (1.0 + epsilon_rel)


@dataclass
class Track:
    times: np.ndarray
    coords: np.ndarray
    refs: list


def build_track(params: ScheduleParams, agent: int, j_lo: int, j_hi: int) -> Track:
    subs = (0, 1, 2) if params.generalized else (0,)
    refs = [TurningPointRef(agent, j, l) for j in range(j_lo, j_hi + 1) for l in subs]
    pts = np.array([turning_point(params, ref) for ref in refs])
    coords = np.concatenate(([0.0], pts))
    times = np.concatenate(([0.0], np.cumsum(np.abs(np.diff(coords)))))
    return Track(times, coords, [None] + refs)


def first_passage(track: Track, x: float) -> float:
    a, b = track.coords[:-1], track.coords[1:]
    hit = np.nonzero((np.minimum(a, b) <= x) & (x <= np.maximum(a, b)))[0]
    if hit.size == 0:
        return math.inf
    s = hit[0]
    return float(track.times[s] + abs(x - track.coords[s]))


def where(track: Track, t: float) -> float:
    if t > track.times[-1]:
        raise SimConfigError("run exceeds the materialized horizon")
    return float(np.interp(t, track.times, track.coords))


def _horizon(params: ScheduleParams, x: float, rounds_before: int | None, rounds_after: int) -> list[Track]:
    loc = locate(params, x)
    before = rounds_before
    if before is None:
        before = math.ceil(-math.log(PAST_DEPTH) / params.lnr) + 1
    j_lo, j_hi = loc.j - before, loc.j + rounds_after
    if abs(turning_point(params, TurningPointRef(params.n - 1, j_lo))) >= abs(x):
        raise SimConfigError("past horizon too short to contain the target's interval")
    return [build_track(params, m, j_lo, j_hi) for m in range(params.n)]


def run(config: SimConfig, tracks: list[Track] | None = None) -> SimResult:
    params, x = config.params, float(config.target_x)
    if tracks is None:
        tracks = _horizon(params, x, config.rounds_before, config.rounds_after)
    visits = np.array([first_passage(tr, x) for tr in tracks])
    reliable = [m for m in range(params.n) if m not in config.fault_set]
    if not np.isfinite(visits[reliable]).any():
        raise SimConfigError("no reliable agent reaches the target within the horizon")
    announcer = min(reliable, key=lambda m: (visits[m], m))
    S = float(visits[announcer])
    events: list[Event] = []
    arrivals = {}
    for m in reliable:
        arrivals[m] = S + abs(where(tracks[m], S) - x)
    E = max(arrivals.values())
    for m, tr in enumerate(tracks):
        stop = E if m in config.fault_set else S
        for t, c, ref in zip(tr.times, tr.coords, tr.refs):
            if ref is not None and t <= stop:
                events.append(Event(float(t), m, "turn", float(c), ref))
        if visits[m] <= stop:
            events.append(Event(float(visits[m]), m, "detect", x))
    events.append(Event(S, announcer, "announce", x))
    for m, t in arrivals.items():
        events.append(Event(t, m, "arrive", x))
    rank = {"turn": 0, "detect": 1, "announce": 2, "arrive": 3}
    events.sort(key=lambda e: (e.time, rank[e.kind], e.agent))
    return SimResult(tuple(events), S, E, x, announcer, config.fault_set)


def worst_case(params: ScheduleParams, x: float, fault_sets: Iterable[Iterable[int]] | None = None) -> SimResult:
    """Largest evacuation time over the supplied fault sets (default: all of size <= f)."""
    if fault_sets is None:
        fault_sets = (fs for k in range(params.f + 1) for fs in itertools.combinations(range(params.n), k))
    tracks = _horizon(params, x, None, 4)
    visits = np.array([first_passage(tr, x) for tr in tracks])
    best, best_E = None, -math.inf
    for fs in fault_sets:
        fs = frozenset(fs)
        reliable = [m for m in range(params.n) if m not in fs]
        S = min(visits[m] for m in reliable)
        E = S + max(abs(where(tracks[m], S) - x) for m in reliable)
        if E > best_E:
            best, best_E = fs, E
    return run(SimConfig(params, x, best), tracks)


def parse_log(text: str) -> list[Event]:
    return [Event.parse(line) for line in text.splitlines()
            if line.strip() and not line.lstrip().startswith("#")]
