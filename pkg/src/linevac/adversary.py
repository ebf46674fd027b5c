"""Worst-case search and evacuation times and certified competitive ratios.

The adversary picks the target and up to ``f`` crash-faulty agents.  For a
fixed target the fault set enters only through the reliable set, so the
worst case is found by failing every agent that arrives strictly before some
first-visit time ``T`` and announcing at ``T``; ``evacuation_time`` scans
those prefixes.  Plain enumeration of all subsets is kept for cross-checks.
"""

from __future__ import annotations

import itertools
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .kinematics import visit_factors
from .schedule import (
    IntervalLocator,
    ScheduleError,
    ScheduleParams,
    TurningPointRef,
    locate,
    locate_beyond,
    positions,
    scale,
    turning_point,
)

TIE_TOL = 1e-12
STABLE_TOL = 1e-10
SNAP_TOL = 1e-12


@dataclass(frozen=True)
class TargetSpec:
    """Either an exact coordinate or the one-sided limit just past a turning point."""

    x: float | None = None
    ref: TurningPointRef | None = None

    def __post_init__(self) -> None:
        if (self.x is None) == (self.ref is None):
            raise ScheduleError("target needs exactly one of x or ref")
        if self.x is not None and (self.x == 0 or not math.isfinite(self.x)):
            raise ScheduleError("the origin is never a target")

    @classmethod
    def exact(cls, x: float) -> "TargetSpec":
        return cls(x=float(x))

    @classmethod
    def just_beyond(cls, i: int, j: int, l: int = 0) -> "TargetSpec":
        return cls(ref=TurningPointRef(i, j, l))

    @property
    def is_limit(self) -> bool:
        return self.ref is not None

    def coordinate(self, params: ScheduleParams) -> float:
        return self.x if self.ref is None else turning_point(params, self.ref)

    def describe(self) -> str:
        if self.ref is None:
            return f"exact x={self.x!r}"
        return f"just_beyond d({self.ref.l})[{self.ref.i},{self.ref.j}]"


@dataclass(frozen=True)
class EvacOutcome:
    fault_set: tuple[int, ...]
    S: float
    most_distant: int
    delta: float
    E: float
    ratio: float
    x: float
    delta_all: float
    most_distant_all: int


@dataclass(frozen=True)
class CrCertificate:
    ratio: float
    witness: TargetSpec
    outcome: EvacOutcome
    candidates_examined: int
    params: ScheduleParams
    window: int
    round_maxima: tuple[float, ...]
    stabilized: bool
    scan: tuple[tuple[TargetSpec, float], ...] = field(default=(), repr=False, compare=False)

    def attaining(self, tol: float = 1e-9) -> list[TargetSpec]:
        """Candidates whose ratio is within ``tol`` of the maximum."""
        return [t for t, v in self.scan if v >= self.ratio - tol]

    def to_text(self) -> str:
        return certificate_text(self)


def _resolve(params: ScheduleParams, target: TargetSpec) -> tuple[float, IntervalLocator, bool]:
    if target.ref is None:
        return target.x, locate(params, target.x), False
    ref = target.ref.reduced(params.n)
    y = turning_point(params, ref)
    if ref.l == 0:
        return y, IntervalLocator(ref.i, ref.j, 1.0), True
    loc = locate_beyond(params, y)
    width = scale(params, 2.0 / params.n)
    if abs(loc.z - width) <= SNAP_TOL * width:
        k, i = divmod(loc.i + 1, params.n)
        loc = IntervalLocator(i, loc.j + 2 * k, 1.0)
    elif abs(loc.z - 1.0) <= SNAP_TOL:
        loc = IntervalLocator(loc.i, loc.j, 1.0)
    return y, loc, True


def first_visit_times(params: ScheduleParams, target: TargetSpec) -> tuple[float, np.ndarray]:
    """Target coordinate and first-visit time of every agent (limit values for
    one-sided targets)."""
    y, loc, strict = _resolve(params, target)
    d = abs(turning_point(params, TurningPointRef(loc.i, loc.j)))
    factors = visit_factors(params, loc.z, strict) * d
    labels = np.arange(params.n)
    k = (labels - loc.i) % params.n
    k = np.where(k == 0, params.n, k)
    return y, factors[k - 1]


def _check_faults(params: ScheduleParams, fault_set: Iterable[int], limit: int | None) -> tuple[int, ...]:
    faults = tuple(sorted(set(int(m) for m in fault_set)))
    bound = params.f if limit is None else limit
    if len(faults) > bound:
        raise ScheduleError(f"at most {bound} faulty agents, got {len(faults)}")
    if any(not 0 <= m < params.n for m in faults):
        raise ScheduleError("fault labels must lie in 0..n-1")
    return faults


def search_time(params: ScheduleParams, target: TargetSpec, fault_set: Iterable[int] = ()) -> float:
    faults = _check_faults(params, fault_set, None)
    _, times = first_visit_times(params, target)
    mask = np.ones(params.n, dtype=bool)
    mask[list(faults)] = False
    return float(times[mask].min())


def outcome_for(params: ScheduleParams, target: TargetSpec, fault_set: Iterable[int]) -> EvacOutcome:
    """Evacuation outcome for a fixed fault set."""
    faults = _check_faults(params, fault_set, params.n - 1)
    y, times = first_visit_times(params, target)
    return _outcome(params, y, times, faults)


def _outcome(params: ScheduleParams, y: float, times: np.ndarray, faults: tuple[int, ...]) -> EvacOutcome:
    reliable = np.setdiff1d(np.arange(params.n), faults)
    S = float(times[reliable].min())
    gaps = np.abs(positions(params, np.arange(params.n), S) - y)
    sub = gaps[reliable]
    pick = int(np.argmax(sub))
    far_all = int(np.argmax(gaps))
    delta = float(sub[pick])
    E = S + delta
    return EvacOutcome(
        fault_set=faults,
        S=S,
        most_distant=int(reliable[pick]),
        delta=delta,
        E=E,
        ratio=E / abs(y),
        x=y,
        delta_all=float(gaps[far_all]),
        most_distant_all=far_all,
    )


def evacuation_time(
    params: ScheduleParams,
    target: TargetSpec,
    max_faults: int | None = None,
    exhaustive: bool = False,
) -> EvacOutcome:
    """Worst case over fault sets of size at most ``max_faults`` (default f)."""
    limit = params.f if max_faults is None else int(max_faults)
    if not 0 <= limit < params.n:
        raise ScheduleError(f"fault budget must lie in 0..{params.n - 1}")
    y, times = first_visit_times(params, target)
    if exhaustive:
        best = None
        for size in range(limit + 1):
            for faults in itertools.combinations(range(params.n), size):
                out = _outcome(params, y, times, faults)
                if best is None or out.E > best.E:
                    best = out
        return best
    order = np.argsort(times, kind="stable")
    ranked = times[order]
    band = TIE_TOL * float(ranked[-1])
    # Announcement candidates: first index of each tie group with <= limit
    # agents strictly earlier.
    starts = [0]
    for idx in range(1, params.n):
        if ranked[idx] - ranked[idx - 1] > band and idx <= limit:
            starts.append(idx)
        elif idx > limit:
            break
    starts = [p for p in starts if p <= limit]
    # Tie groups: every agent tied with ranked[p] stays reliable.
    cut = np.array(starts)
    S = ranked[cut]
    gaps = np.abs(positions(params, order[None, :], S[:, None]) - y)
    cols = np.arange(params.n)[None, :]
    masked = np.where(cols >= cut[:, None], gaps, -np.inf)
    E = S + masked.max(axis=1)
    # Equal times happen when the farthest agent walks straight at x between
    # two candidate announcements; report the later one (larger fault set).
    best = int(np.nonzero(E >= E.max() - TIE_TOL * E.max())[0][-1])
    faults = tuple(sorted(int(m) for m in order[: cut[best]]))
    return _outcome(params, y, times, faults)


def candidate_targets(params: ScheduleParams, window: int, start: int = 0) -> list[TargetSpec]:
    subs = (0, 1, 2) if params.generalized else (0,)
    return [
        TargetSpec.just_beyond(i, j, l)
        for j in range(start, start + window)
        for i in range(params.n)
        for l in subs
    ]


def _ratio_of(args) -> float:
    params, target, max_faults = args
    return evacuation_time(params, target, max_faults).ratio


def _witness_key(t: TargetSpec) -> tuple[int, int, int]:
    return (t.ref.j, t.ref.i, t.ref.l)


def competitive_ratio(
    params: ScheduleParams,
    window: int = 3,
    jobs: int = 1,
    start: int = 0,
    max_faults: int | None = None,
) -> CrCertificate:
    """Scan one-sided limits at every turning and sub-turning point."""
    if window < 1:
        raise ScheduleError("window must be at least 1")
    targets = candidate_targets(params, window, start)
    work = [(params, t, max_faults) for t in targets]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            ratios = list(pool.map(_ratio_of, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        ratios = [_ratio_of(w) for w in work]
    top = max(ratios)
    tied = [t for t, v in zip(targets, ratios) if v >= top - TIE_TOL * top]
    witness = min(tied, key=_witness_key)
    outcome = evacuation_time(params, witness, max_faults)
    maxima = []
    for j in range(start, start + window):
        maxima.append(max(v for t, v in zip(targets, ratios) if t.ref.j == j))
    stabilized = window >= 2 and all(
        abs(b - a) <= STABLE_TOL * max(1.0, abs(a)) for a, b in zip(maxima, maxima[1:])
    )
    return CrCertificate(
        ratio=outcome.ratio,
        witness=witness,
        outcome=outcome,
        candidates_examined=len(targets),
        params=params,
        window=window,
        round_maxima=tuple(maxima),
        stabilized=stabilized,
        scan=tuple(zip(targets, ratios)),
    )


@dataclass(frozen=True)
class GridReport:
    samples: int
    certified: float
    max_interior: float
    max_slack: float
    worst_x: float
    violations: tuple[float, ...]
    seed: int

    @property
    def ok(self) -> bool:
        return not self.violations


def grid_check_turning_point_supremum(
    params: ScheduleParams,
    samples: int,
    seed: int = 0,
    certificate: CrCertificate | None = None,
    tol: float = 1e-9,
) -> GridReport:
    """Sample interior targets and compare against the turning-point certificate."""
    if samples < 1:
        raise ScheduleError("samples must be positive")
    cert = certificate or competitive_ratio(params)
    rng = random.Random(seed)
    width = scale(params, 2.0 / params.n)
    worst, worst_x, bad = -math.inf, math.nan, []
    for _ in range(samples):
        i = rng.randrange(params.n)
        j = rng.choice((0, 1))
        z = 1.0 + (width - 1.0) * rng.uniform(1e-6, 1.0 - 1e-6)
        x = z * turning_point(params, TurningPointRef(i, j))
        ratio = evacuation_time(params, TargetSpec.exact(x)).ratio
        if ratio > worst:
            worst, worst_x = ratio, x
        if ratio > cert.ratio + tol:
            bad.append(x)
    return GridReport(samples, cert.ratio, worst, worst - cert.ratio, worst_x, tuple(bad), seed)


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def certificate_text(cert: CrCertificate) -> str:
    p, o, w = cert.params, cert.outcome, cert.witness
    lines = [
        f"ratio: {_fmt(cert.ratio)}",
        f"stabilized: {'true' if cert.stabilized else 'false'}",
        f"candidates_examined: {cert.candidates_examined}",
        f"window: {cert.window}",
        "round_maxima: " + ", ".join(_fmt(v) for v in cert.round_maxima),
        "params:",
        f"  kind: {p.kind.value}",
        f"  n: {p.n}",
        f"  f: {p.f}",
        f"  r: {_fmt(p.r)}",
    ]
    if p.generalized:
        lines += [f"  q: {_fmt(p.q)}", f"  s: {_fmt(p.s)}", f"  a: {_fmt(p.a)}"]
    lines += [
        "witness:",
        "  kind: just_beyond" if w.is_limit else "  kind: exact",
    ]
    if w.is_limit:
        lines += [f"  i: {w.ref.i}", f"  j: {w.ref.j}", f"  l: {w.ref.l}"]
    lines += [
        f"  x: {_fmt(o.x)}",
        "outcome:",
        "  fault_set: " + (" ".join(str(m) for m in o.fault_set) or "-"),
        f"  S: {_fmt(o.S)}",
        f"  most_distant: {o.most_distant}",
        f"  delta: {_fmt(o.delta)}",
        f"  E: {_fmt(o.E)}",
        f"  ratio: {_fmt(o.ratio)}",
        f"  delta_all_agents: {_fmt(o.delta_all)}",
    ]
    return "\n".join(lines) + "\n"


def parse_certificate(text: str) -> dict:
    """Nested dict from ``certificate_text`` output (values left as strings)."""
    doc: dict = {}
    section = None
    for raw in text.splitlines():
        if not raw.strip():
            continue
        key, _, value = raw.strip().partition(":")
        value = value.strip()
        if raw.startswith("  ") and section is not None:
            doc[section][key] = value
        elif value == "":
            section = key
            doc[section] = {}
        else:
            section = None
            doc[key] = value
    return doc


def witness_from_doc(doc: dict) -> TargetSpec:
    w = doc["witness"]
    if w["kind"] == "just_beyond":
        return TargetSpec.just_beyond(int(w["i"]), int(w["j"]), int(w["l"]))
    return TargetSpec.exact(float(w["x"]))


def prefix_and_exhaustive_agree(params: ScheduleParams, targets: Sequence[TargetSpec], tol: float = 1e-12) -> bool:
    """Cross-check of the prefix reduction against subset enumeration."""
    for t in targets:
        a = evacuation_time(params, t).E
        b = evacuation_time(params, t, exhaustive=True).E
        if abs(a - b) > tol * max(1.0, abs(b)):
            return False
    return True
