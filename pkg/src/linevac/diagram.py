"""Space-time diagrams and ratio-versus-faults curves as SVG."""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib

matplotlib.use("svg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .adversary import TargetSpec, evacuation_time  # noqa: E402
from .kinematics import Branch, cone_slope, turn_time  # noqa: E402
from .schedule import ScheduleError, ScheduleParams, TurningPointRef, positions, turning_point  # noqa: E402


@dataclass(frozen=True)
class Overlay:
    label: str
    target: float
    S: float
    E: float
    # (agent, x at S) for each reliable agent
    starts: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class DiagramData:
    # agent -> (positions, times) at its turning points inside the window
    tracks: dict
    cones: tuple[tuple[str, float], ...]
    overlay: Overlay | None


def scenario_target(params: ScheduleParams, name: str, j: int = 1) -> TargetSpec:
    name = name.upper()
    if name == "A":
        return TargetSpec.just_beyond(0, j)
    if name == "B":
        if not params.generalized:
            raise ScheduleError("scenario B needs a generalized schedule")
        return TargetSpec.just_beyond(1, j - 1, 1)
    raise ScheduleError(f"unknown scenario {name!r}")


def diagram_data(params: ScheduleParams, j0: int, j1: int, cones: bool = False,
                 scenario: str | None = None) -> DiagramData:
    if j1 < j0:
        raise ScheduleError("empty round window")
    subs = (0, 1, 2) if params.generalized else (0,)
    tracks = {}
    for m in range(params.n):
        refs = [TurningPointRef(m, j, l) for j in range(j0, j1 + 1) for l in subs]
        xs = np.array([turning_point(params, ref) for ref in refs])
        ts = np.array([turn_time(params, ref) for ref in refs])
        tracks[m] = (xs, ts)
    lines = []
    if cones:
        for k in (0, 1) if params.f >= 1 else (0,):
            variant = Branch.PLUS if params.generalized else Branch.CIRC
            c = cone_slope(params, k, variant)
            if not c.infinite:
                lines.append((f"C{k}", c.beta))
    overlay = None
    if scenario:
        target = scenario_target(params, scenario, j=j0 + 1)
        out = evacuation_time(params, target)
        reliable = [m for m in range(params.n) if m not in out.fault_set]
        here = positions(params, np.array(reliable), out.S)
        overlay = Overlay(scenario.upper(), out.x, out.S, out.E,
                          tuple((m, float(p)) for m, p in zip(reliable, here)))
    return DiagramData(tracks, tuple(lines), overlay)


def render_diagram(data: DiagramData, path: str, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(7, 7))
    t_max = max(ts.max() for _, ts in data.tracks.values())
    x_max = max(np.abs(xs).max() for xs, _ in data.tracks.values())
    for m, (xs, ts) in data.tracks.items():
        ax.plot(xs, ts, lw=1.2, label=f"agent {m}")
    for name, beta in data.cones:
        xs = np.linspace(-x_max, x_max, 3)
        ax.plot(xs, beta * np.abs(xs), ls="--", lw=0.8, color="grey")
        ax.annotate(name, (x_max, beta * x_max), fontsize=8, color="grey")
    if data.overlay:
        o = data.overlay
        ax.axhline(o.S, lw=0.6, color="black", ls=":")
        for m, x in o.starts:
            ax.plot([x, o.target], [o.S, o.S + abs(x - o.target)], lw=1.0, color="black")
        ax.plot([o.target], [o.E], marker="*", ms=10, color="red")
        ax.set_title(f"{title} scenario {o.label}: E/|x| = {o.E / abs(o.target):.6f}".strip())
    elif title:
        ax.set_title(title)
    ax.set_xlabel("position")
    ax.set_ylabel("time")
    ax.set_ylim(0, t_max * 1.05)
    ax.legend(fontsize=7, loc="upper left")
    fig.savefig(path, format="svg")
    plt.close(fig)


def render_sweep(rows, path: str) -> None:
    from .closed_form import CR_ASYMPTOTIC

    fs = [row.f for row in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(fs, [row.proportional.ratio for row in rows], marker="o", label="proportional")
    ax.plot(fs, [row.generalized.ratio for row in rows], marker="s", label="generalized")
    ax.plot(fs, [row.bounds[0] for row in rows], ls=":", lw=0.8, label="lower bound at r*")
    ax.axhline(CR_ASYMPTOTIC, ls="--", color="grey", label="4+2*sqrt(2)")
    ax.set_xlabel("faults f")
    ax.set_ylabel("competitive ratio")
    ax.legend(fontsize=8)
    fig.savefig(path, format="svg")
    plt.close(fig)
