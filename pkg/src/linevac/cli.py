"""Command-line entry point: ``linevac <command> [flags]``.

Every command reads one flat parameter document assembled from an optional
``--config`` file (JSON object or ``key=value`` lines) overlaid with flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .adversary import competitive_ratio
from .closed_form import prop_bounds
from .schedule import Kind, ScheduleError, ScheduleParams, TurningPointRef

EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_UNSTABLE = 3

PARAM_KEYS = ("n", "f", "r", "q", "s", "a", "kind")
DEFAULTS = {"window": 3, "seed": 0, "jobs": 1, "epsilon": 1e-9}


def load_config(path: str) -> dict:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        if not isinstance(doc, dict):
            raise ScheduleError("config must be a flat object")
        return doc
    doc = {}
    for number, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ScheduleError(f"{path}:{number}: expected key=value")
        doc[key.strip()] = value.strip()
    return doc


def param_doc(args: argparse.Namespace) -> dict:
    doc = load_config(args.config) if args.config else {}
    flags = {k: getattr(args, k) for k in PARAM_KEYS if getattr(args, k, None) is not None}
    # A q or s flag replaces whichever of the two the file carried.
    if "q" in flags or "s" in flags:
        doc.pop("q", None)
        doc.pop("s", None)
    doc.update(flags)
    for key in ("window", "seed", "jobs", "epsilon"):
        if getattr(args, key, None) is None and key in doc:
            setattr(args, key, type(DEFAULTS[key])(doc[key]))
        elif getattr(args, key, None) is None:
            setattr(args, key, DEFAULTS[key])
    return doc


def params_from(args: argparse.Namespace) -> ScheduleParams:
    doc = {k: v for k, v in param_doc(args).items() if k in PARAM_KEYS}
    return ScheduleParams.from_dict(doc)


def emit(args: argparse.Namespace, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------ commands

def cmd_eval(args) -> int:
    params = params_from(args)
    cert = competitive_ratio(params, window=args.window, jobs=args.jobs)
    text = cert.to_text()
    if not params.generalized:
        lo, hi = prop_bounds(params.r, params.n)
        text += f"bracket: {lo:.12g} {hi:.12g}\n"
    emit(args, text)
    if not cert.stabilized:
        print(f"error: scan did not stabilize over window={args.window}", file=sys.stderr)
        return EXIT_UNSTABLE
    return 0


def _opt_lines(res) -> str:
    rows = [("n", res.n), ("f", res.f), ("u", "-" if res.u is None else res.u)]
    rows += [(k, f"{getattr(res, attr):.9f}") for k, attr in
             (("r", "r_star"), ("q", "q"), ("s", "s"), ("a", "a"), ("ratio", "ratio"))]
    if res.certified is not None:
        rows.append(("certified", f"{res.certified:.9f}"))
    rows.append(("objective_evals", res.objective_evals))
    return "".join(f"{k}: {v}\n" for k, v in rows)


def cmd_optimize(args) -> int:
    from .optimizer import optimize_31, optimize_f, optimize_proportional

    doc = param_doc(args)
    if "n" not in doc and "f" not in doc:
        raise ScheduleError("optimize needs --n or --f")
    n = int(doc["n"]) if "n" in doc else 2 * int(doc["f"]) + 1
    f = int(doc["f"]) if "f" in doc else (n - 1) // 2
    if n != 2 * f + 1 or f < 1:
        raise ScheduleError(f"need n = 2f+1 with f >= 1, got n={n}, f={f}")
    if Kind.parse(doc.get("kind", Kind.GENERALIZED)) is Kind.PROPORTIONAL:
        res = optimize_proportional(n)
    elif n == 3:
        res = optimize_31()
    else:
        res = optimize_f(n, f, jobs=args.jobs)
    emit(args, _opt_lines(res))
    return 0


def cmd_sweep(args) -> int:
    from .optimizer import sweep, sweep_csv

    param_doc(args)
    rows = sweep(args.f_max, jobs=args.jobs)
    emit(args, sweep_csv(rows))
    if args.plot:
        from .diagram import render_sweep

        render_sweep(rows, args.plot)
    return 0


def _parse_ref(text: str) -> TurningPointRef:
    parts = [int(p) for p in text.split(",")]
    if len(parts) not in (2, 3):
        raise ScheduleError("--just-beyond takes i,j or i,j,l")
    return TurningPointRef(*parts)


def cmd_simulate(args) -> int:
    from .sim import SimConfig, realize_just_beyond, run, worst_case

    params = params_from(args)
    if (args.x is None) == (args.just_beyond is None):
        raise ScheduleError("give exactly one of --x or --just-beyond")
    if args.x is not None:
        x = args.x
    else:
        x = realize_just_beyond(params, _parse_ref(args.just_beyond), args.epsilon)
    if args.faults is None:
        res = worst_case(params, x)
    else:
        faults = frozenset(int(m) for m in args.faults.split(",") if m.strip())
        res = run(SimConfig(params, x, faults, epsilon_rel=args.epsilon))
    faults = sorted(res.fault_set)
    tail = (f"# x={res.x:.17g} S={res.S:.17g} E={res.E:.17g} ratio={res.ratio:.12g}"
            f" announcer={res.announcer} faults={','.join(map(str, faults)) or '-'}\n")
    emit(args, res.log_text() + tail)
    return 0


def cmd_verify(args) -> int:
    from .verify import run_suite

    param_doc(args)
    print(f"seed: {args.seed}", flush=True)
    total = failed = 0
    lines = []
    for check in run_suite(args.suite, seed=args.seed, jobs=args.jobs):
        total += 1
        failed += not check.ok
        print(check.line(), flush=True)
        lines.append(check.line())
    summary = f"summary: {total - failed}/{total} passed (suite={args.suite}, seed={args.seed})"
    print(summary)
    if args.out:
        Path(args.out).write_text(f"seed: {args.seed}\n" + "\n".join(lines) + "\n" + summary + "\n")
    return EXIT_FAIL if failed else 0


def cmd_diagram(args) -> int:
    from .diagram import diagram_data, render_diagram

    params = params_from(args)
    if args.window < 1:
        raise ScheduleError("empty round window")
    data = diagram_data(params, args.start, args.start + args.window - 1,
                        cones=args.cones, scenario=args.scenario)
    out = args.out or "diagram.svg"
    title = f"{params.kind.value} n={params.n} r={params.r:.6g}"
    try:
        render_diagram(data, out, title)
    except OSError as exc:
        raise ScheduleError(f"cannot write {out}: {exc.strerror or exc}") from None
    print(out)
    return 0


# ------------------------------------------------------------------ parser

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="flat parameter file (JSON or key=value lines)")
    p.add_argument("--n", type=int)
    p.add_argument("--f", type=int)
    p.add_argument("--r", type=float)
    qs = p.add_mutually_exclusive_group()
    qs.add_argument("--q", type=float)
    qs.add_argument("--s", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--kind", choices=[k.value for k in Kind])
    p.add_argument("--window", type=int, help="rounds to scan or draw (default 3)")
    p.add_argument("--epsilon", type=float, help="relative offset for realized limit targets")
    p.add_argument("--seed", type=int, help="seed for randomized suites (default 0)")
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")
    p.add_argument("--out", help="write output here instead of stdout")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="linevac", description="Evacuation schedules on the line with faulty agents.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="certify a schedule's competitive ratio")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("optimize", parents=[common], help="optimize r (and u) for given n")
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("sweep", parents=[common], help="CSV of optimized ratios for f = 1..f_max")
    p.add_argument("--f-max", type=int, default=5)
    p.add_argument("--plot", help="also write ratio-versus-f curves as SVG")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("simulate", parents=[common], help="event log of one evacuation")
    p.add_argument("--x", type=float, help="target coordinate")
    p.add_argument("--just-beyond", metavar="I,J[,L]", help="target just past a turning point")
    p.add_argument("--faults", help="comma-separated faulty agents (default: worst case)")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("verify", parents=[common], help="run self-check suites")
    p.add_argument("suite", choices=["tables", "oracle", "identities", "byzantine", "all"])
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("diagram", parents=[common], help="space-time diagram as SVG")
    p.add_argument("--start", type=int, default=0, help="first round drawn")
    p.add_argument("--cones", action="store_true", help="overlay the k=0 and k=1 cones")
    p.add_argument("--scenario", choices=["A", "B", "a", "b"], help="overlay a worst-case evacuation")
    p.set_defaults(fn=cmd_diagram)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ScheduleError, ArithmeticError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
