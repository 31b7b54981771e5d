"""``osc-test``: check, simulate and plot-data front end.

Exit codes: 0 oscillation proved (or command succeeded), 10 inconclusive,
2 hypothesis validation failed, 1 file/parse/configuration error,
3 simulation requested for an advanced equation.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .criteria import OSCILLATORY, EstimateError, aggregate, evaluate_all, prepare
from .envelopes import EnvelopeError
from .kernels import KernelRangeError
from .piecewise import PiecewiseCellFunction
from .problem import ProblemFile, ProblemFormatError, load_problem, validate
from .quadrature import QuadratureError
from .simulator import SimulationError, integrate_delay, residual_check

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID = 2
EXIT_NOT_SIMULABLE = 3
EXIT_INCONCLUSIVE = 10

FIXTURES = Path(__file__).with_name("fixtures")


class UsageError(Exception):
    pass


# -- helpers -------------------------------------------------------------


def resolve_problem(name: str) -> Path:
    """A path, or the name of a shipped fixture such as ``ex31``."""
    path = Path(name)
    if path.exists():
        return path
    for cand in (FIXTURES / path.name, FIXTURES / f"{path.name}.json"):
        if cand.exists():
            return cand
    raise UsageError(f"{name}: no such file or shipped fixture")


def parse_window(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected T0:T1, got {text!r}") from None
    if not b > a:
        raise argparse.ArgumentTypeError("window needs T1 > T0")
    return a, b


def _positive(kind):
    def conv(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v

    return conv


def fmt(x):
    """Fixed 12-significant-digit floats; non-finite values become null."""
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return float(f"{x:.12g}") if math.isfinite(x) else None
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, dict):
        return {k: fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [fmt(v) for v in x]
    return x


def dump_json(doc, path: str | None) -> None:
    text = json.dumps(fmt(doc), indent=2, ensure_ascii=False) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")


def write_csv(path: Path, header, columns) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([f"{float(v):.12g}" for v in row])


def _load(args) -> ProblemFile:
    return load_problem(resolve_problem(args.problem))


def _window(args, pf: ProblemFile) -> tuple[float, float]:
    window = args.window or pf.window
    if window is None:
        raise UsageError("no window: pass --window T0:T1 or set 'window' in the problem file")
    return window


def _problem_header(pf: ProblemFile, args, window) -> dict:
    return {
        "name": pf.name,
        "type": pf.problem.kind,
        "m": pf.problem.m,
        "window": list(window),
        "step": args.step,
        "r_max": getattr(args, "r_max", None),
        "margin": getattr(args, "margin", None),
        "period_hint": args.period if args.period is not None else pf.period_hint,
    }


# -- commands ------------------------------------------------------------


def run_check(args) -> int:
    pf = _load(args)
    window = _window(args, pf)
    period = args.period if args.period is not None else pf.period_hint
    header = _problem_header(pf, args, window)
    validation = validate(pf.problem, window, args.step)
    if not validation.ok:
        if args.report:
            dump_json({"problem": header, "validation": validation.to_dict(), "criteria": [],
                       "overall": {"verdict": "VALIDATION_FAILED", "by": None, "r": None, "annotations": []}},
                      args.report)
        for c in validation.failures:
            print(f"validation failed: {c.name}" + (f" ({c.witness})" if c.witness else ""), file=sys.stderr)
        return EXIT_INVALID
    ctx = prepare(pf.problem, window, args.step, args.r_max, period, args.margin)
    reports = evaluate_all(ctx)
    overall = aggregate(reports)

    if args.report != "-":
        for rep in reports:
            r = "" if rep.r is None else f"r={rep.r}"
            est = "n/a" if rep.estimate is None else f"{rep.estimate:.6f}"
            print(f"{rep.id:<18} {r:<6} {rep.kind:<7} estimate={est:<12} threshold={rep.threshold:.6f}  {rep.verdict}")
        tail = f" via {overall.by}" + (f" at r={overall.r}" if overall.r is not None else "") if overall.by else ""
        print(f"overall: {overall.verdict}{tail}")
        for note in overall.annotations:
            print(f"  {note}")
    if args.report:
        dump_json(
            {
                "problem": header,
                "validation": validation.to_dict(),
                "criteria": [rep.to_dict() for rep in reports],
                "overall": overall.to_dict(),
            },
            args.report,
        )
    if args.csv:
        out = Path(args.csv)
        for rep in reports:
            if rep.values.size:
                suffix = f"_r{rep.r}" if rep.r is not None else ""
                write_csv(out / f"{rep.id}{suffix}.csv", ["t", "f"], [rep.nodes, rep.values])
    return EXIT_OK if overall.verdict == OSCILLATORY else EXIT_INCONCLUSIVE


def run_simulate(args) -> int:
    pf = _load(args)
    if pf.problem.kind != "delay":
        print("advanced equations are not forward initial-value problems; nothing to simulate", file=sys.stderr)
        return EXIT_NOT_SIMULABLE
    if args.history:
        try:
            doc = json.loads(Path(args.history).read_text(encoding="utf-8"))
            history = PiecewiseCellFunction.from_dict(doc, "history")
        except json.JSONDecodeError as exc:
            raise ProblemFormatError(f"{args.history}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        except ValueError as exc:
            raise ProblemFormatError(f"{args.history}: {exc}") from None
    elif pf.history is not None:
        history = pf.history
    else:
        raise UsageError("no history: pass --history PATH or set 'history' in the problem file")
    horizon = args.horizon
    if horizon is None:
        if pf.window is None:
            raise UsageError("no horizon: pass --horizon T")
        horizon = pf.window[1]
    check = validate(pf.problem, (pf.problem.start, horizon), args.step)
    for c in check.failures:
        print(f"warning: {c.name} fails" + (f" ({c.witness})" if c.witness else ""), file=sys.stderr)
    traj = integrate_delay(pf.problem, history, horizon, args.step)
    candidate = pf.raw.get("candidate")
    if candidate is not None:
        cand = PiecewiseCellFunction.from_dict(candidate, "candidate")
        traj.max_residual = residual_check(pf.problem, cand, history, traj.t)
    summary = traj.summary()
    summary["note"] = "a single trajectory corroborates oscillation; it does not prove it"
    dump_json(summary, args.report)
    if args.csv:
        write_csv(Path(args.csv) / "trajectory.csv", ["t", "x"], [traj.t, traj.x])
    return EXIT_OK


def run_plot_data(args) -> int:
    pf = _load(args)
    window = _window(args, pf)
    out = Path(args.csv or ".")
    problem = pf.problem
    sym, env_sym = ("tau", "g") if problem.kind == "delay" else ("sigma", "rho")
    period = args.period if args.period is not None else pf.period_hint
    ctx = prepare(problem, window, args.step, args.r_max, period)
    nodes = ctx.grid.nodes[ctx.grid.between(problem.start, window[1])]
    m = problem.m
    write_csv(out / "arguments.csv", ["t"] + [f"{sym}_{i}" for i in range(1, m + 1)],
              [nodes] + [a(nodes) for a in problem.arguments])
    write_csv(out / "envelopes.csv", ["t"] + [f"{env_sym}_{i}" for i in range(1, m + 1)] + [env_sym],
              [nodes] + [e(nodes) for e in ctx.envelopes] + [ctx.envelope(nodes)])
    if not ctx.validation.ok:
        print("hypotheses fail; functional curves skipped", file=sys.stderr)
        return EXIT_OK
    from .criteria import advanced_kernel_functional, delay_kernel_functional

    kernel = delay_kernel_functional if problem.kind == "delay" else advanced_kernel_functional
    curves = [kernel(ctx, r) for r in range(1, args.r_max + 1)]
    write_csv(out / "functionals.csv", ["t"] + [f"f_{r}" for r in range(1, args.r_max + 1)],
              [ctx.eval_nodes] + curves)
    return EXIT_OK


# -- entry point ---------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # usage errors share the exit code of other input errors; 2 means validation failed
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="osc-test", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("problem", help="problem JSON file or shipped fixture name (ex31, ex32, ...)")
        p.add_argument("--step", type=_positive(float), default=1e-3, help="grid step h (default 1e-3)")
        p.add_argument("--report", default=None,
                       help="JSON report path ('-' writes it to stdout instead of the summary)")
        p.add_argument("--csv", default=None, help="directory for CSV output")

    def analysis(p):
        p.add_argument("--r-max", type=_positive(int), default=5, help="highest kernel level (default 5)")
        p.add_argument("--window", type=parse_window, default=None, help="analysis window T0:T1")
        p.add_argument("--period", type=_positive(float), default=None, help="period hint for tail estimates")

    p = sub.add_parser("check", help="evaluate every criterion and aggregate a verdict")
    common(p)
    analysis(p)
    p.add_argument("--margin", type=float, default=1e-6, help="strictness margin (default 1e-6)")
    p.set_defaults(func=run_check)

    p = sub.add_parser("simulate", help="integrate a delay equation from its history")
    common(p)
    p.add_argument("--history", default=None, help="history function JSON (default: the problem's)")
    p.add_argument("--horizon", type=float, default=None, help="final time (default: window end)")
    p.add_argument("--period", type=float, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=run_simulate)

    p = sub.add_parser("plot-data", help="write argument, envelope and functional curves as CSV")
    common(p)
    analysis(p)
    p.set_defaults(func=run_plot_data)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ProblemFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (KernelRangeError, QuadratureError, EnvelopeError, EstimateError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
