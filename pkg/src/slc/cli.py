"""Command-line entry point: compile, run, gradcheck.

Exit codes: 0 success, 1 compile error, 2 runtime error, 3 gradient-check
failure.  Seed and smoothing width come from --seed/--h, falling back to the
SL_SEED and SL_SMOOTH_H environment variables.

The run and gradcheck commands bind entry arguments by convention: the first
active parameter receives the --x vector, the second active parameter (if
any) is the output vector, allocated as [0.0], and a single passive parameter
receives --M.  This matches entry points shaped like the bundled option
pricer, `def black_scholes_call(x,y,M)`.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .activity import is_active
from .adjointgen import CompileResult, compile_source
from .emitter import TargetSub, emit, output_paths
from .errors import CompileError, SLRuntimeError
from .externals import DEFAULT_SEED
from .interp import Interpreter
from .runtime import DEFAULT_H


def _env_seed() -> int:
    return int(os.environ.get("SL_SEED", DEFAULT_SEED))


def _env_h() -> float:
    return float(os.environ.get("SL_SMOOTH_H", DEFAULT_H))


@dataclass
class RunConfig:
    x: tuple = (100.0, 0.05, 0.2, 100.0)
    m: float = 100000.0
    seed: int = field(default_factory=_env_seed)
    h: float = field(default_factory=_env_h)
    strict_kinks: bool = False
    no_pragmas: bool = False
    ylen: int = 1


def _split_params(sub: TargetSub) -> tuple:
    actives = [p for p in sub.params if is_active(p)]
    passives = [p for p in sub.params if not is_active(p)]
    if not actives:
        raise SLRuntimeError(f"entry {sub.name!r} has no active parameter")
    if len(actives) > 2 or len(passives) > 1:
        raise SLRuntimeError(
            f"cannot bind entry {sub.name!r}: expected at most two active and one "
            f"passive parameter, got {sub.params}"
        )
    return actives, passives


def bind_primal_args(sub: TargetSub, cfg: RunConfig) -> list:
    """Argument vector for a primal entry, in parameter order."""
    actives, passives = _split_params(sub)
    values = {actives[0]: [float(v) for v in cfg.x]}
    if len(actives) == 2:
        values[actives[1]] = [0.0] * cfg.ylen
    if passives:
        values[passives[0]] = float(cfg.m)
    return [values[p] for p in sub.params]


def bind_adjoint_args(sub: TargetSub, cfg: RunConfig, ybar: list | None = None) -> tuple:
    """Arguments for an adjoint entry plus the seeded adjoint bindings.

    Returns (args, a_in, out_name) where a_in is the adjoint vector of the
    first active parameter (accumulated in place by the run).
    """
    actives, passives = _split_params(sub)
    if ybar is None:
        ybar = [1.0] + [0.0] * (cfg.ylen - 1)
    a_in = [0.0] * len(cfg.x)
    args = []
    for p in sub.params:
        if p == actives[0]:
            args.append([float(v) for v in cfg.x])
            args.append(a_in)
        elif len(actives) == 2 and p == actives[1]:
            args.append([0.0] * cfg.ylen)
            args.append(list(ybar))
        elif not is_active(p):
            args.append(float(cfg.m))
    return args, a_in


def make_interpreter(result: CompileResult, cfg: RunConfig) -> Interpreter:
    return Interpreter(
        (result.primal, result.adjoint),
        seed=cfg.seed,
        h=cfg.h,
        strict_kinks=cfg.strict_kinks,
    )


def run_primal(result: CompileResult, entry: str, cfg: RunConfig):
    """Execute a primal entry; returns (output vector, stats)."""
    interp = make_interpreter(result, cfg)
    sub = result.primal.sub(entry)
    out = interp.call(entry, bind_primal_args(sub, cfg))
    return out, interp.stats


def run_adjoint(result: CompileResult, entry: str, cfg: RunConfig, ybar: list | None = None):
    """Execute the adjoint of a primal entry; returns (a_x, stats)."""
    interp = make_interpreter(result, cfg)
    sub = result.primal.sub(entry)
    args, a_in = bind_adjoint_args(sub, cfg, ybar)
    interp.call(f"a_{entry}", args)
    return a_in, interp.stats


@dataclass(frozen=True)
class GradcheckRow:
    component: int
    adjoint: float
    fd: float
    error: float
    absolute: bool
    skipped: bool
    ok: bool


@dataclass(frozen=True)
class GradcheckReport:
    rows: tuple
    tol: float
    kink_hits: int

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)


def gradcheck(result: CompileResult, entry: str, cfg: RunConfig,
              eps_rel: float = 1e-4, tol: float = 1e-3) -> GradcheckReport:
    """Adjoint vs. central finite differences of the compiled primal.

    The adjoint is seeded with ybar = e_1, so it is compared against the
    derivative of the first output component.  Components with x_i = 0 are
    skipped (no relative step is available); components where |fd| < 1e-12
    are compared with absolute error.
    """
    adjoint, stats = run_adjoint(result, entry, cfg)
    rows = []
    for i, xi in enumerate(cfg.x):
        if xi == 0.0:
            rows.append(GradcheckRow(i, adjoint[i], 0.0, 0.0, False, True, True))
            continue
        eps = eps_rel * abs(xi)
        hi = list(cfg.x)
        lo = list(cfg.x)
        hi[i] += eps
        lo[i] -= eps
        up, _ = run_primal(result, entry, _with_x(cfg, hi))
        dn, _ = run_primal(result, entry, _with_x(cfg, lo))
        fd = (up[0] - dn[0]) / (2.0 * eps)
        absolute = abs(fd) < 1e-12
        err = abs(adjoint[i] - fd) if absolute else abs(adjoint[i] - fd) / abs(fd)
        rows.append(GradcheckRow(i, adjoint[i], fd, err, absolute, False, err <= tol))
    return GradcheckReport(rows=tuple(rows), tol=tol, kink_hits=stats.kink_hits)


def _with_x(cfg: RunConfig, x: list) -> RunConfig:
    return RunConfig(x=tuple(x), m=cfg.m, seed=cfg.seed, h=cfg.h,
                     strict_kinks=cfg.strict_kinks, no_pragmas=cfg.no_pragmas,
                     ylen=cfg.ylen)


# -- commands --------------------------------------------------------------


def _compile_input(path: str, no_pragmas: bool) -> CompileResult:
    source = Path(path).read_text()
    return compile_source(source, no_pragmas=no_pragmas)


def _default_entry(result: CompileResult) -> str:
    return result.primal.subs[-1].name


def cmd_compile(args) -> int:
    try:
        result = _compile_input(args.input, args.no_pragmas)
    except CompileError as err:
        print(err, file=sys.stderr)
        return 1
    primal_path, adjoint_path = output_paths(args.input)
    if args.output:
        outdir = Path(args.output)
        outdir.mkdir(parents=True, exist_ok=True)
        primal_path = outdir / primal_path.name
        adjoint_path = outdir / adjoint_path.name
    primal_path.write_text(emit(result.primal))
    adjoint_path.write_text(emit(result.adjoint))
    print(primal_path)
    print(adjoint_path)
    return 0


def _run_config(args) -> RunConfig:
    return RunConfig(
        x=tuple(float(v) for v in args.x.split(",")),
        m=float(args.M),
        seed=args.seed if args.seed is not None else _env_seed(),
        h=args.h if args.h is not None else _env_h(),
        strict_kinks=args.strict_kinks,
        no_pragmas=args.no_pragmas,
    )


def _report_kinks(stats, strict_note: str = "") -> None:
    if stats.kink_hits:
        print(
            f"kink telemetry: {stats.kink_hits} d_gt0 evaluations inside the smoothing band"
            + strict_note,
            file=sys.stderr,
        )


def cmd_run(args) -> int:
    try:
        result = _compile_input(args.input, args.no_pragmas)
    except CompileError as err:
        print(err, file=sys.stderr)
        return 1
    cfg = _run_config(args)
    entry = args.entry or _default_entry(result)
    try:
        if args.adjoint:
            values, stats = run_adjoint(result, entry, cfg)
        else:
            values, stats = run_primal(result, entry, cfg)
    except (SLRuntimeError, KeyError) as err:
        print(f"runtime error: {err}", file=sys.stderr)
        return 2
    for v in values:
        print(f"{v:.17g}")
    _report_kinks(stats)
    return 0


def cmd_gradcheck(args) -> int:
    try:
        result = _compile_input(args.input, args.no_pragmas)
    except CompileError as err:
        print(err, file=sys.stderr)
        return 1
    cfg = _run_config(args)
    entry = args.entry or _default_entry(result)
    try:
        report = gradcheck(result, entry, cfg, eps_rel=args.eps)
    except SLRuntimeError as err:
        print(f"runtime error: {err}", file=sys.stderr)
        return 2
    print(f"{'i':>3} {'adjoint':>24} {'central fd':>24} {'error':>12}  status")
    for row in report.rows:
        if row.skipped:
            print(f"{row.component:>3} {row.adjoint:>24.16g} {'-':>24} {'-':>12}  skipped (x_i = 0)")
            continue
        kind = "abs" if row.absolute else "rel"
        status = "ok" if row.ok else "FAIL"
        print(
            f"{row.component:>3} {row.adjoint:>24.16g} {row.fd:>24.16g} "
            f"{row.error:>12.3e}  {status} ({kind})"
        )
    if report.kink_hits:
        print(f"kink telemetry: {report.kink_hits} evaluations inside the smoothing band",
              file=sys.stderr)
    return 0 if report.ok else 3


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slc",
        description="Adjoint compiler and interpreter for the SL scripting language",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common_run_flags(p):
        p.add_argument("--entry", default=None, help="entry subprogram (default: last defined)")
        p.add_argument("--x", default="100,0.05,0.2,100", help="comma-separated active inputs")
        p.add_argument("--M", default="100000", help="path count bound to the passive parameter")
        p.add_argument("--seed", type=int, default=None, help="PRNG seed (env SL_SEED)")
        p.add_argument("--h", type=float, default=None, help="smoothing half-width (env SL_SMOOTH_H)")
        p.add_argument("--no-pragmas", action="store_true", help="compile with all pragmas disabled")
        p.add_argument("--strict-kinks", action="store_true",
                       help="treat d_gt0 evaluations inside the smoothing band as errors")

    c = sub.add_parser("compile", help="emit primal and adjoint target scripts")
    c.add_argument("input")
    c.add_argument("-o", "--output", default=None, help="output directory")
    c.add_argument("--no-pragmas", action="store_true")
    c.set_defaults(fn=cmd_compile)

    r = sub.add_parser("run", help="compile and execute an entry subprogram")
    r.add_argument("input")
    common_run_flags(r)
    r.add_argument("--adjoint", action="store_true",
                   help="run the adjoint entry (ybar = e_1) and print the input adjoints")
    r.set_defaults(fn=cmd_run)

    g = sub.add_parser("gradcheck", help="compare the adjoint against central finite differences")
    g.add_argument("input")
    common_run_flags(g)
    g.add_argument("--eps", type=float, default=1e-4, help="relative finite-difference step")
    g.set_defaults(fn=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
