"""Command-line entry point.

Exit codes: 0 success, 1 invalid input, 2 solver non-convergence, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import __version__
from .analysis import (
    DEFAULT_SAFETY,
    ThresholdUndefined,
    beta,
    c1_constant,
    c2_constant,
    c3_constant,
    critical_threshold,
    estimate_c_star,
    estimate_checks,
    estimate_k_constants,
    gamma_l,
    uniqueness_threshold,
)
from .evolution import MarchConfig, march, project_to_boundary_conditions
from .forcing import ForcingDescriptor, manufactured_solution
from .grid import Grid, GridFunction, l2_norm, weighted_f2
from .io import ConfigError, RunConfig, atomic_write_text, load_config, write_csv, write_svg_plot
from .nonlinear import SolveReport, solve
from .operator import ProblemSpec, forcing_values, min_intervals

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED, EXIT_IO = 0, 1, 2, 3
DEFAULT_CSTAR_TRIALS = 200
# the K constants enter only the l = 1 uniqueness thresholds at i = 1, theta = 1/2
K_ORDER, K_THETA = 1, 0.5

log = logging.getLogger("dispersive_bvp")


class UsageError(Exception):
    def __init__(self, message: str, usage: str):
        super().__init__(message)
        self.usage = usage


class NonConvergence(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, self.format_usage())


def _fmt(v) -> str:
    if v is None:
        return "undefined"
    return f"{v:.7g}"


def _c_star(l: int, L: float, trials: int, seed: int) -> float:
    rep = estimate_c_star(l, L, trials=trials, seed=seed)
    return rep.c_star_lower


def _solve(cfg: RunConfig, grid: Grid | None = None) -> SolveReport:
    grid = grid or cfg.grid()
    rep = solve(cfg.spec(), grid, cfg.solver, cfg.tol, cfg.effective_max_iter)
    if not rep.converged:
        raise NonConvergence(
            f"{rep.method} did not converge after {rep.iterations} iterations "
            f"(lambda reached {rep.final_lambda:g}): {rep.message}"
        )
    return rep


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_(seed=args.seed)
    return cfg


def _manufactured_errors(cfg: RunConfig, Ns) -> list[float]:
    u_star = manufactured_solution(cfg.l, cfg.L)
    errs = []
    for N in Ns:
        rep = _solve(cfg, Grid(cfg.L, N))
        errs.append(float(np.max(np.abs(rep.solution.values - u_star(rep.solution.grid.nodes)))))
    return errs


def cmd_solve(args) -> int:
    cfg = _config(args)
    grid = cfg.grid()
    rep = _solve(cfg, grid)
    u = rep.solution
    spec = cfg.spec()
    c_star = _c_star(cfg.l, cfg.L, args.cstar_trials, cfg.seed)
    checks = estimate_checks(u, spec, grid, c_star)
    lines = [
        f"# method {rep.method} iterations {rep.iterations} defect {rep.final_residual:.3e}",
        f"# L {cfg.L!r} l {cfg.l} k {cfg.k} a {cfg.a!r} N {cfg.N} case {spec.case}",
        f"# forcing {cfg.forcing.to_text()}",
        f"# ||u|| {l2_norm(u):.10g} ||u||_inf {np.max(np.abs(u.values)):.10g}",
        f"# c_star_lower {c_star:.10g} (trials {args.cstar_trials}, seed {cfg.seed})",
    ]
    if cfg.forcing.kind == "manufactured":
        coarse = cfg.N // 2
        if coarse >= min_intervals(cfg.l):
            e_c, e_f = _manufactured_errors(cfg, (coarse, cfg.N))
            order = math.log2(e_c / e_f) if e_f > 0 else math.inf
            lines.append(f"# manufactured max_error {e_f:.6e} observed_order {order:.4f} "
                         f"(N {coarse} -> {cfg.N})")
        else:
            (e_f,) = _manufactured_errors(cfg, (cfg.N,))
            lines.append(f"# manufactured max_error {e_f:.6e}")
    lines += [c.line() for c in checks]
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        write_csv(u, args.out)
    if args.svg:
        write_svg_plot({"u": (grid.nodes, u.values)}, args.svg, title="stationary solution",
                       xlabel="x", ylabel="u")
    if args.report:
        atomic_write_text(args.report, text)
    return EXIT_OK


def cmd_march(args) -> int:
    cfg = _config(args)
    grid = cfg.grid()
    mcfg = MarchConfig(cfg.L, cfg.l, cfg.k, args.h, args.steps, grid, cfg.solver, cfg.tol,
                       cfg.max_iter)
    desc = ForcingDescriptor.parse(args.u0)
    raw = desc.evaluate(grid.nodes, ProblemSpec(cfg.L, cfg.l, cfg.k, 1.0 / args.h))
    u0 = project_to_boundary_conditions(GridFunction(grid, raw), cfg.l)
    shift = float(np.max(np.abs(u0.values - raw)))
    traj = march(u0, mcfg)
    print(f"# initial state {desc.to_text()} (boundary projection changed it by {shift:.3e})")
    print("t l2_norm sup_norm boundary_derivative")
    for t, n2, ns, bd in zip(traj.times, traj.l2_norms, traj.sup_norms, traj.boundary_derivatives):
        print(f"{t:.10g} {n2:.10g} {ns:.10g} {bd:.10g}")
    if args.out:
        write_csv(traj, args.out)
    if args.svg:
        write_svg_plot({"||u^n||": (traj.times, traj.l2_norms)}, args.svg,
                       title="L2 norm along the march", xlabel="t", ylabel="||u||")
    if not traj.completed:
        raise NonConvergence(f"march truncated at {traj.failure}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args)
    grid = cfg.grid()
    spec = cfg.spec()
    rep = _solve(cfg, grid)
    c_rep = estimate_c_star(cfg.l, cfg.L, trials=args.cstar_trials, seed=cfg.seed)
    c_star = c_rep.c_star_lower
    f = GridFunction(grid, forcing_values(spec, grid))
    f_l2, wf2 = l2_norm(f), weighted_f2(f)
    print(f"# solve: {rep.method}, {rep.iterations} iterations, defect {rep.final_residual:.3e}")
    print(f"# c_star_lower {c_star:.10g}; ||f|| {f_l2:.10g}; sqrt(wf2) {math.sqrt(wf2):.10g}")
    k1 = k2 = None
    if cfg.l == 1:
        k_rep = estimate_k_constants(1, K_ORDER, K_THETA, cfg.L, trials=args.k_trials, seed=cfg.seed)
        k1, k2 = k_rep.k1_lower, k_rep.k2_lower
        print(f"# k_lower {k1:.10g} (i={K_ORDER}, theta={K_THETA})")
    th = uniqueness_threshold(cfg.l, cfg.k, cfg.a, c_star, k1, k2, f_l2, args.safety)
    below = math.sqrt(wf2) < th.safe
    print(f"# uniqueness ({th.case}) raw {_fmt(th.raw)} safe {_fmt(th.safe)}: "
          f"forcing {'below' if below else 'not below'} the safe threshold")
    if spec.is_critical:
        crit = critical_threshold(cfg.l, cfg.a, c_star)
        print(f"# critical threshold raw {_fmt(crit)} safe {_fmt(crit / args.safety)}")
    for c in estimate_checks(rep.solution, spec, grid, c_star):
        print(c.line())
    return EXIT_OK


def cmd_gn_estimate(args) -> int:
    seed = 0 if args.seed is None else args.seed
    grid = Grid(args.length, args.N) if args.N else None
    rep = estimate_c_star(args.l, args.length, grid=grid, trials=args.trials, seed=seed)
    print(f"c_star_lower {rep.c_star_lower:.10g}")
    print(f"l {rep.l} L {rep.L!r} trials {rep.trials} seed {seed}")
    print(f"best_trial {rep.best_trial['trial']} ({rep.best_trial['kind']})")
    if args.l == 1:
        print(f"sine_trial {rep.history[0]:.10g} (sqrt(2/pi) = {math.sqrt(2 / math.pi):.10g})")
    return EXIT_OK


def cmd_thresholds(args) -> int:
    l, k, a, cs = args.l, args.k, args.a, args.cstar
    ProblemSpec(1.0, l, k, a)  # validates the admissible range
    print(f"beta {_fmt(beta(a))}")
    if k < 4 * l:
        print(f"C1 {_fmt(c1_constant(l, k, cs))}")
        print(f"C3 {_fmt(c3_constant(l, k, a, cs))}")
        print(f"C2 {_fmt(c2_constant(l, k, a, cs, args.wf2))} (wf2 {args.wf2:g})")
    else:
        crit = critical_threshold(l, a, cs)
        print(f"critical_threshold {_fmt(crit)} (safe {_fmt(crit / args.safety)}, "
              f"safety {args.safety:g})")
        try:
            g = gamma_l(l, a, cs, args.f_l2)
        except ThresholdUndefined:
            g = None
        print(f"gamma_l {_fmt(g)} (||f|| {args.f_l2:g})")
    k1, k2 = args.k1, args.k2
    if l == 1 and (k1 is None or k2 is None):
        seed = 0 if args.seed is None else args.seed
        est = estimate_k_constants(1, K_ORDER, K_THETA, args.length, trials=args.k_trials, seed=seed)
        k1 = est.k1_lower if k1 is None else k1
        k2 = est.k2_lower if k2 is None else k2
        print(f"k_lower {_fmt(est.k1_lower)} (estimated, i={K_ORDER}, theta={K_THETA}, seed {seed})")
    th = uniqueness_threshold(l, k, a, cs, k1, k2, args.f_l2, args.safety)
    print(f"uniqueness_threshold {_fmt(th.raw)} (safe {_fmt(th.safe)}, case {th.case})")
    for name, v in th.terms.items():
        print(f"  {name} {_fmt(v)}")
    if th.note:
        print(f"  note: {th.note}")
    if args.wf2 > 0:
        ok = math.sqrt(args.wf2) < th.safe
        print(f"sqrt(wf2) {_fmt(math.sqrt(args.wf2))} {'<' if ok else '>='} safe threshold")
    return EXIT_OK


def cmd_convergence(args) -> int:
    cfg = _config(args)
    if args.levels < 2:
        raise ValueError(f"--levels must be >= 2, got {args.levels}")
    if cfg.forcing.kind != "manufactured":
        print(f"# forcing {cfg.forcing.to_text()!r} replaced by the manufactured forcing")
        cfg = cfg.with_(forcing=ForcingDescriptor("manufactured"))
    Ns = [args.base_n * 2**i for i in range(args.levels)]
    for N in Ns:
        if N < min_intervals(cfg.l):
            raise ValueError(f"N={N} too small for l={cfg.l}; raise --base-n")
    errs = _manufactured_errors(cfg, Ns)
    print("N max_error order")
    prev = None
    orders = []
    for N, e in zip(Ns, errs):
        order = math.log2(prev / e) if prev is not None and e > 0 else None
        if order is not None:
            orders.append(order)
        print(f"{N} {e:.6e} {'-' if order is None else f'{order:.4f}'}")
        prev = e
    print(f"# mean order {np.mean(orders):.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dispersive-bvp", description="Odd-order dispersive boundary value problems.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("solve", help="stationary solve with estimate checks")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--svg")
    s.add_argument("--report")
    s.add_argument("--seed", type=int)
    s.add_argument("--cstar-trials", type=int, default=DEFAULT_CSTAR_TRIALS)
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("march", help="implicit time marching")
    m.add_argument("--config", required=True)
    m.add_argument("--h", type=float, required=True)
    m.add_argument("--steps", type=int, required=True)
    m.add_argument("--u0", required=True, help="initial state as a forcing descriptor")
    m.add_argument("--out")
    m.add_argument("--svg")
    m.add_argument("--seed", type=int)
    m.set_defaults(func=cmd_march)

    v = sub.add_parser("verify", help="solve and run the full estimate suite")
    v.add_argument("--config", required=True)
    v.add_argument("--seed", type=int)
    v.add_argument("--safety", type=float, default=DEFAULT_SAFETY)
    v.add_argument("--cstar-trials", type=int, default=DEFAULT_CSTAR_TRIALS)
    v.add_argument("--k-trials", type=int, default=50)
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("gn-estimate", help="lower bound for the interpolation constant")
    g.add_argument("--l", type=int, required=True)
    g.add_argument("--length", type=float, default=1.0)
    g.add_argument("--trials", type=int, default=DEFAULT_CSTAR_TRIALS)
    g.add_argument("--seed", type=int)
    g.add_argument("--N", type=int, help="sup-norm sampling intervals")
    g.set_defaults(func=cmd_gn_estimate)

    t = sub.add_parser("thresholds", help="constants and smallness thresholds")
    t.add_argument("--l", type=int, required=True)
    t.add_argument("--k", type=int, required=True)
    t.add_argument("--a", type=float, required=True)
    t.add_argument("--cstar", type=float, required=True)
    t.add_argument("--wf2", type=float, default=0.0)
    t.add_argument("--f-l2", type=float, default=0.0)
    t.add_argument("--safety", type=float, default=DEFAULT_SAFETY)
    t.add_argument("--k1", type=float)
    t.add_argument("--k2", type=float)
    t.add_argument("--length", type=float, default=1.0)
    t.add_argument("--k-trials", type=int, default=50)
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_thresholds)

    c = sub.add_parser("convergence", help="manufactured-solution refinement study")
    c.add_argument("--config", required=True)
    c.add_argument("--levels", type=int, default=4)
    c.add_argument("--base-n", type=int, default=64)
    c.add_argument("--seed", type=int)
    c.set_defaults(func=cmd_convergence)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required", parser.format_usage())
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(exc.usage, end="", file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


run_command = main

if __name__ == "__main__":
    sys.exit(main())
