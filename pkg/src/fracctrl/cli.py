"""Command-line front end: forward-solver validation, single control solves,
and the convergence studies."""

from __future__ import annotations

import argparse
import sys

from . import harness
from .control import fixed_point_solve, optimality_residual
from .mesh import build_graded, build_uniform_spatial, default_sigmas
from .problem import default_experiment_spec, from_config_text, validate

__all__ = ["main"]


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(","))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.5, help="fractional order in (0,1)")
    p.add_argument("--r", type=float, default=0.0, help="smoothness index in [0,1)")
    p.add_argument("--sigma1", type=float, default=None, help="override grading exponent at t=0")
    p.add_argument("--sigma2", type=float, default=None, help="override grading exponent at t=T")
    p.add_argument("--tol", type=float, default=1e-13, help="fixed-point stopping tolerance")
    p.add_argument("--max-iter", type=int, default=200, help="fixed-point iteration cap")
    p.add_argument("--theta", type=float, default=1.0, help="fixed-point damping in (0,1]")
    p.add_argument("--out", type=str, default=None, help="output file")
    p.add_argument("--format", dest="fmt", choices=("text", "csv"), default="text")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fracctrl",
        description="graded-grid solver for box-constrained control of "
                    "time-fractional diffusion")
    sub = ap.add_subparsers(dest="command", required=True)

    fp = sub.add_parser("forward", help="validate the forward solver against "
                                        "the exact eigen-expansion")
    _add_common(fp)
    fp.add_argument("--m", type=int, default=8, help="temporal levels: M = 2^m")
    fp.add_argument("--n", type=int, default=128, help="spatial cells: h = 1/n")

    op = sub.add_parser("ocp", help="solve one control problem instance")
    _add_common(op)
    op.add_argument("--m", type=int, default=8)
    op.add_argument("--n", type=int, default=64)
    op.add_argument("--config", type=str, default=None,
                    help="problem spec from a key = value file")

    st = sub.add_parser("study", help="convergence study along one axis")
    _add_common(st)
    st.add_argument("axis", choices=("spatial", "temporal"))
    st.add_argument("--m", type=_int_list, default=None,
                    help="spatial study: fixed m; temporal study: comma list of rows")
    st.add_argument("--n", type=_int_list, default=None,
                    help="spatial study: comma list of rows; temporal study: fixed n")
    st.add_argument("--m-ref", type=int, default=None)
    st.add_argument("--n-ref", type=int, default=None)
    st.add_argument("--uniform", action="store_true",
                    help="run the rows on uniform temporal grids")
    st.add_argument("--paper-scale", action="store_true",
                    help="full-scale references (m=14 / n=512)")
    return ap


def _cmd_forward(args) -> int:
    err = harness.forward_single_mode_error(
        args.alpha, args.m, args.n, r=args.r,
        sigma1=args.sigma1, sigma2=args.sigma2)
    print(f"forward solve m={args.m} n={args.n} alpha={args.alpha}: "
          f"L2(L2) error vs exact eigen-expansion = {err:.6e}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(f"m,n,alpha,error\n{args.m},{args.n},{args.alpha},{err!r}\n")
    return 0


def _cmd_ocp(args) -> int:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            spec = from_config_text(fh.read())
    else:
        spec = default_experiment_spec(args.alpha, args.r)
    bad = validate(spec)
    if bad:
        raise ValueError(f"invalid problem spec, offending fields: {', '.join(bad)}")
    s1d, s2d = default_sigmas(spec.alpha, spec.r)
    tgrid = build_graded(2 ** args.m,
                         s1d if args.sigma1 is None else args.sigma1,
                         s2d if args.sigma2 is None else args.sigma2, spec.T)
    xgrid = build_uniform_spatial(args.n)
    U, Y, P, report = fixed_point_solve(spec, tgrid, xgrid, tol=args.tol,
                                        max_iter=args.max_iter, theta=args.theta)
    res = optimality_residual(U, Y, P, spec)
    print(f"converged in {report.iterations} iterations, "
          f"final increment {report.final_increment:.3e}")
    print(f"J = {report.total:.10e} (tracking {report.tracking:.10e}, "
          f"penalty {report.penalty:.10e})")
    print(f"optimality residual = {res:.3e}")
    if args.out:
        ts = tgrid.nodes[1:]
        sampled = U.sample_lattice(ts - 0.5 * tgrid.widths, xgrid.nodes)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("t,x,value\n")
            for row, tk in zip(sampled, ts):
                for x, v in zip(xgrid.nodes, row):
                    fh.write(f"{float(tk)!r},{float(x)!r},{float(v)!r}\n")
        print(f"control samples written to {args.out}")
    return 0


def _cmd_study(args) -> int:
    if args.axis == "spatial":
        defaults = harness.PAPER_SPATIAL if args.paper_scale else harness.SPATIAL_DEFAULTS
        if args.uniform:
            raise ValueError("spatial studies run on graded temporal grids")
        m_fix = args.m[0] if args.m else defaults["m_fix"]
        ns = args.n if args.n else defaults["ns"]
        n_ref = args.n_ref if args.n_ref else defaults["n_ref"]
        cfg = harness.ExperimentConfig(
            kind="spatial-study", alpha=args.alpha, r=args.r, grading="graded",
            points=tuple(ns), reference=n_ref, fixed=m_fix, tol=args.tol,
            max_iter=args.max_iter, theta=args.theta, sigma1=args.sigma1,
            sigma2=args.sigma2, out=args.out, fmt=args.fmt)
        table = harness.run_spatial_study(cfg)
    else:
        defaults = harness.PAPER_TEMPORAL if args.paper_scale else harness.TEMPORAL_DEFAULTS
        ms = args.m if args.m else defaults["ms"]
        n_fix = args.n[0] if args.n else defaults["n_fix"]
        m_ref = args.m_ref if args.m_ref else defaults["m_ref"]
        cfg = harness.ExperimentConfig(
            kind="temporal-study", alpha=args.alpha, r=args.r,
            grading="uniform" if args.uniform else "graded",
            points=tuple(ms), reference=m_ref, fixed=n_fix, tol=args.tol,
            max_iter=args.max_iter, theta=args.theta, sigma1=args.sigma1,
            sigma2=args.sigma2, out=args.out, fmt=args.fmt)
        table = harness.run_temporal_study(cfg)
    text = harness.emit_table(table, fmt=args.fmt, path=args.out)
    sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "forward":
            return _cmd_forward(args)
        if args.command == "ocp":
            return _cmd_ocp(args)
        return _cmd_study(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
