"""Command line driver: single solves, convergence sweeps and verification.

Exit codes: 0 success, 2 invalid configuration, 3 solver failure, 4 a
verification criterion failed.
"""

from __future__ import annotations

import argparse
import sys

from .geometry import BIUNIT, UNIT
from .solvers import SolverFailureError

DOMAINS = {"unit": UNIT, "biunit": BIUNIT}


def _int_list(text: str):
    return tuple(int(part) for part in text.split(",") if part != "")


def _float_list(text: str):
    return tuple(float(part) for part in text.split(",") if part != "")


def _elements(text: str):
    try:
        mx, my = text.lower().split("x")
        return int(mx), int(my)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("elements must look like 4x4") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msem2d",
        description="Mimetic spectral element Poisson solves on single and dual grids.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve the manufactured problem once")
    p_solve.add_argument("--method", choices=("dual", "single"), required=True)
    p_solve.add_argument("--order", type=int, required=True, help="polynomial order N")
    p_solve.add_argument("--elements", type=_elements, required=True, metavar="MxM")
    p_solve.add_argument("--c", type=float, default=0.0, help="mesh deformation coefficient")
    p_solve.add_argument("--domain", choices=tuple(DOMAINS), default="unit")
    p_solve.add_argument("--out", required=True, help="CSV output path")
    p_solve.add_argument("--quad-order", type=int, default=None)
    p_solve.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True,
                         help="render the solution field next to the CSV")

    p_conv = sub.add_parser("convergence", help="run an h- or p-convergence sweep")
    p_conv.add_argument("--sweep", choices=("h", "p"), required=True)
    p_conv.add_argument("--method", choices=("dual", "single", "both"), default="both")
    p_conv.add_argument("--orders", type=_int_list, default=(1, 2, 3), metavar="LIST")
    p_conv.add_argument("--mesh-levels", type=_int_list, default=None, metavar="LIST")
    p_conv.add_argument("--c-list", type=_float_list, default=(0.0, 0.1, 0.2), metavar="LIST")
    p_conv.add_argument("--domain", choices=tuple(DOMAINS), default="unit")
    p_conv.add_argument("--out", required=True, help="CSV output path")
    p_conv.add_argument("--quad-order", type=int, default=None)
    p_conv.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True,
                        help="render convergence figures next to the CSV")

    p_verify = sub.add_parser("verify", help="run the acceptance criteria")
    p_verify.add_argument("--criteria", type=_int_list, default=None, metavar="LIST",
                          help="subset of criteria numbers, default all")
    return parser


def _cmd_solve(args) -> int:
    from .harness import run_solve, write_records_csv
    from .plots import solution_figure

    mx, my = args.elements
    sol, record = run_solve(
        args.method, args.order, mx, my, args.c, DOMAINS[args.domain], args.quad_order
    )
    write_records_csv(args.out, [record])
    print(f"wrote {args.out}")
    print(
        f"l2_omega={record.l2_omega:.6e} l2_q={record.l2_q:.6e} "
        f"conservation={record.linf_conservation:.3e} dof={record.dof}"
    )
    if args.figures:
        print(f"wrote {solution_figure(sol, args.out)}")
    return 0


def _cmd_convergence(args) -> int:
    from .harness import ExperimentConfig, run_h_convergence, run_p_convergence, write_records_csv
    from .plots import h_convergence_figure, p_convergence_figure

    methods = ("dual", "single") if args.method == "both" else (args.method,)
    if args.mesh_levels is None:
        levels = (2, 4, 8, 16) if args.sweep == "h" else (2, 4)
    else:
        levels = args.mesh_levels
    cfg = ExperimentConfig(
        methods=methods,
        orders=args.orders,
        mesh_levels=levels,
        c_list=args.c_list,
        domain=DOMAINS[args.domain],
        quad_order=args.quad_order,
    )
    if args.sweep == "h":
        records, slopes = run_h_convergence(cfg)
        write_records_csv(args.out, records)
        print(f"wrote {args.out}")
        for (method, order, c), (s_o, s_q) in sorted(slopes.items()):
            print(f"{method:>6} N={order} c={c}: slope omega {s_o:.3f}, slope q {s_q:.3f}")
        if args.figures:
            for path in h_convergence_figure(records, slopes, args.out):
                print(f"wrote {path}")
    else:
        records, references = run_p_convergence(cfg)
        write_records_csv(args.out, records + references)
        print(f"wrote {args.out}")
        if args.figures:
            for path in p_convergence_figure(records, references, args.out):
                print(f"wrote {path}")
    return 0


def _cmd_verify(args) -> int:
    from .acceptance import CRITERIA, run_all

    numbers = args.criteria or sorted(CRITERIA)
    unknown = [n for n in numbers if n not in CRITERIA]
    if unknown:
        raise ValueError(f"unknown criteria {unknown}; valid: {sorted(CRITERIA)}")
    results = run_all(numbers)
    return 0 if all(r.passed for r in results) else 4


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "convergence":
            return _cmd_convergence(args)
        return _cmd_verify(args)
    except SolverFailureError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
